#include "rgflow/sumrules.hpp"

#include <cmath>

namespace rg {

SumRuleReport soft_sum_rule(const KernelFamily& fam) {
  SumRuleReport rep;
  if (!fam.has(1, 0)) return rep;
  const WickKernel& w10 = fam.at(1, 0);

  // Soft collapse: node 0 is the exact x = 0 slot.
  const std::array<double, 1> soft{0.0};
  const auto cols = w10.collapse_at(soft);

  const NormLattice lat = default_norm_lattice();
  const auto samples = default_tag_samples1();

  std::vector<double> lhs, rhs;
  lhs.reserve(lat.X.size() * samples.size());
  rhs.reserve(lhs.capacity());
  const std::array<XPoly15, 3> gradT{fam.T.ddx(1), fam.T.ddx(2), fam.T.ddx(3)};
  for (const auto& X : lat.X) {
    for (const auto& s : samples) {
      XPoly15 prim;
      for (int t = 0; t < tag_count(1); ++t)
        prim += mul_trunc2(
            tag_poly(1, t, s.eps, s.khat, s.eps, s.khat, fam.phat), cols[t]);
      lhs.push_back(prim.eval(X));
      double dv = 0.0;
      for (int j = 0; j < 3; ++j) dv += s.eps[j] * gradT[j].eval(X);
      rhs.push_back(fam.g * dv);
    }
  }

  double rr = 0.0, lr = 0.0, sup_rhs = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    rr += rhs[i] * rhs[i];
    lr += lhs[i] * rhs[i];
    sup_rhs = std::max(sup_rhs, std::abs(rhs[i]));
  }
  rep.rhs_scale = sup_rhs;
  rep.mu_hat = (rr > 0.0) ? lr / rr : 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i)
    rep.residual_sup =
        std::max(rep.residual_sup, std::abs(lhs[i] - rep.mu_hat * rhs[i]));
  return rep;
}

}  // namespace rg
