#include "rgflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rg {

Rule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n < 1");
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi-type initial guess, then Newton on P_n.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    r.w[n - 1 - i] = r.w[i];
  }
  return r;
}

Rule1D gauss_legendre(int n, double a, double b) {
  Rule1D base = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    base.x[i] = mid + half * base.x[i];
    base.w[i] *= half;
  }
  return base;
}

Rule1D composite_gauss(int n_total, std::span<const double> breakpoints,
                       double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("composite_gauss: empty range");
  std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
  std::erase_if(cuts, [&](double c) { return c <= lo + 1e-14 || c >= hi - 1e-14; });
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-13; }),
             cuts.end());

  Rule1D out;
  const int nseg = static_cast<int>(cuts.size()) - 1;
  for (int s = 0; s < nseg; ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    int n = static_cast<int>(std::lround(n_total * (b - a) / (hi - lo)));
    n = std::max(n, 6);
    Rule1D seg = gauss_legendre(n, a, b);
    out.x.insert(out.x.end(), seg.x.begin(), seg.x.end());
    out.w.insert(out.w.end(), seg.w.begin(), seg.w.end());
  }
  return out;
}

AngularRule sphere_product(int n_cos, int n_phi) {
  AngularRule rule;
  rule.n_cos = n_cos;
  rule.n_phi = n_phi;
  const Rule1D ct = gauss_legendre(n_cos, -1.0, 1.0);
  const double dphi = 2.0 * M_PI / n_phi;
  rule.dir.reserve(static_cast<std::size_t>(n_cos) * n_phi);
  rule.w.reserve(rule.dir.capacity());
  for (int i = 0; i < n_cos; ++i) {
    const double c = ct.x[i], s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = dphi * (j + 0.5);
      rule.dir.emplace_back(s * std::cos(phi), s * std::sin(phi), c);
      rule.w.push_back(ct.w[i] * dphi);
    }
  }
  return rule;
}

Eigen::Matrix3d transverse_projector(const Eigen::Vector3d& khat) {
  return Eigen::Matrix3d::Identity() - khat * khat.transpose();
}

std::array<Eigen::Vector3d, 2> polarization_pair(const Eigen::Vector3d& khat) {
  // Deterministic: seed with the coordinate axis least aligned with khat.
  int imin = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(khat[i]) < std::abs(khat[imin])) imin = i;
  Eigen::Vector3d seed = Eigen::Vector3d::Zero();
  seed[imin] = 1.0;
  Eigen::Vector3d e1 = khat.cross(seed).normalized();
  Eigen::Vector3d e2 = khat.cross(e1);
  return {e1, e2};
}

}  // namespace rg
