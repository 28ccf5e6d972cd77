#include "rgflow/spectral.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

namespace rg {

namespace {
template <class F>
double quad01(F&& f, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      std::forward<F>(f), 0.0, hi, 10, 1e-13);
}
}  // namespace

double tilde_c2(const FormFactor& kappa) {
  const auto f = [&](double x) {
    const double k = kappa.kappa(x);
    return k * k / (1.0 + 0.5 * x);
  };
  return quad01(f, kappa.uv);
}

LeadingConstants leading_constants(const FormFactor& kappa, const Cutoff& chi1,
                                   double rho) {
  LeadingConstants lc;
  const Cutoff chir = chi1.scaled(rho);
  const auto cb2 = [](const Cutoff& c, double x) {
    const double cb = c.chibar(x);
    return cb * cb;
  };
  const auto c2v = [](const Cutoff& c, double x) {
    const double cv = c.chi(x);
    return cv * cv;
  };
  lc.C_minus1 = quad01(
      [&](double x) {
        const double k2 = [&] {
          const double k = kappa.kappa(x);
          return k * k;
        }();
        const double b1 = cb2(chi1, x);
        return k2 * b1 / (1.0 + 0.5 * x * b1);
      },
      kappa.uv);
  // Scale-0 slice with the seam-dressed kernels and free part: the squared
  // overlap factor in the numerator and the seam correction to T in the
  // denominator.
  lc.C_0 = quad01(
      [&](double x) {
        const double k = kappa.kappa(x);
        const double b1 = cb2(chi1, x);
        const double c1 = c2v(chi1, x);
        const double br = cb2(chir, x);
        const double ups = 1.0 - 0.5 * x * b1 / (1.0 + 0.5 * x * b1);
        const double den = 1.0 + 0.5 * x * c1 * br -
                           0.25 * x * x * b1 * c1 / (1.0 + 0.5 * x * b1);
        return k * k * br * c1 * ups * ups / den;
      },
      std::min(1.0, kappa.uv));
  lc.composed = quad01(
      [&](double x) {
        const double k = kappa.kappa(x);
        const double br = cb2(chir, x);
        return k * k * br / (1.0 + 0.5 * x * br);
      },
      kappa.uv);
  lc.tc = tilde_c2(kappa);
  return lc;
}

// ---------------------------------------------------------------------------
// Chain solve
// ---------------------------------------------------------------------------

FlowChain solve_chain(const ModelParams& mp, int n_scales,
                      const FlowOptions* opt_in,
                      std::shared_ptr<const RadialGrid> grid) {
  FlowChain ch;
  ch.mp = mp;
  const int nfam = n_scales + 1;  // scales -1 .. n_scales-1
  ch.e.assign(nfam, 0.0);

  KernelFamily phys = initial_family(mp, 0.0, std::move(grid));
  const double slot0 = phys.E;  // p^2/2 + (g^2/2)<A^2> at z = 0
  ch.opt = opt_in ? *opt_in : default_flow_options(phys);

  // Initial forward build at zero slots.
  ch.fam.clear();
  ch.rec.clear();
  ch.fam.push_back(phys);
  ch.fam[0].E = slot0;
  ch.e[0] = slot0;
  for (int i = 0; i + 1 < nfam; ++i) {
    StepRecord rec;
    ch.fam.push_back(rg_step(ch.fam[i], ch.opt, &rec));
    ch.rec.push_back(rec);
    ch.e[i + 1] = ch.fam[i + 1].E;
  }
  // Closure: the chain terminates with a zero slot at the deepest scale.
  ch.e[nfam - 1] = 0.0;
  ch.fam[nfam - 1].E = 0.0;

  const int max_sweeps = 4;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    // Backward pass: solve E_map_i(x) = rho_eff(i) * e_{i+1} by secant with
    // frozen kernels, closing with e_N = 0.
    double target = 0.0;
    double max_shift = 0.0;
    for (int i = nfam - 2; i >= 0; --i) {
      const double re = ch.rho_eff(i);
      const double rhs = re * target;
      double x0 = ch.e[i];
      double f0 = E_of_z(ch.fam[i], ch.opt, x0) - rhs;
      // The slot direction is near-unit slope; a well-scaled second point.
      double x1 = x0 - f0;
      for (int it = 0; it < 30; ++it) {
        double f1 = E_of_z(ch.fam[i], ch.opt, x1) - rhs;
        if (std::abs(f1) < 1e-14 * std::max(1.0, std::abs(rhs))) {
          x0 = x1;
          break;
        }
        if (f1 == f0) break;
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
      }
      max_shift = std::max(max_shift, std::abs(x1 - ch.e[i]));
      ch.e[i] = x1;
      target = ch.e[i];
    }

    // Forward rebuild with the solved slots.
    ch.fam.resize(1);
    ch.rec.clear();
    ch.fam[0].E = ch.e[0];
    for (int i = 0; i + 1 < nfam; ++i) {
      StepRecord rec;
      ch.fam.push_back(rg_step(ch.fam[i], ch.opt, &rec));
      ch.rec.push_back(rec);
      ch.fam[i + 1].E = ch.e[i + 1];
    }
    ch.sweeps = sweep + 1;
    if (max_shift < 1e-13 * std::max(1.0, std::abs(ch.e[0]))) break;
  }

  ch.chain_residual = 0.0;
  for (int i = nfam - 2; i >= 0; --i) {
    const double lhs = E_of_z(ch.fam[i], ch.opt, ch.e[i]);
    const double rhs = ch.rho_eff(i) * ch.e[i + 1];
    ch.chain_residual = std::max(ch.chain_residual, std::abs(lhs - rhs));
  }
  for (const auto& r : ch.rec) ch.budget.merge(r.budget);
  return ch;
}

double ground_energy_of_chain(const FlowChain& ch) {
  const FormFactor ff = ch.mp.form_factor();
  const double slot0 =
      0.5 * ch.mp.p * ch.mp.p + 0.5 * ch.mp.g * ch.mp.g * a2_physical(ff);
  // slot = slot0 - z at scale -1, so z* = slot0 - e[0].
  return slot0 - ch.e[0];
}

double ground_energy(const ModelParams& mp, int n_scales,
                     const FlowOptions* opt) {
  return ground_energy_of_chain(solve_chain(mp, n_scales, opt));
}

// ---------------------------------------------------------------------------
// Renormalized mass
// ---------------------------------------------------------------------------

MassResult renormalized_mass_from_chain(const FlowChain& ch) {
  MassResult mr;
  const int h33 = Jet2::hidx(3, 3);
  for (const auto& rec : ch.rec) {
    const double w =
        std::pow(ch.mp.rho, -std::max(rec.scale_from, 0));
    mr.sum_dg1 += rec.dgamma.g[0];
    mr.sum_dg2w += w * rec.dgamma.h[h33];
  }
  mr.m_star = (1.0 + mr.sum_dg1) / (1.0 + mr.sum_dg2w);
  mr.zeta_star = ch.e[0];
  mr.E_ground = ground_energy_of_chain(ch);
  mr.budget = ch.budget;
  return mr;
}

MassResult renormalized_mass(const ModelParams& mp, int n_scales,
                             const FlowOptions* opt) {
  return renormalized_mass_from_chain(solve_chain(mp, n_scales, opt));
}

// ---------------------------------------------------------------------------
// Free comparison
// ---------------------------------------------------------------------------

XPoly15 T0_free(double p, double lambda) {
  XPoly15 T;
  T.lin(0) = 1.0;
  T.lin(3) = -p;
  for (int i = 1; i < 4; ++i) T.quad(i, i) = lambda;
  return T;
}

double lambda_channel(const XPoly15& T) {
  return (T.quad(1, 1) + T.quad(2, 2) + T.quad(3, 3)) / 3.0;
}

// ---------------------------------------------------------------------------
// Measured constants
// ---------------------------------------------------------------------------

namespace {

// Region-split sharp seminorm of a quadratic T-perturbation: sup over the
// lattice of |d_{X0} D| + sum over spatial first/second derivatives, taken
// separately over the inner (X0 <= 3/4) and outer regions.
struct RegionNorms {
  double inner = 0.0, outer = 0.0;
};
RegionNorms t_sharp_region(const XPoly15& D, const NormLattice& lat) {
  RegionNorms rn;
  std::array<XPoly15, 4> d1;
  for (int i = 0; i < 4; ++i) d1[i] = D.ddx(i);
  for (const auto& X : lat.X) {
    double s = std::abs(d1[0].eval(X));
    for (int i = 1; i < 4; ++i) s += std::abs(d1[i].eval(X));
    for (int i = 1; i < 4; ++i)
      for (int j = i; j < 4; ++j) {
        const double c = D.quad(i, j);
        s += std::abs((i == j) ? 2.0 * c : c);
      }
    auto& slot = (X[0] <= 0.75) ? rn.inner : rn.outer;
    slot = std::max(slot, s);
  }
  return rn;
}

}  // namespace

FlowConstants flow_constants(const ModelParams& mp, const FlowOptions* opt_in) {
  FlowConstants fc;
  ModelParams free_mp = mp;
  free_mp.g = 0.0;
  KernelFamily base = initial_family(free_mp, 0.0);
  base.E = 0.0;
  FlowOptions opt = opt_in ? *opt_in : default_flow_options(base);

  // C_Theta over both sectors and a flowed reduced family.
  fc.C_Theta = std::max(measure_C_Theta(base, opt), 1.0);
  KernelFamily red = rg_step(base, opt);
  red.E = 0.0;
  fc.C_Theta = std::max(fc.C_Theta, measure_C_Theta(red, opt));

  // K_Theta: outer response of one free step to inner T-perturbations.
  const NormLattice lat = default_norm_lattice();
  double kmax = 1.0;
  std::vector<XPoly15> perts;
  {
    XPoly15 a;
    a.quad(0, 0) = 1.0;
    perts.push_back(a);
    XPoly15 b;
    b.quad(0, 3) = 1.0;
    perts.push_back(b);
    XPoly15 c;
    c.quad(3, 3) = 1.0;
    perts.push_back(c);
    XPoly15 d;
    d.lin(0) = 1.0;
    perts.push_back(d);
  }
  const double eps = 1e-4;
  const KernelFamily out0 = rg_step(red, opt);
  for (const auto& dT : perts) {
    KernelFamily f = red;
    XPoly15 scaled = dT;
    scaled *= eps;
    f.T += scaled;
    const KernelFamily out = rg_step(f, opt);
    XPoly15 diff = out.T;
    XPoly15 neg = out0.T;
    neg *= -1.0;
    diff += neg;
    const RegionNorms in_n = t_sharp_region(scaled, lat);
    const RegionNorms out_n = t_sharp_region(diff, lat);
    const double denom = std::max(in_n.inner, 1e-300);
    if (out_n.outer > 0.0) kmax = std::max(kmax, out_n.outer / denom);
  }
  fc.K_Theta = kmax;

  fc.xi = 1.0 / std::sqrt(120.0 * std::pow(fc.C_Theta, 3));
  fc.c2 = 960.0 * std::pow(fc.C_Theta, 3);
  fc.c4 = 9620.0 * std::pow(fc.C_Theta, 4);
  return fc;
}

}  // namespace rg
