#include "rgflow/initcond.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

namespace rg {

namespace {
constexpr double kFourPi = 12.566370614359172;

double plateau_sq_moment(const FormFactor& ff) {
  const auto f = [&](double q) {
    const double pl = ff.plateau(q);
    return std::pow(q, 1.0 + 2.0 * ff.sigma) * pl * pl;
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, ff.uv, 10, 1e-13);
}
}  // namespace

std::shared_ptr<const RadialGrid> make_default_grid(const ModelParams& mp) {
  const FormFactor ff = mp.form_factor();
  const std::array<double, 4> br{0.75 * mp.rho, mp.rho, ff.plateau_edge(),
                                 0.75};
  const Rule1D rule = composite_gauss(mp.grid_nodes, br);
  return make_radial_grid(rule, br);
}

double a2_physical(const FormFactor& kappa) {
  return kFourPi * plateau_sq_moment(kappa);
}

double a2_bare(const FormFactor& kappa) { return 2.0 * a2_physical(kappa); }

KernelFamily initial_family(const ModelParams& mp, double z,
                            std::shared_ptr<const RadialGrid> grid_in) {
  KernelFamily fam;
  fam.sector = Sector::physical;
  fam.scale = -1;
  fam.p = mp.p;
  fam.phat = Eigen::Vector3d(0, 0, 1);
  fam.g = mp.g;
  fam.rho = mp.rho;
  fam.kappa = mp.form_factor();
  fam.chi1 = Cutoff{0.75, 1.0};

  // T = X0 - |p| Xpar + X^2/2 (the p^2/2 constant lives in the slot).
  fam.T.lin(0) = 1.0;
  fam.T.lin(3) = -mp.p;
  for (int i = 1; i < 4; ++i) fam.T.quad(i, i) = 0.5;

  fam.z = z;
  fam.E = 0.5 * mp.p * mp.p + 0.5 * mp.g * mp.g * a2_physical(fam.kappa) - z;

  const auto grid = grid_in ? std::move(grid_in) : make_default_grid(mp);
  const int nn = grid->size();

  // The free family carries no interaction kernels at all; every downstream
  // consumer treats an absent channel as exactly zero.
  if (mp.g == 0.0) return fam;

  WickKernel w10 = WickKernel::zero(1, 0, mp.sigma, grid);
  for (int r = 0; r < nn; ++r) {
    const double pl = fam.kappa.plateau(grid->x[r]);
    w10.f[kEX][r].c[0] = mp.g * pl;
    if (mp.p > 0.0) w10.f[kEP][r].c[0] = -mp.g * mp.p * pl;
  }

  WickKernel w11 = WickKernel::zero(1, 1, mp.sigma, grid);
  WickKernel w20 = WickKernel::zero(2, 0, mp.sigma, grid);
  for (int r1 = 0; r1 < nn; ++r1) {
    const double p1 = fam.kappa.plateau(grid->x[r1]);
    for (int r2 = 0; r2 < nn; ++r2) {
      const double p12 = p1 * fam.kappa.plateau(grid->x[r2]);
      w11.f[kEE][r1 * nn + r2].c[0] = mp.g * mp.g * p12;
      w20.f[kEE][r1 * nn + r2].c[0] = 0.5 * mp.g * mp.g * p12;
    }
  }

  fam.w.emplace(std::make_pair(0, 1), mirror_kernel(w10));
  fam.w.emplace(std::make_pair(1, 0), std::move(w10));
  fam.w.emplace(std::make_pair(0, 2), mirror_kernel(w20));
  fam.w.emplace(std::make_pair(2, 0), std::move(w20));
  fam.w.emplace(std::make_pair(1, 1), std::move(w11));
  return fam;
}

}  // namespace rg
