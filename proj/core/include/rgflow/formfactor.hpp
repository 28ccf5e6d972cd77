#pragma once

#include <array>

#include "rgflow/dual.hpp"

namespace rg {

// Smooth IR/UV cutoff pair built on one falling C^2 quintic ramp S:
//   S = 1 on (-inf, lo],  S = 0 on [hi, inf),  quintic in between.
//   chi = sin(pi/2 * S), chibar = cos(pi/2 * S).
// This makes chi^2 + chibar^2 = 1 exact, chi = 1 below lo, chi = 0 above hi,
// both C^2 everywhere. The scale-rho cutoff is the same shape with
// [lo, hi] -> [rho*lo, rho*hi], i.e. chi_rho(x) = chi(x/rho).
struct Cutoff {
  double lo = 0.75;
  double hi = 1.0;

  Cutoff scaled(double rho) const { return {lo * rho, hi * rho}; }

  // Falling ramp and derivatives.
  std::array<double, 3> ramp(double x) const {
    if (x <= lo) return {1.0, 0.0, 0.0};
    if (x >= hi) return {0.0, 0.0, 0.0};
    const double w = hi - lo, t = (x - lo) / w;
    const double r = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    const double r1 = 30.0 * t * t * (1.0 + t * (-2.0 + t)) / w;
    const double r2 = 60.0 * t * (1.0 + t * (-3.0 + 2.0 * t)) / (w * w);
    return {1.0 - r, -r1, -r2};
  }

  std::array<double, 3> chi_d(double x) const {
    const auto s = ramp(x);
    constexpr double c = 1.5707963267948966;  // pi/2
    const double sn = std::sin(c * s[0]), cs = std::cos(c * s[0]);
    return {sn, c * cs * s[1], c * (cs * s[2] - c * sn * s[1] * s[1])};
  }
  std::array<double, 3> chibar_d(double x) const {
    const auto s = ramp(x);
    constexpr double c = 1.5707963267948966;
    const double sn = std::sin(c * s[0]), cs = std::cos(c * s[0]);
    return {cs, -c * sn * s[1], -c * (sn * s[2] + c * cs * s[1] * s[1])};
  }
  std::array<double, 3> chi2_d(double x) const {
    const auto s = ramp(x);
    constexpr double pi = 3.141592653589793;
    const double sn = std::sin(pi * s[0]), cs = std::cos(pi * s[0]);
    // chi^2 = (1 - cos(pi S))/2
    return {0.5 * (1.0 - cs), 0.5 * pi * sn * s[1],
            0.5 * pi * (sn * s[2] + pi * cs * s[1] * s[1])};
  }

  double chi(double x) const { return chi_d(x)[0]; }
  double chibar(double x) const { return chibar_d(x)[0]; }
  double chi2(double x) const { return chi2_d(x)[0]; }
  double chibar2(double x) const { return 1.0 - chi2_d(x)[0]; }

  Jet2 chi(const Jet2& x) const {
    const auto d = chi_d(x.v);
    return compose(d[0], d[1], d[2], x);
  }
  Jet2 chibar(const Jet2& x) const {
    const auto d = chibar_d(x.v);
    return compose(d[0], d[1], d[2], x);
  }
  Jet2 chi2(const Jet2& x) const {
    const auto d = chi2_d(x.v);
    return compose(d[0], d[1], d[2], x);
  }
  Jet2 chibar2(const Jet2& x) const {
    const auto d = chi2_d(x.v);
    return compose(1.0 - d[0], -d[1], -d[2], x);
  }
};

// Photon form factor kappa_sigma(x) = x^sigma * plateau(x) on [0, uv].
// "sharp": plateau = 1_[0,uv) (outside the smoothness hypotheses of the
// contraction estimates; admitted for the sigma = 0 mass runs and flagged by
// is_sharp()). "smooth": plateau falls as a quintic ramp on [uv*(1-window), uv].
// The stored kernel fields carry the primitive x^{-sigma} * kappa = plateau,
// so sum rule soft limits and the sigma-weighted norms never divide by x^sigma.
struct FormFactor {
  enum class Profile { sharp, smooth };

  double sigma = 0.0;
  Profile profile = Profile::sharp;
  double uv = 1.0;
  double window = 0.25;

  bool is_sharp() const { return profile == Profile::sharp; }

  // Interior breakpoint of the plateau (for composite quadrature grids).
  double plateau_edge() const { return is_sharp() ? uv : uv * (1.0 - window); }

  double plateau(double x) const {
    if (is_sharp()) return x < uv ? 1.0 : 0.0;
    const Cutoff c{uv * (1.0 - window), uv};
    return c.ramp(x)[0];
  }
  double plateau_d1(double x) const {
    if (is_sharp()) return 0.0;
    const Cutoff c{uv * (1.0 - window), uv};
    return c.ramp(x)[1];
  }

  double kappa(double x) const {
    return (sigma == 0.0 ? 1.0 : std::pow(x, sigma)) * plateau(x);
  }
};

}  // namespace rg
