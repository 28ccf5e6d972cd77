#include "rgflow/dual.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rg;

namespace {

// Reference 4-variable scalar function with nontrivial Hessian.
double f_ref(const std::array<double, 4>& x) {
  return (2.0 + x[0] * x[1] - 0.3 * x[2]) /
             (1.5 + x[3] * x[3] + 0.2 * x[0]) +
         (x[1] - 0.7 * x[3]) * (x[1] - 0.7 * x[3]) * (0.5 + x[2]);
}

Jet2 f_jet(const std::array<Jet2, 4>& x) {
  return (x[0] * x[1] - 0.3 * x[2] + 2.0) /
             (x[3] * x[3] + 0.2 * x[0] + 1.5) +
         sqr(x[1] - 0.7 * x[3]) * (x[2] + 0.5);
}

}  // namespace

TEST(Jet2, HidxPacksUpperTriangle) {
  int p = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j, ++p) {
      EXPECT_EQ(Jet2::hidx(i, j), p);
      EXPECT_EQ(Jet2::hidx(j, i), p);
    }
  EXPECT_EQ(p, Jet2::kHess);
}

TEST(Jet2, MatchesCentralDifferences) {
  const std::array<double, 4> x0{0.37, -0.21, 0.55, 0.13};
  std::array<Jet2, 4> xj;
  for (int i = 0; i < 4; ++i) xj[i] = Jet2::var(x0[i], i);
  const Jet2 j = f_jet(xj);

  EXPECT_NEAR(j.v, f_ref(x0), 1e-15);

  const double h = 1e-5;
  for (int i = 0; i < 4; ++i) {
    auto xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    const double d = (f_ref(xp) - f_ref(xm)) / (2.0 * h);
    EXPECT_NEAR(j.g[i], d, 2e-9) << "grad " << i;
  }
  for (int i = 0; i < 4; ++i)
    for (int k = i; k < 4; ++k) {
      auto xpp = x0, xpm = x0, xmp = x0, xmm = x0;
      xpp[i] += h; xpp[k] += h;
      xpm[i] += h; xpm[k] -= h;
      xmp[i] -= h; xmp[k] += h;
      xmm[i] -= h; xmm[k] -= h;
      const double d =
          (f_ref(xpp) - f_ref(xpm) - f_ref(xmp) + f_ref(xmm)) / (4.0 * h * h);
      EXPECT_NEAR(j.h[Jet2::hidx(i, k)], d, 5e-5) << "hess " << i << k;
    }
}

TEST(Jet2, SeedScaleIsChainRule) {
  // g(X) = f(rho X) seeded with scale rho must equal jets of f at rho X
  // with gradient and Hessian scaled by rho and rho^2.
  const double rho = 0.25;
  const std::array<double, 4> x0{0.8, 0.1, -0.4, 0.6};
  std::array<Jet2, 4> scaled, plain;
  for (int i = 0; i < 4; ++i) {
    scaled[i] = Jet2::var(rho * x0[i], i, rho);
    plain[i] = Jet2::var(rho * x0[i], i);
  }
  const Jet2 a = f_jet(scaled), b = f_jet(plain);
  EXPECT_DOUBLE_EQ(a.v, b.v);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(a.g[i], rho * b.g[i], 1e-14);
  for (int p = 0; p < Jet2::kHess; ++p)
    EXPECT_NEAR(a.h[p], rho * rho * b.h[p], 1e-14);
}

TEST(Jet2, InvAndComposeExactOnPolynomials) {
  // 1/(c + x) has exact derivatives; check against closed form.
  const Jet2 x = Jet2::var(0.3, 2);
  const Jet2 r = inv(x + 1.7);
  const double d = 2.0;  // c + x
  EXPECT_NEAR(r.v, 1.0 / d, 1e-16);
  EXPECT_NEAR(r.g[2], -1.0 / (d * d), 1e-16);
  EXPECT_NEAR(r.h[Jet2::hidx(2, 2)], 2.0 / (d * d * d), 1e-16);
  EXPECT_EQ(r.g[0], 0.0);
  EXPECT_EQ(r.h[Jet2::hidx(0, 2)], 0.0);
}

TEST(Jet2, ValueOfFallbacks) {
  EXPECT_EQ(value_of(3.5), 3.5);
  EXPECT_EQ(value_of(Jet2(2.25)), 2.25);
  EXPECT_EQ(inv(4.0), 0.25);
  EXPECT_EQ(sqr(3.0), 9.0);
}
