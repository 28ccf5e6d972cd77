#include "rgflow/formfactor.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rg;

TEST(Cutoff, PartitionOfUnityAndSupports) {
  const Cutoff c{0.75, 1.0};
  for (double x : {0.0, 0.3, 0.74, 0.76, 0.8, 0.9, 0.99, 1.0, 1.3}) {
    const double s = c.chi(x) * c.chi(x) + c.chibar(x) * c.chibar(x);
    EXPECT_NEAR(s, 1.0, 1e-15) << x;
    EXPECT_NEAR(c.chi2(x), c.chi(x) * c.chi(x), 1e-15);
    EXPECT_NEAR(c.chibar2(x), c.chibar(x) * c.chibar(x), 1e-15);
  }
  EXPECT_EQ(c.chi(0.75), 1.0);
  EXPECT_EQ(c.chi(0.2), 1.0);
  EXPECT_EQ(c.chi(1.0), 0.0);
  // cos(pi/2) in doubles: zero only up to one ulp of the argument.
  EXPECT_NEAR(c.chibar(0.6), 0.0, 1e-16);
  EXPECT_EQ(c.chibar(1.2), 1.0);
  EXPECT_GT(c.chi(0.9), 0.0);
  EXPECT_GT(c.chibar(0.9), 0.0);
}

TEST(Cutoff, DerivativesMatchFiniteDifferences) {
  const Cutoff c{0.75, 1.0};
  const double h = 1e-6;
  const double h2 = 1e-5;  // second differences balance roundoff vs truncation
  for (double x : {0.78, 0.85, 0.9, 0.97}) {
    const auto d = c.chi_d(x);
    EXPECT_NEAR(d[1], (c.chi(x + h) - c.chi(x - h)) / (2 * h), 1e-8);
    double fd2 = (c.chi(x + h2) - 2 * c.chi(x) + c.chi(x - h2)) / (h2 * h2);
    EXPECT_NEAR(d[2], fd2, 1e-4 * std::max(1.0, std::abs(d[2])));
    const auto b = c.chibar_d(x);
    EXPECT_NEAR(b[1], (c.chibar(x + h) - c.chibar(x - h)) / (2 * h), 1e-8);
    const auto q = c.chi2_d(x);
    EXPECT_NEAR(q[1], (c.chi2(x + h) - c.chi2(x - h)) / (2 * h), 1e-8);
    fd2 = (c.chi2(x + h2) - 2 * c.chi2(x) + c.chi2(x - h2)) / (h2 * h2);
    EXPECT_NEAR(q[2], fd2, 1e-4 * std::max(1.0, std::abs(q[2])));
  }
}

TEST(Cutoff, CTwoAtSeams) {
  // Value, first and second derivative all continuous at lo and hi.
  const Cutoff c{0.75, 1.0};
  const double e = 1e-9;
  for (double seam : {0.75, 1.0}) {
    const auto a = c.chi_d(seam - e), b = c.chi_d(seam + e);
    EXPECT_NEAR(a[0], b[0], 1e-8);
    EXPECT_NEAR(a[1], b[1], 1e-6);
    EXPECT_NEAR(a[2], b[2], 1e-4);
  }
}

TEST(Cutoff, ScaledCutoffIsArgumentRescale) {
  const Cutoff c{0.75, 1.0};
  const Cutoff cr = c.scaled(0.25);
  EXPECT_DOUBLE_EQ(cr.lo, 0.1875);
  EXPECT_DOUBLE_EQ(cr.hi, 0.25);
  for (double x : {0.05, 0.2, 0.22, 0.3}) {
    EXPECT_NEAR(cr.chi(x), c.chi(x / 0.25), 1e-15);
    EXPECT_NEAR(cr.chibar2(x), c.chibar2(x / 0.25), 1e-15);
  }
}

TEST(Cutoff, JetOverloadsMatchScalars) {
  const Cutoff c{0.75, 1.0};
  const double h = 1e-6;
  for (double x0 : {0.8, 0.93}) {
    const Jet2 x = Jet2::var(x0, 0);
    const Jet2 j = c.chibar2(x);
    EXPECT_NEAR(j.v, c.chibar2(x0), 1e-15);
    EXPECT_NEAR(j.g[0], (c.chibar2(x0 + h) - c.chibar2(x0 - h)) / (2 * h),
                1e-7);
    EXPECT_NEAR(c.chi2(x).v + j.v, 1.0, 1e-15);
  }
}

TEST(FormFactor, SharpAndSmoothProfiles) {
  FormFactor sharp;
  sharp.profile = FormFactor::Profile::sharp;
  EXPECT_TRUE(sharp.is_sharp());
  EXPECT_EQ(sharp.kappa(0.5), 1.0);
  EXPECT_EQ(sharp.kappa(1.5), 0.0);
  EXPECT_EQ(sharp.plateau_edge(), 1.0);

  FormFactor smooth;
  smooth.profile = FormFactor::Profile::smooth;
  smooth.window = 0.25;
  EXPECT_FALSE(smooth.is_sharp());
  EXPECT_DOUBLE_EQ(smooth.plateau_edge(), 0.75);
  EXPECT_EQ(smooth.plateau(0.7), 1.0);
  EXPECT_EQ(smooth.plateau(1.0), 0.0);
  EXPECT_GT(smooth.plateau(0.9), 0.0);
  EXPECT_LT(smooth.plateau(0.9), 1.0);
  // plateau_d1 matches finite differences inside the ramp
  const double h = 1e-6;
  EXPECT_NEAR(smooth.plateau_d1(0.85),
              (smooth.plateau(0.85 + h) - smooth.plateau(0.85 - h)) / (2 * h),
              1e-8);
}

TEST(FormFactor, SigmaWeighting) {
  FormFactor ff;
  ff.profile = FormFactor::Profile::smooth;
  ff.sigma = 0.1;
  for (double x : {0.1, 0.5, 0.7}) {
    EXPECT_NEAR(ff.kappa(x), std::pow(x, 0.1) * ff.plateau(x), 1e-15);
  }
  ff.sigma = 0.0;
  EXPECT_EQ(ff.kappa(0.3), ff.plateau(0.3));
}
