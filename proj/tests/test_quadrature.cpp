#include "rgflow/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace rg;

namespace {
constexpr double kPi = std::numbers::pi;

double poly(double x, int k) { return std::pow(x, k); }
}  // namespace

TEST(GaussLegendre, FivePointReferenceValues) {
  // Abramowitz & Stegun 25.4.30 nodes/weights for n = 5 on [-1,1].
  const Rule1D r = gauss_legendre(5);
  ASSERT_EQ(r.size(), 5);
  const double xr[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                        0.5384693101056831, 0.9061798459386640};
  const double wr[5] = {0.2369268850561891, 0.4786286704993665,
                        0.5688888888888889, 0.4786286704993665,
                        0.2369268850561891};
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(r.x[i], xr[i], 1e-14);
    EXPECT_NEAR(r.w[i], wr[i], 1e-14);
  }
}

TEST(GaussLegendre, ExactOnPolynomialsUpTo2nMinus1) {
  const Rule1D r = gauss_legendre(6, 0.0, 1.0);
  for (int k = 0; k <= 11; ++k) {
    double s = 0.0;
    for (int i = 0; i < r.size(); ++i) s += r.w[i] * poly(r.x[i], k);
    EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14) << "degree " << k;
  }
}

TEST(CompositeGauss, RespectsBreakpointsAndExactness) {
  const std::array<double, 2> br{0.3, 0.7};
  const Rule1D r = composite_gauss(18, br);
  // No node sits on a breakpoint; all nodes interior to [0,1].
  for (double x : r.x) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
    EXPECT_GT(std::abs(x - 0.3), 1e-12);
    EXPECT_GT(std::abs(x - 0.7), 1e-12);
  }
  // Piecewise-smooth integrand with kinks exactly at the breakpoints.
  auto f = [](double x) {
    if (x < 0.3) return x * x;
    if (x < 0.7) return 0.09 + (x - 0.3);
    return 0.49 + std::sin(x - 0.7);
  };
  const double exact = 0.009 + 0.09 * 0.4 + 0.08 + 0.49 * 0.3 +
                       (1.0 - std::cos(0.3));
  double s = 0.0;
  for (int i = 0; i < r.size(); ++i) s += r.w[i] * f(r.x[i]);
  EXPECT_NEAR(s, exact, 1e-10);
}

TEST(CompositeGauss, DegenerateBreakpointsClipped) {
  const std::array<double, 4> br{-0.5, 0.0, 0.5, 2.0};
  const Rule1D r = composite_gauss(10, br);
  double s = 0.0;
  for (int i = 0; i < r.size(); ++i) s += r.w[i];
  EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(SphereProduct, WeightsAndLowMoments) {
  const AngularRule a = sphere_product(4, 8);
  EXPECT_EQ(a.n_cos, 4);
  EXPECT_EQ(a.n_phi, 8);
  double s0 = 0.0;
  Eigen::Vector3d s1 = Eigen::Vector3d::Zero();
  Eigen::Matrix3d s2 = Eigen::Matrix3d::Zero();
  for (int i = 0; i < a.size(); ++i) {
    s0 += a.w[i];
    s1 += a.w[i] * a.dir[i];
    s2 += a.w[i] * a.dir[i] * a.dir[i].transpose();
  }
  EXPECT_NEAR(s0, 4.0 * kPi, 1e-12);
  EXPECT_LT(s1.norm(), 1e-13);
  // int n_i n_j dOmega = (4 pi / 3) delta_ij
  EXPECT_LT((s2 - (4.0 * kPi / 3.0) * Eigen::Matrix3d::Identity()).norm(),
            1e-12);
}

TEST(SphereProduct, FourthMomentIdentity) {
  // int (a.n)^2 (b.n)^2 dOmega = (4 pi/15) (|a|^2|b|^2 + 2 <a,b>^2)
  const AngularRule rule = sphere_product(4, 8);
  const Eigen::Vector3d a(0.3, -1.1, 0.7), b(0.9, 0.4, -0.2);
  double s = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    const double da = a.dot(rule.dir[i]), db = b.dot(rule.dir[i]);
    s += rule.w[i] * da * da * db * db;
  }
  const double exact = (4.0 * kPi / 15.0) *
                       (a.squaredNorm() * b.squaredNorm() +
                        2.0 * std::pow(a.dot(b), 2));
  EXPECT_NEAR(s, exact, 1e-12 * std::abs(exact) + 1e-14);
}

TEST(Polarization, TransverseOrthonormalComplete) {
  const AngularRule a = sphere_product(3, 5);
  for (int i = 0; i < a.size(); ++i) {
    const Eigen::Vector3d k = a.dir[i];
    const auto pol = polarization_pair(k);
    EXPECT_NEAR(pol[0].norm(), 1.0, 1e-14);
    EXPECT_NEAR(pol[1].norm(), 1.0, 1e-14);
    EXPECT_LT(std::abs(pol[0].dot(pol[1])), 1e-14);
    EXPECT_LT(std::abs(pol[0].dot(k)), 1e-14);
    EXPECT_LT(std::abs(pol[1].dot(k)), 1e-14);
    const Eigen::Matrix3d sum = pol[0] * pol[0].transpose() +
                                pol[1] * pol[1].transpose() +
                                k * k.transpose();
    EXPECT_LT((sum - Eigen::Matrix3d::Identity()).norm(), 1e-13);
    EXPECT_LT((transverse_projector(k) -
               (Eigen::Matrix3d::Identity() - k * k.transpose()))
                  .norm(),
              1e-14);
  }
}

TEST(PhotonLoop, TadpoleAndTransverseMoment) {
  const Rule1D radial = gauss_legendre(20, 0.0, 1.0);
  const AngularRule ang = sphere_product(3, 6);
  // sum_lambda int d^3q/(2|q|) over the unit ball = 4 pi int q dq = 2 pi.
  const double tad = integrate_photon_loop(
      radial, ang, [](const Eigen::Vector3d&, double, const Eigen::Vector3d&) {
        return 0.5;
      });
  EXPECT_NEAR(tad, 2.0 * kPi, 1e-12);
  // sum_lambda <eps,a>^2 = |a|^2 - <qhat,a>^2 integrates to (8pi/3)|a|^2 q dq.
  const Eigen::Vector3d av(0.2, 0.5, -0.4);
  const double tr = integrate_photon_loop(
      radial, ang,
      [&](const Eigen::Vector3d&, double, const Eigen::Vector3d& eps) {
        const double d = eps.dot(av);
        return 0.5 * d * d;
      });
  EXPECT_NEAR(tr, 0.5 * (8.0 * kPi / 3.0) * av.squaredNorm() * 0.5,
              1e-12);
}
