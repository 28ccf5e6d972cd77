#include "rgflow/fockoracle.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "rgflow/initcond.hpp"

using namespace rg;

namespace {
constexpr double kPi = std::numbers::pi;

FormFactor smooth_ff() {
  FormFactor ff;
  ff.profile = FormFactor::Profile::smooth;
  ff.window = 0.25;
  return ff;
}
}  // namespace

TEST(DiscreteModes, TadpoleConvergesToContinuum) {
  const FormFactor ff = smooth_ff();
  const double exact = a2_physical(ff);
  const DiscreteModes coarse =
      DiscreteModes::build(gauss_legendre(8, 0.0, 1.0), sphere_product(2, 4), ff);
  // The radial rule must break at the plateau seam for fast convergence.
  const DiscreteModes fine = DiscreteModes::build(
      composite_gauss(40, std::array<double, 1>{0.75}), sphere_product(4, 8),
      ff);
  EXPECT_LT(std::abs(fine.a2_sum() - exact), 1e-10);
  EXPECT_LT(std::abs(fine.a2_sum() - exact),
            std::abs(coarse.a2_sum() - exact) + 1e-12);

  FormFactor sharp;
  sharp.profile = FormFactor::Profile::sharp;
  const DiscreteModes ms = DiscreteModes::build(
      gauss_legendre(30, 0.0, 1.0), sphere_product(3, 6), sharp);
  EXPECT_NEAR(ms.a2_sum(), 2.0 * kPi, 1e-12);
}

TEST(FockBasis, MultisetCountsAndLadders) {
  const int modes = 5, nmax = 3;
  const FockBasis b = FockBasis::build(modes, nmax);
  // 1 + 5 + 15 + 35 sorted multisets.
  EXPECT_EQ(b.dim(), 56);

  const DiscreteModes m = DiscreteModes::build(
      gauss_legendre(3, 0.2, 1.0), sphere_product(1, 2), smooth_ff());
  ASSERT_GE(m.count(), modes);

  for (int s = 0; s < b.dim(); ++s) {
    for (int j = 0; j < modes; ++j) {
      const int up = b.raised(s, j);
      if (b.photons(s) < nmax) {
        ASSERT_GE(up, 0);
        EXPECT_EQ(b.photons(up), b.photons(s) + 1);
        EXPECT_EQ(b.occupancy(up, j), b.occupancy(s, j) + 1);
        EXPECT_EQ(b.lowered(up, j), s);
        // Hf/Pf additivity under the ladder.
        EXPECT_NEAR(b.Hf(up, m), b.Hf(s, m) + m.q[j], 1e-14);
        EXPECT_LT((b.Pf(up, m) - b.Pf(s, m) - m.kvec[j]).norm(), 1e-14);
      } else {
        EXPECT_EQ(up, -1);
      }
      if (b.occupancy(s, j) == 0) {
        EXPECT_EQ(b.lowered(s, j), -1);
      }
    }
  }
}

TEST(PhysicalDirect, FreeSpectrumAndSymmetry) {
  const DiscreteModes m = DiscreteModes::build(
      gauss_legendre(4, 0.0, 1.0), sphere_product(2, 4), smooth_ff());
  const FockBasis b = FockBasis::build(m.count(), 2);
  const SpMat H0 = build_physical_direct(m, b, 0.0, 0.0, {0, 0, 1});
  // g = 0: diagonal, vacuum at zero.
  EXPECT_NEAR(Eigen::MatrixXd(H0).cwiseAbs().diagonal().minCoeff(), 0.0,
              1e-15);
  EXPECT_LT((Eigen::MatrixXd(H0) -
             Eigen::MatrixXd(Eigen::MatrixXd(H0).diagonal().asDiagonal()))
                .norm(),
            1e-15);

  const SpMat H = build_physical_direct(m, b, 0.2, 0.3, {0, 0, 1});
  EXPECT_LT((Eigen::MatrixXd(H) - Eigen::MatrixXd(H).transpose()).norm(),
            1e-12);
}

TEST(PhysicalDirect, LanczosMatchesDenseSolver) {
  const DiscreteModes m = DiscreteModes::build(
      gauss_legendre(3, 0.0, 1.0), sphere_product(2, 2), smooth_ff());
  const FockBasis b = FockBasis::build(m.count(), 2);
  const SpMat H = build_physical_direct(m, b, 0.25, 0.4, {0, 0, 1});
  const Eigen::MatrixXd Hd(H);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hd);
  EXPECT_NEAR(lanczos_smallest(H), es.eigenvalues()(0), 1e-9);
}

TEST(PhysicalDirect, VacuumShiftIsSecondOrderExactAtPZero) {
  // At p = 0 the linear coupling annihilates the vacuum (transversality),
  // so E0 = (g^2/2) a2_sum + O(g^4).
  const DiscreteModes m = DiscreteModes::build(
      gauss_legendre(5, 0.0, 1.0), sphere_product(2, 4), smooth_ff());
  const FockBasis b = FockBasis::build(m.count(), 2);
  auto gap = [&](double g) {
    const SpMat H = build_physical_direct(m, b, g, 0.0, {0, 0, 1});
    return std::abs(lanczos_smallest(H) - 0.5 * g * g * m.a2_sum());
  };
  const double d1 = gap(0.2), d2 = gap(0.1);
  // The quartic constant for this form factor is ~40, so d(0.2) ~ 7e-3.
  EXPECT_LT(d1, 1e-2);
  // Quartic scaling: halving g shrinks the defect by ~16.
  EXPECT_LT(d2, d1 / 10.0);
}

TEST(PhysicalDirect, SecondOrderPerturbationAtFiniteP) {
  const DiscreteModes m = DiscreteModes::build(
      gauss_legendre(5, 0.0, 1.0), sphere_product(2, 4), smooth_ff());
  const FockBasis b = FockBasis::build(m.count(), 2);
  const double p = 0.3, g = 0.02;
  const Eigen::Vector3d pv(0, 0, p);

  double pt2 = 0.0;
  for (int j = 0; j < m.count(); ++j) {
    const double amp = -g * m.c[j] * m.eps[j].dot(pv);
    const double den =
        0.5 * (pv - m.kvec[j]).squaredNorm() + m.q[j] - 0.5 * p * p;
    pt2 -= amp * amp / den;
  }
  const double e_pt = 0.5 * p * p + 0.5 * g * g * m.a2_sum() + pt2;
  const SpMat H = build_physical_direct(m, b, g, p, {0, 0, 1});
  const double e0 = lanczos_smallest(H);
  EXPECT_NEAR(e0, e_pt, 5e-2 * std::abs(pt2) + 1e-12);
}

TEST(FamilyW, MatchesDirectBuildExactly) {
  // The kernel-driven W plus the quadratic diagonal must reproduce the
  // direct mode-sum Hamiltonian on the same discretization, entry by entry.
  ModelParams mp;
  mp.g = 0.21;
  mp.p = 0.37;
  mp.sigma = 0.0;
  mp.profile = FormFactor::Profile::smooth;

  const Rule1D radial = gauss_legendre(5, 0.0, 1.0);
  const AngularRule ang = sphere_product(2, 4);
  const auto grid = make_radial_grid(radial, {});
  const KernelFamily fam = initial_family(mp, 0.0, grid);

  const DiscreteModes m = DiscreteModes::build(radial, ang, mp.form_factor());
  const FockBasis b = FockBasis::build(m.count(), 2);

  const SpMat Wfam = build_family_W(fam, m, b);
  EXPECT_LT((Eigen::MatrixXd(Wfam) - Eigen::MatrixXd(Wfam).transpose()).norm(),
            1e-12);

  Eigen::MatrixXd Hfam = Eigen::MatrixXd(Wfam);
  for (int s = 0; s < b.dim(); ++s) {
    const Eigen::Vector3d pf = b.Pf(s, m);
    const std::array<double, 4> X{b.Hf(s, m), pf[0], pf[1], pf[2]};
    Hfam(s, s) += fam.T.eval(X) + 0.5 * mp.p * mp.p +
                  0.5 * mp.g * mp.g * m.a2_sum();
  }
  const Eigen::MatrixXd Hdir =
      Eigen::MatrixXd(build_physical_direct(m, b, mp.g, mp.p, fam.phat));
  const double scale = Hdir.cwiseAbs().maxCoeff();
  EXPECT_LT((Hfam - Hdir).cwiseAbs().maxCoeff(), 1e-12 * scale);
}

TEST(FamilyW, MatchesDirectWithSigmaWeight) {
  ModelParams mp;
  mp.g = 0.15;
  mp.p = 0.2;
  mp.sigma = 0.1;
  mp.profile = FormFactor::Profile::smooth;

  const Rule1D radial = gauss_legendre(4, 0.0, 1.0);
  const AngularRule ang = sphere_product(2, 2);
  const auto grid = make_radial_grid(radial, {});
  const KernelFamily fam = initial_family(mp, 0.0, grid);
  const DiscreteModes m = DiscreteModes::build(radial, ang, mp.form_factor());
  const FockBasis b = FockBasis::build(m.count(), 2);

  Eigen::MatrixXd Hfam = Eigen::MatrixXd(build_family_W(fam, m, b));
  for (int s = 0; s < b.dim(); ++s) {
    const Eigen::Vector3d pf = b.Pf(s, m);
    const std::array<double, 4> X{b.Hf(s, m), pf[0], pf[1], pf[2]};
    Hfam(s, s) += fam.T.eval(X) + 0.5 * mp.p * mp.p +
                  0.5 * mp.g * mp.g * m.a2_sum();
  }
  const Eigen::MatrixXd Hdir =
      Eigen::MatrixXd(build_physical_direct(m, b, mp.g, mp.p, fam.phat));
  EXPECT_LT((Hfam - Hdir).cwiseAbs().maxCoeff(),
            1e-12 * Hdir.cwiseAbs().maxCoeff());
}

TEST(Feshbach, FiveIdentitiesOnRandomInstances) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uc(0.05, 1.0), ut(0.5, 1.5),
      un(-1.0, 1.0);

  for (int inst = 0; inst < 20; ++inst) {
    const int n = 10 + static_cast<int>(rng() % 6);
    Eigen::VectorXd chi(n), chib(n), tau(n);
    for (int i = 0; i < n; ++i) {
      chi(i) = uc(rng);
      chib(i) = std::sqrt(1.0 - chi(i) * chi(i));
      tau(i) = ut(rng);
    }
    Eigen::MatrixXd W(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) W(i, j) = W(j, i) = 0.2 * un(rng);
    const Eigen::MatrixXd H = Eigen::MatrixXd(tau.asDiagonal()) + W;

    const auto fp = feshbach_dense(H, tau, chi, chib);
    const Eigen::MatrixXd C = chi.asDiagonal(), Cb = chib.asDiagonal();
    const Eigen::MatrixXd Ti = tau.cwiseInverse().asDiagonal();
    const double hn = H.norm();

    // (i) inversion formula
    const Eigen::MatrixXd Fi = fp.F.partialPivLu().solve(
        Eigen::MatrixXd::Identity(n, n));
    EXPECT_LT((Fi - (C * H.inverse() * C + Cb * Ti * Cb)).norm(),
              1e-10 * Fi.norm());
    // (ii) intertwining relations
    EXPECT_LT((C * fp.F - H * fp.Q).norm(), 1e-10 * hn);
    EXPECT_LT((fp.F * C - fp.Qs * H).norm(), 1e-10 * hn);
    // (iii) the Q# H Q collapse
    EXPECT_LT(
        (fp.Qs * H * fp.Q - fp.F + fp.F * Cb * Ti * Cb * fp.F).norm(),
        1e-10 * hn);
  }
}

TEST(Feshbach, CompositionAndKernelCorrespondence) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uc(0.05, 1.0), ut(0.5, 1.5),
      un(-1.0, 1.0);
  for (int inst = 0; inst < 10; ++inst) {
    const int n = 12;
    const int k = 6;
    Eigen::VectorXd chi1(n), chi2(n), tau1(n), tau2(n);
    for (int i = 0; i < n; ++i) {
      chi2(i) = i < k ? uc(rng) : 0.0;
      chi1(i) = i < k ? 1.0 : uc(rng);
      tau1(i) = ut(rng);
      tau2(i) = ut(rng);
    }
    const Eigen::VectorXd chib1 =
        (Eigen::VectorXd::Ones(n) - chi1.cwiseProduct(chi1)).cwiseSqrt();
    const Eigen::VectorXd chib2 =
        (Eigen::VectorXd::Ones(n) - chi2.cwiseProduct(chi2)).cwiseSqrt();
    Eigen::MatrixXd W(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) W(i, j) = W(j, i) = 0.15 * un(rng);
    const Eigen::MatrixXd H = Eigen::MatrixXd(tau1.asDiagonal()) + W;

    // (iv) composition with tau2 shared between inner and outer map
    const auto f1 = feshbach_dense(H, tau1, chi1, chib1);
    const auto lhs = feshbach_dense(H, tau2, chi2, chib2);
    const auto rhs = feshbach_dense(f1.F, tau2, chi2, chib2);
    EXPECT_LT((lhs.F - rhs.F).norm(), 1e-10 * H.norm());
    EXPECT_LT((lhs.Q - f1.Q * rhs.Q).norm(), 1e-10 * H.norm());
    EXPECT_LT((lhs.Qs - rhs.Qs * f1.Qs).norm(), 1e-10 * H.norm());

    // (v) kernel correspondence on a deflated instance
    Eigen::VectorXd psi(n);
    for (int i = 0; i < n; ++i) psi(i) = un(rng);
    psi.normalize();
    const Eigen::MatrixXd P =
        Eigen::MatrixXd::Identity(n, n) - psi * psi.transpose();
    const Eigen::MatrixXd Hd = P * H * P;
    Eigen::VectorXd chi(n), chib(n);
    for (int i = 0; i < n; ++i) {
      chi(i) = uc(rng);
      chib(i) = std::sqrt(1.0 - chi(i) * chi(i));
    }
    const auto fd = feshbach_dense(Hd, tau1, chi, chib);
    EXPECT_LT((fd.F * chi.cwiseProduct(psi)).norm(), 1e-10 * Hd.norm());
    EXPECT_LT((Hd * (fd.Q * chi.cwiseProduct(psi))).norm(),
              1e-10 * Hd.norm());
  }
}
