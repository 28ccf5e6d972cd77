#include "rgflow/fockoracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rg {

double DiscreteModes::a2_sum() const {
  double s = 0.0;
  for (double cj : c) s += cj * cj;
  return s;
}

DiscreteModes DiscreteModes::build(const Rule1D& radial,
                                   const AngularRule& angular,
                                   const FormFactor& kappa) {
  DiscreteModes m;
  for (int r = 0; r < radial.size(); ++r) {
    const double q = radial.x[r];
    if (q <= 0.0) continue;
    for (int a = 0; a < angular.size(); ++a) {
      const auto pol = polarization_pair(angular.dir[a]);
      const double mu = q * q * radial.w[r] * angular.w[a];
      for (const auto& e : pol) {
        m.q.push_back(q);
        m.mu.push_back(mu);
        m.c.push_back(kappa.kappa(q) * std::sqrt(mu / (2.0 * q)));
        m.kvec.push_back(q * angular.dir[a]);
        m.eps.push_back(e);
      }
    }
  }
  return m;
}

std::uint64_t FockBasis::key(const std::array<std::uint16_t, 4>& s, int n) {
  std::uint64_t k = 0;
  for (int i = 0; i < 4; ++i)
    k = (k << 16) | (i < n ? s[i] : std::uint64_t(0xffff));
  return k;
}

FockBasis FockBasis::build(int modes, int nmax) {
  if (nmax > 4) throw std::invalid_argument("FockBasis: nmax > 4");
  FockBasis b;
  b.nmax = nmax;
  b.modes = modes;
  std::array<std::uint16_t, 4> s{0xffff, 0xffff, 0xffff, 0xffff};
  auto push = [&](int n) {
    b.occ.push_back(s);
    b.nphot.push_back(static_cast<std::uint8_t>(n));
    b.index.emplace(key(s, n), b.dim() - 1);
  };
  push(0);
  for (int n = 1; n <= nmax; ++n) {
    // Sorted multisets of size n via odometer.
    std::vector<int> idx(n, 0);
    while (true) {
      for (int i = 0; i < n; ++i) s[i] = static_cast<std::uint16_t>(idx[i]);
      for (int i = n; i < 4; ++i) s[i] = 0xffff;
      push(n);
      int pos = n - 1;
      while (pos >= 0 && idx[pos] == modes - 1) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int i = pos + 1; i < n; ++i) idx[i] = idx[pos];
    }
  }
  s = {0xffff, 0xffff, 0xffff, 0xffff};
  return b;
}

double FockBasis::Hf(int s, const DiscreteModes& m) const {
  double e = 0.0;
  for (int i = 0; i < nphot[s]; ++i) e += m.q[occ[s][i]];
  return e;
}

Eigen::Vector3d FockBasis::Pf(int s, const DiscreteModes& m) const {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  for (int i = 0; i < nphot[s]; ++i) v += m.kvec[occ[s][i]];
  return v;
}

int FockBasis::occupancy(int s, int mode) const {
  int c = 0;
  for (int i = 0; i < nphot[s]; ++i)
    if (occ[s][i] == mode) ++c;
  return c;
}

int FockBasis::raised(int s, int mode) const {
  const int n = nphot[s];
  if (n + 1 > nmax) return -1;
  std::array<std::uint16_t, 4> t = occ[s];
  t[n] = static_cast<std::uint16_t>(mode);
  std::sort(t.begin(), t.begin() + n + 1);
  for (int i = n + 1; i < 4; ++i) t[i] = 0xffff;
  auto it = index.find(key(t, n + 1));
  return it == index.end() ? -1 : it->second;
}

int FockBasis::lowered(int s, int mode) const {
  const int n = nphot[s];
  std::array<std::uint16_t, 4> t{0xffff, 0xffff, 0xffff, 0xffff};
  int j = 0;
  bool removed = false;
  for (int i = 0; i < n; ++i) {
    if (!removed && occ[s][i] == mode) {
      removed = true;
      continue;
    }
    t[j++] = occ[s][i];
  }
  if (!removed) return -1;
  auto it = index.find(key(t, n - 1));
  return it == index.end() ? -1 : it->second;
}

SpMat build_physical_direct(const DiscreteModes& m, const FockBasis& b,
                            double g, double p, const Eigen::Vector3d& phat) {
  using T = Eigen::Triplet<double>;
  std::vector<T> trip;
  const int M = m.count();
  const Eigen::Vector3d pv = p * phat;
  const double cnum = 0.5 * g * g * m.a2_sum();

  for (int s = 0; s < b.dim(); ++s) {
    const Eigen::Vector3d Pi = pv - b.Pf(s, m);
    const double hf = b.Hf(s, m);
    trip.emplace_back(s, s, 0.5 * Pi.squaredNorm() + hf + cnum);

    // -(g/2)(Pi.A + A.Pi): raising part; eps.k = 0 collapses the symmetrized
    // momentum to Pi of the incoming state.
    for (int j = 0; j < M; ++j) {
      const int s1 = b.raised(s, j);
      if (s1 < 0) continue;
      const double amp = -g * m.c[j] * m.eps[j].dot(Pi) *
                         std::sqrt(b.occupancy(s, j) + 1.0);
      if (amp != 0.0) {
        trip.emplace_back(s1, s, amp);
        trip.emplace_back(s, s1, amp);
      }
    }

    // (g^2/2) A^2, normal ordered: pair raising (with mirror) and hopping.
    for (int k = 0; k < M; ++k) {
      const int sk = b.raised(s, k);
      if (sk >= 0) {
        const double fk = std::sqrt(b.occupancy(s, k) + 1.0);
        for (int j = 0; j < M; ++j) {
          const int sjk = b.raised(sk, j);
          if (sjk < 0) continue;
          const double ee = m.eps[j].dot(m.eps[k]);
          if (ee == 0.0) continue;
          const double amp = 0.5 * g * g * ee * m.c[j] * m.c[k] * fk *
                             std::sqrt(b.occupancy(sk, j) + 1.0);
          trip.emplace_back(sjk, s, amp);
          trip.emplace_back(s, sjk, amp);
        }
      }
      // hopping a_j^† a_k (includes j = k diagonal)
      const int low = b.lowered(s, k);
      if (low < 0) continue;
      const double fk = std::sqrt(static_cast<double>(b.occupancy(s, k)));
      for (int j = 0; j < M; ++j) {
        const int s2 = b.raised(low, j);
        if (s2 < 0) continue;
        const double ee = m.eps[j].dot(m.eps[k]);
        if (ee == 0.0) continue;
        const double amp = g * g * ee * m.c[j] * m.c[k] * fk *
                           std::sqrt(b.occupancy(low, j) + 1.0);
        trip.emplace_back(s2, s, amp);
      }
    }
  }

  SpMat H(b.dim(), b.dim());
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

SpMat build_family_W(const KernelFamily& fam, const DiscreteModes& m,
                     const FockBasis& b, const std::array<double, 4>& Xoff) {
  using T = Eigen::Triplet<double>;
  std::vector<T> trip;
  const int M = m.count();

  auto legw = [&](int j) { return std::sqrt(m.mu[j] / (2.0 * m.q[j])); };
  auto xarg = [&](int s) {
    const Eigen::Vector3d pf = b.Pf(s, m);
    return std::array<double, 4>{Xoff[0] + b.Hf(s, m), Xoff[1] + pf[0],
                                 Xoff[2] + pf[1], Xoff[3] + pf[2]};
  };
  auto phys = [&](const WickKernel& ker, std::span<const double> legx,
                  std::span<const Eigen::Vector3d> kh,
                  std::span<const Eigen::Vector3d> ep,
                  const std::array<double, 4>& X) {
    const auto cols = ker.collapse_at(legx);
    double val = 0.0;
    for (std::size_t t = 0; t < cols.size(); ++t) {
      const XPoly15 tp =
          tag_poly(ker.deg(), static_cast<int>(t), ep[0], kh[0],
                   ep.size() > 1 ? ep[1] : ep[0],
                   kh.size() > 1 ? kh[1] : kh[0], fam.phat);
      val += mul_trunc2(tp, cols[t]).eval(X);
    }
    double pw = 1.0;
    for (double x : legx) pw *= std::pow(x, ker.sigma);
    return pw * val;
  };

  for (int s = 0; s < b.dim(); ++s) {
    const auto Xs = xarg(s);
    if (fam.has(1, 0)) {
      const auto& ker = fam.at(1, 0);
      for (int j = 0; j < M; ++j) {
        const int s1 = b.raised(s, j);
        if (s1 < 0) continue;
        const std::array<double, 1> lx{m.q[j]};
        const std::array<Eigen::Vector3d, 1> kh{m.kvec[j].normalized()};
        const std::array<Eigen::Vector3d, 1> ep{m.eps[j]};
        const double amp = legw(j) * phys(ker, lx, kh, ep, Xs) *
                           std::sqrt(b.occupancy(s, j) + 1.0);
        if (amp != 0.0) trip.emplace_back(s1, s, amp);
      }
    }
    if (fam.has(0, 1)) {
      const auto& ker = fam.at(0, 1);
      for (int j = 0; j < M; ++j) {
        const int s1 = b.lowered(s, j);
        if (s1 < 0) continue;
        const auto X1 = xarg(s1);
        const std::array<double, 1> lx{m.q[j]};
        const std::array<Eigen::Vector3d, 1> kh{m.kvec[j].normalized()};
        const std::array<Eigen::Vector3d, 1> ep{m.eps[j]};
        const double amp = legw(j) * phys(ker, lx, kh, ep, X1) *
                           std::sqrt(static_cast<double>(b.occupancy(s, j)));
        if (amp != 0.0) trip.emplace_back(s1, s, amp);
      }
    }
    if (fam.has(1, 1)) {
      const auto& ker = fam.at(1, 1);
      for (int jann = 0; jann < M; ++jann) {
        const int mid = b.lowered(s, jann);
        if (mid < 0) continue;
        const auto Xm = xarg(mid);
        const double fj = std::sqrt(static_cast<double>(b.occupancy(s, jann)));
        for (int kcre = 0; kcre < M; ++kcre) {
          const int s2 = b.raised(mid, kcre);
          if (s2 < 0) continue;
          const std::array<double, 2> lx{m.q[kcre], m.q[jann]};
          const std::array<Eigen::Vector3d, 2> kh{m.kvec[kcre].normalized(),
                                                  m.kvec[jann].normalized()};
          const std::array<Eigen::Vector3d, 2> ep{m.eps[kcre], m.eps[jann]};
          const double amp = legw(jann) * legw(kcre) *
                             phys(ker, lx, kh, ep, Xm) * fj *
                             std::sqrt(b.occupancy(mid, kcre) + 1.0);
          if (amp != 0.0) trip.emplace_back(s2, s, amp);
        }
      }
    }
    if (fam.has(2, 0)) {
      const auto& ker = fam.at(2, 0);
      for (int k2 = 0; k2 < M; ++k2) {
        const int sk = b.raised(s, k2);
        if (sk < 0) continue;
        const double f2 = std::sqrt(b.occupancy(s, k2) + 1.0);
        for (int k1 = 0; k1 < M; ++k1) {
          const int s2 = b.raised(sk, k1);
          if (s2 < 0) continue;
          const std::array<double, 2> lx{m.q[k1], m.q[k2]};
          const std::array<Eigen::Vector3d, 2> kh{m.kvec[k1].normalized(),
                                                  m.kvec[k2].normalized()};
          const std::array<Eigen::Vector3d, 2> ep{m.eps[k1], m.eps[k2]};
          const double amp = legw(k1) * legw(k2) * phys(ker, lx, kh, ep, Xs) *
                             f2 * std::sqrt(b.occupancy(sk, k1) + 1.0);
          if (amp != 0.0) trip.emplace_back(s2, s, amp);
        }
      }
    }
    if (fam.has(0, 2)) {
      const auto& ker = fam.at(0, 2);
      for (int k2 = 0; k2 < M; ++k2) {
        const int sk = b.lowered(s, k2);
        if (sk < 0) continue;
        const double f2 = std::sqrt(static_cast<double>(b.occupancy(s, k2)));
        for (int k1 = 0; k1 < M; ++k1) {
          const int s2 = b.lowered(sk, k1);
          if (s2 < 0) continue;
          const auto X2 = xarg(s2);
          const std::array<double, 2> lx{m.q[k1], m.q[k2]};
          const std::array<Eigen::Vector3d, 2> kh{m.kvec[k1].normalized(),
                                                  m.kvec[k2].normalized()};
          const std::array<Eigen::Vector3d, 2> ep{m.eps[k1], m.eps[k2]};
          const double amp =
              legw(k1) * legw(k2) * phys(ker, lx, kh, ep, X2) * f2 *
              std::sqrt(static_cast<double>(b.occupancy(sk, k1)));
          if (amp != 0.0) trip.emplace_back(s2, s, amp);
        }
      }
    }
  }

  SpMat W(b.dim(), b.dim());
  W.setFromTriplets(trip.begin(), trip.end());
  return W;
}

double lanczos_smallest(const SpMat& H, int max_iter, double tol) {
  const int n = static_cast<int>(H.rows());
  max_iter = std::min(max_iter, n);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v(0) = 1.0;
  for (int i = 0; i < n; ++i) v(i) += 1e-3 * nd(rng);
  v.normalize();

  std::vector<Eigen::VectorXd> V;
  std::vector<double> alpha, beta;
  V.push_back(v);
  double theta = 0.0;
  for (int k = 0; k < max_iter; ++k) {
    Eigen::VectorXd w = H * V[k];
    const double a = V[k].dot(w);
    alpha.push_back(a);
    w -= a * V[k];
    if (k > 0) w -= beta[k - 1] * V[k - 1];
    // Full reorthogonalization, two passes.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : V) w -= u.dot(w) * u;
    const double bnorm = w.norm();

    // Ritz value of the current tridiagonal.
    const int kk = k + 1;
    Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(kk, kk);
    for (int i = 0; i < kk; ++i) {
      Tm(i, i) = alpha[i];
      if (i + 1 < kk) Tm(i, i + 1) = Tm(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
    theta = es.eigenvalues()(0);
    const double resid = bnorm * std::abs(es.eigenvectors()(kk - 1, 0));
    if (resid < tol * std::max(1.0, std::abs(theta)) && k >= 10) break;
    if (bnorm < 1e-14) break;
    beta.push_back(bnorm);
    V.push_back(w / bnorm);
  }
  return theta;
}

FeshbachParts feshbach_dense(const Eigen::MatrixXd& H,
                             const Eigen::VectorXd& tau,
                             const Eigen::VectorXd& chi,
                             const Eigen::VectorXd& chibar) {
  const Eigen::MatrixXd W = H - Eigen::MatrixXd(tau.asDiagonal());
  const auto C = chi.asDiagonal();
  const auto Cb = chibar.asDiagonal();
  const Eigen::MatrixXd Hbar =
      Eigen::MatrixXd(tau.asDiagonal()) + Cb * W * Cb;
  FeshbachParts parts;
  parts.Rbar = Hbar.partialPivLu().solve(
      Eigen::MatrixXd::Identity(H.rows(), H.cols()));
  parts.F = Eigen::MatrixXd(tau.asDiagonal()) + C * W * C -
            C * W * Cb * parts.Rbar * Cb * W * C;
  parts.Q = Eigen::MatrixXd(C) - Cb * parts.Rbar * Cb * W * C;
  parts.Qs = Eigen::MatrixXd(C) - C * W * Cb * parts.Rbar * Cb;
  return parts;
}

}  // namespace rg
