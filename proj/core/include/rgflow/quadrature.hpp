#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

namespace rg {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
  int size() const { return static_cast<int>(x.size()); }
};

// Gauss-Legendre nodes/weights on [-1,1] (Newton iteration on P_n), and the
// affine map onto [a,b].
Rule1D gauss_legendre(int n);
Rule1D gauss_legendre(int n, double a, double b);

// Composite Gauss-Legendre rule on [lo,hi] split at the interior breakpoints
// (sorted, deduplicated, clipped to (lo,hi)). Nodes are allocated to segments
// proportionally to length with a floor, so short segments around cutoff
// seams keep enough resolution. Total node count is approximately n_total.
Rule1D composite_gauss(int n_total, std::span<const double> breakpoints,
                       double lo = 0.0, double hi = 1.0);

// Product rule on S^2: Gauss-Legendre in cos(theta) x uniform trapezoid in
// phi. Exact for spherical harmonics up to degree min(2*n_cos-1, n_phi-1).
// Weights sum to 4*pi.
struct AngularRule {
  std::vector<Eigen::Vector3d> dir;
  std::vector<double> w;
  int n_cos = 0, n_phi = 0;
  int size() const { return static_cast<int>(dir.size()); }
};
AngularRule sphere_product(int n_cos, int n_phi);

// Transverse polarization machinery. polarization_pair is a deterministic
// orthonormal transverse frame; sum_lambda eps_i eps_j = delta_ij - k^ k^.
Eigen::Matrix3d transverse_projector(const Eigen::Vector3d& khat);
std::array<Eigen::Vector3d, 2> polarization_pair(const Eigen::Vector3d& khat);

// Sum over polarizations and integral over the ball of radius rule-range with
// measure d^3q / |q| = q dq dOmega:
//   sum_lambda int d^3q/|q| f(q_vec, |q|, eps)
// Callers owning a different power of |q| in their measure fold it into f.
template <class F>
double integrate_photon_loop(const Rule1D& radial, const AngularRule& angular,
                             F&& f) {
  double acc = 0.0;
  for (int a = 0; a < angular.size(); ++a) {
    const auto pol = polarization_pair(angular.dir[a]);
    for (int r = 0; r < radial.size(); ++r) {
      const double q = radial.x[r];
      if (q <= 0.0) continue;
      const double wt = radial.w[r] * angular.w[a] * q;
      const Eigen::Vector3d qv = q * angular.dir[a];
      acc += wt * (f(qv, q, pol[0]) + f(qv, q, pol[1]));
    }
  }
  return acc;
}

}  // namespace rg
