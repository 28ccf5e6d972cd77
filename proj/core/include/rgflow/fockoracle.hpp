#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "rgflow/kernelspace.hpp"
#include "rgflow/quadrature.hpp"

namespace rg {

// ---------------------------------------------------------------------------
// Discretized photon field: one bosonic mode per (radial node, direction,
// polarization) cell of a product quadrature rule. mu is the d^3k cell
// measure; the normalized coupling of mode j to the field is
//   c_j = kappa(q_j) sqrt(mu_j / (2 q_j)),
// so sum_j c_j^2 is the discretization of int d^3k kappa^2/(2|k|).
// ---------------------------------------------------------------------------
struct DiscreteModes {
  std::vector<double> q;
  std::vector<double> mu;
  std::vector<double> c;  // coupling including kappa
  std::vector<Eigen::Vector3d> kvec;
  std::vector<Eigen::Vector3d> eps;

  int count() const { return static_cast<int>(q.size()); }
  double a2_sum() const;

  static DiscreteModes build(const Rule1D& radial, const AngularRule& angular,
                             const FormFactor& kappa);
};

// Bosonic occupation basis with at most nmax photons over M modes. States
// are stored as sorted mode multisets.
struct FockBasis {
  int nmax = 2;
  int modes = 0;
  std::vector<std::array<std::uint16_t, 4>> occ;  // sorted, pad = 0xffff
  std::vector<std::uint8_t> nphot;
  std::unordered_map<std::uint64_t, int> index;

  int dim() const { return static_cast<int>(occ.size()); }
  static FockBasis build(int modes, int nmax);
  static std::uint64_t key(const std::array<std::uint16_t, 4>& s, int n);

  int photons(int s) const { return nphot[s]; }
  double Hf(int s, const DiscreteModes& m) const;
  Eigen::Vector3d Pf(int s, const DiscreteModes& m) const;
  int occupancy(int s, int mode) const;
  // Index of the state with one more/fewer photon in the given mode, or -1.
  int raised(int s, int mode) const;
  int lowered(int s, int mode) const;
};

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// H(p) = (p - Pf - g A)^2 / 2 + Hf restricted to the basis, built directly
// from mode sums (independent of the kernel machinery). The A^2 c-number
// (g^2/2) sum_j c_j^2 is included. The gauge sign of A is fixed to match the
// kernel initial data; spectra are invariant under A -> -A.
SpMat build_physical_direct(const DiscreteModes& m, const FockBasis& b,
                            double g, double p, const Eigen::Vector3d& phat);

// The interaction part W = sum_{1<=M+N<=2} W_{M,N} of a kernel family over
// the discrete modes (kernel X arguments evaluated at the diagonal
// (Hf, Pf) of the incoming state, matching the normal-ordered operator
// convention a*(K) w[Hf, Pf; K] a(Kt)). Xoff displaces every kernel
// argument; the kernels themselves are functions of X, so an off-origin
// evaluation shifts the tag factors along with the interpolated fields.
SpMat build_family_W(const KernelFamily& fam, const DiscreteModes& m,
                     const FockBasis& b, const std::array<double, 4>& Xoff = {});

// Smallest eigenvalue by Lanczos with full reorthogonalization.
double lanczos_smallest(const SpMat& H, int max_iter = 250, double tol = 1e-11);

// ---------------------------------------------------------------------------
// Dense smooth Feshbach map F_chi(H, tau) = tau + chi W chi
//   - chi W chibar (tau + chibar W chibar)^{-1} chibar W chi,  W = H - tau,
// with tau, chi, chibar diagonal and chi^2 + chibar^2 = 1.
// ---------------------------------------------------------------------------
struct FeshbachParts {
  Eigen::MatrixXd F;
  Eigen::MatrixXd Q;    // chi - chibar Rbar chibar W chi
  Eigen::MatrixXd Qs;   // chi - chi W chibar Rbar chibar
  Eigen::MatrixXd Rbar; // (tau + chibar W chibar)^{-1}
};
FeshbachParts feshbach_dense(const Eigen::MatrixXd& H,
                             const Eigen::VectorXd& tau,
                             const Eigen::VectorXd& chi,
                             const Eigen::VectorXd& chibar);

}  // namespace rg
