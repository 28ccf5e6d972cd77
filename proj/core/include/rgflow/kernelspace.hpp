#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "rgflow/dual.hpp"
#include "rgflow/formfactor.hpp"
#include "rgflow/quadrature.hpp"

namespace rg {

// ---------------------------------------------------------------------------
// Polynomial model in (X0, X1, X2, X3) up to total degree 2. Monomial layout:
// [0] 1, [1..4] X_i, [5..14] X_i X_j packed like Jet2::hidx (coefficient of
// the monomial, not the derivative).
// ---------------------------------------------------------------------------
struct XPoly15 {
  std::array<double, 15> c{};

  static XPoly15 constant(double v) {
    XPoly15 p;
    p.c[0] = v;
    return p;
  }

  double& lin(int i) { return c[1 + i]; }
  double lin(int i) const { return c[1 + i]; }
  double& quad(int i, int j) { return c[5 + Jet2::hidx(i, j)]; }
  double quad(int i, int j) const { return c[5 + Jet2::hidx(i, j)]; }

  template <class T>
  T eval(const std::array<T, 4>& X) const {
    T acc = T(c[0]);
    for (int i = 0; i < 4; ++i) {
      if (c[1 + i] != 0.0) acc += X[i] * c[1 + i];
    }
    int p = 5;
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j, ++p) {
        if (c[p] != 0.0) acc += X[i] * X[j] * c[p];
      }
    return acc;
  }

  // Taylor data at 0 from a jet: c_i = g_i, c_{ii} = h_ii/2, c_{ij} = h_ij.
  static XPoly15 from_jet(const Jet2& j) {
    XPoly15 p;
    p.c[0] = j.v;
    for (int i = 0; i < 4; ++i) p.c[1 + i] = j.g[i];
    int q = 5;
    for (int i = 0; i < 4; ++i)
      for (int k = i; k < 4; ++k, ++q)
        p.c[q] = (i == k) ? 0.5 * j.h[q - 5] : j.h[q - 5];
    return p;
  }
  Jet2 to_jet_at_zero() const {
    Jet2 j(c[0]);
    for (int i = 0; i < 4; ++i) j.g[i] = c[1 + i];
    int q = 5;
    for (int i = 0; i < 4; ++i)
      for (int k = i; k < 4; ++k, ++q)
        j.h[q - 5] = (i == k) ? 2.0 * c[q] : c[q];
    return j;
  }

  // p(rho*X) as a polynomial in X (exact).
  XPoly15 arg_scaled(double rho) const {
    XPoly15 p;
    p.c[0] = c[0];
    for (int i = 1; i < 5; ++i) p.c[i] = rho * c[i];
    for (int i = 5; i < 15; ++i) p.c[i] = rho * rho * c[i];
    return p;
  }

  XPoly15& operator+=(const XPoly15& o) {
    for (int i = 0; i < 15; ++i) c[i] += o.c[i];
    return *this;
  }
  XPoly15& operator*=(double s) {
    for (int i = 0; i < 15; ++i) c[i] *= s;
    return *this;
  }
  friend XPoly15 operator*(XPoly15 a, double s) { return a *= s; }
  friend XPoly15 operator+(XPoly15 a, const XPoly15& b) { return a += b; }

  // d/dX_i, exact (degree drops by one).
  XPoly15 ddx(int i) const {
    XPoly15 d;
    d.c[0] = c[1 + i];
    for (int j = 0; j < 4; ++j) {
      double v = c[5 + Jet2::hidx(i, j)];
      d.c[1 + j] += (i == j) ? 2.0 * v : v;
    }
    return d;
  }
};

// Product truncated to total degree 2 (used by the tag projector).
XPoly15 mul_trunc2(const XPoly15& a, const XPoly15& b);

// ---------------------------------------------------------------------------
// Radial leg grids. Node 0 is the appended soft slot at x = 0 (zero weight);
// the remaining nodes are the composite quadrature nodes, so loop integrals
// evaluate stored kernels on-node. Interpolation is segment-local barycentric
// between adjacent breakpoints.
// ---------------------------------------------------------------------------
struct RadialGrid {
  std::vector<double> x;       // ascending, x[0] = 0
  std::vector<int> seg_first;  // first node index of each segment
  std::vector<double> seg_hi;  // upper edge of each segment
  Rule1D rule;                 // the quadrature nodes/weights (without slot 0)

  int size() const { return static_cast<int>(x.size()); }

  struct Stencil {
    int first = 0;
    int count = 0;
    std::array<double, 24> w{};
  };
  Stencil stencil(double xq) const;
};
std::shared_ptr<const RadialGrid> make_radial_grid(
    const Rule1D& rule, std::span<const double> breakpoints);

// ---------------------------------------------------------------------------
// Generalized Wick kernels, M+N in {1,2}, in the factored representation
//   |k|^{-sigma}-primitive  =  sum_tags  tag(eps, khat, X, phat) * f_tag(X; x)
// with f_tag an XPoly15 per radial node configuration. Tag sets:
//   degree 1:  <eps,X>, <eps,phat>            (second only when p > 0)
//   degree 2:  <e1,e2>, <e1,X><e2,X>, <e1,k2^><e2,k1^>, <e1,k2^><e2,X>,
//              <e1,X><e2,k1^>
// Total polynomial degree (tag + field) is capped at 2, matching what an
// order-2 jet of the assembly determines.
// ---------------------------------------------------------------------------
enum Tag1 : int { kEX = 0, kEP = 1 };
enum Tag2 : int { kEE = 0, kEXEX = 1, kEKK = 2, kEKX = 3, kEXK = 4 };

int tag_count(int deg);
int tag_xdeg(int deg, int tag);

// Tag value as a degree<=2 polynomial in X given the angular data of the legs.
// For deg 1 pass leg2 fields arbitrarily (ignored).
XPoly15 tag_poly(int deg, int tag, const Eigen::Vector3d& eps1,
                 const Eigen::Vector3d& khat1, const Eigen::Vector3d& eps2,
                 const Eigen::Vector3d& khat2, const Eigen::Vector3d& phat);

struct WickKernel {
  int M = 0, N = 0;
  double sigma = 0.0;
  std::shared_ptr<const RadialGrid> grid;
  // f[tag][flat], flat = r1 (deg 1) or r1*grid->size()+r2 (deg 2).
  std::vector<std::vector<XPoly15>> f;

  int deg() const { return M + N; }
  int flat(int r1, int r2 = 0) const {
    return deg() == 1 ? r1 : r1 * grid->size() + r2;
  }
  static WickKernel zero(int M, int N, double sigma,
                         std::shared_ptr<const RadialGrid> grid);

  // Fields interpolated to real radial positions: one XPoly15 per tag.
  std::vector<XPoly15> collapse_at(std::span<const double> leg_x) const;
  std::vector<XPoly15> collapse_nodes(int r1, int r2 = 0) const;
};

// Exact rescale w -> rho^{M+N-1} w[rho X; rho K] in the primitive fields
// (including the sigma bookkeeping factor rho^{sigma(M+N)}).
WickKernel rescale_kernel(const WickKernel& w, double rho);

// Hermitian mirrors at real spectral parameter: (0,1) from (1,0), (0,2) from
// (2,0); (1,1) is symmetrized in place.
WickKernel mirror_kernel(const WickKernel& w);
void symmetrize_creation_legs(WickKernel& w);   // (2,0)/(0,2) leg exchange
void symmetrize_11(WickKernel& w);              // (1,1) self-adjointness

// ---------------------------------------------------------------------------
// Family of kernels at one scale. The operator it represents is
//   H[w] = T[X] + E chi1^2(X0) + chi1 W chi1     (reduced sector, scale >= 0)
//   H[w] = T[X] + z + W                          (physical sector, scale -1)
// with T stored as an exact quadratic polynomial.
// ---------------------------------------------------------------------------
enum class Sector { physical, reduced };

struct KernelFamily {
  Sector sector = Sector::reduced;
  int scale = 0;
  double p = 0.0;
  Eigen::Vector3d phat = Eigen::Vector3d(0, 0, 1);
  double g = 0.0;
  double rho = 0.25;
  double z = 0.0;  // spectral parameter the kernels below are evaluated at
  double E = 0.0;  // E[z]
  XPoly15 T;       // full T (contains the X0 monomial)
  std::map<std::pair<int, int>, WickKernel> w;
  FormFactor kappa;
  Cutoff chi1{0.75, 1.0};

  bool has(int M, int N) const { return w.count({M, N}) > 0; }
  const WickKernel& at(int M, int N) const { return w.at({M, N}); }

  template <class T4>
  T4 Ttilde(const std::array<T4, 4>& X) const {
    return T.eval(X) - X[0];
  }
};

// ---------------------------------------------------------------------------
// Norm evaluation on deterministic sample lattices.
// ---------------------------------------------------------------------------
struct NormLattice {
  std::vector<std::array<double, 4>> X;      // |Xvec| <= X0 < 1
  std::vector<Eigen::Vector3d> khat;         // leg direction samples
};
NormLattice default_norm_lattice();

struct KernelNorms {
  double plain = 0.0;   // ||w||_sigma
  double sharp = 0.0;   // ||w||^#_sigma without the |p|-derivative terms
};

// ||w||_sigma = (2 sqrt(pi))^{M+N} sup_K sup_X |primitive|.
double norm_sigma(const WickKernel& w, const NormLattice& lat,
                  const Eigen::Vector3d& phat);
KernelNorms norm_sigma_sharp(const WickKernel& w, const NormLattice& lat,
                             const Eigen::Vector3d& phat);

// ||T||^# = sup|d_{X0}T| + sum_{1<=|a|<=2, a0=0} sup|d^a T| (no sup|T| term).
double norm_T_sharp(const XPoly15& T, const NormLattice& lat);
// Region-weighted version: max(inner, outer/K_Theta) with the X0 < 3/4 split.
double norm_T_region(const XPoly15& T, const NormLattice& lat, double K_Theta);

// sum_{M+N>=1} xi^{-(M+N)} ||w_{M,N}|| over the kernels present.
double family_w1_norm(const KernelFamily& fam, const NormLattice& lat,
                      double xi, bool sharp);

// ---------------------------------------------------------------------------
// Least-squares projection of sampled assembly jets onto the tag model.
// Samples are angular/polarization configurations at fixed radial legs; the
// projector is factorized once and applied to many radial configurations.
// ---------------------------------------------------------------------------
struct TagSample1 {
  Eigen::Vector3d khat;
  Eigen::Vector3d eps;
};
struct TagSample2 {
  Eigen::Vector3d khat1, eps1, khat2, eps2;
};

std::vector<TagSample1> default_tag_samples1();
std::vector<TagSample2> default_tag_samples2();

class TagProjector {
 public:
  // deg in {1,2}; with_p enables the <eps,phat> channel (deg 1 only).
  TagProjector(int deg, bool with_p, const Eigen::Vector3d& phat);

  int deg() const { return deg_; }
  int sample_count() const { return n_samples_; }

  // jets[s] = assembly jet at sample s. Returns per-tag fields (XPoly15) and
  // the rms projection residual relative to the jet scale.
  struct Result {
    std::vector<XPoly15> fields;
    double residual_abs = 0.0;
  };
  Result project(std::span<const Jet2> jets) const;

  const std::vector<TagSample1>& samples1() const { return s1_; }
  const std::vector<TagSample2>& samples2() const { return s2_; }

 private:
  int deg_;
  bool with_p_;
  int n_samples_;
  std::vector<TagSample1> s1_;
  std::vector<TagSample2> s2_;
  std::vector<std::pair<int, int>> cols_;  // (tag, monomial)
  Eigen::MatrixXd A_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

}  // namespace rg
