#pragma once

#include <Eigen/Dense>
#include <limits>
#include <span>
#include <stdexcept>

#include "rgflow/kernelspace.hpp"
#include "rgflow/quadrature.hpp"

namespace rg {

// External photon leg of an output channel evaluation.
struct ExtLeg {
  double x = 0.0;
  Eigen::Vector3d khat{0, 0, 1};
  Eigen::Vector3d eps{1, 0, 0};
};

// Assemblies are evaluated either as plain values at a point or as order-2
// jets seeded there. jet evaluations seed X_i = x[i] + scale * var_i, which
// makes rho-scaled argument chains exact (no finite differences anywhere).
struct EvalPoint {
  std::array<double, 4> x{};
  double jet_scale = 1.0;
};

struct TruncationBudget {
  double neumann_tail = 0.0;       // L > L_max geometric bound
  double skipped_patterns = 0.0;   // a-priori bounds of floored terms
  double projection_residual = 0.0;
  double quadrature = 0.0;
  double degree_spill = 0.0;       // beyond-quadratic (0,0) remainder
  double total() const {
    return neumann_tail + skipped_patterns + projection_residual + quadrature +
           degree_spill;
  }
  void merge(const TruncationBudget& o) {
    neumann_tail += o.neumann_tail;
    skipped_patterns += o.skipped_patterns;
    projection_residual += o.projection_residual;
    quadrature += o.quadrature;
    degree_spill += o.degree_spill;
  }
};

struct DomainViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FlowOptions {
  int L_max = 3;
  int c_max = 2;
  double pattern_floor = 0.0;  // skip terms with a-priori bound below this
  int max_gap_photons = 4;     // cap on simultaneous internal photons
  bool deg2_L2 = false;        // L >= 2 corrections to two-leg channels

  Rule1D loop_00;              // single-contraction loop rule, (0,0) channel
  AngularRule ang_00;
  Rule1D loop_deg1;            // single-contraction loops inside one-leg channels
  AngularRule ang_deg1;
  Rule1D loop_c2;              // per-photon rule for double contractions
  AngularRule ang_c2;

  double C_Theta_hint = 4.0;   // used in tail bounds until measured
};

// Loop rules matched to the family grid (the (0,0) rule reuses the kernel
// grid nodes so stored kernels are evaluated on-node inside loops).
FlowOptions default_flow_options(const KernelFamily& fam);

struct AssemblyStats {
  TruncationBudget budget;
  double min_denominator = std::numeric_limits<double>::infinity();
  void merge(const AssemblyStats& o) {
    budget.merge(o.budget);
    min_denominator = std::min(min_denominator, o.min_denominator);
  }
};

// Wick-ordered decimation sums for one output channel, evaluated at the
// pre-rescale arguments. Sums L = Lmin..L_max of (-1)^{L-1} with the
// binomial leg-assignment prefactors, all labeled contraction schemes, and
// the sector-appropriate resolvent chain.
double channel_value(const KernelFamily& fam, const FlowOptions& opt, int M,
                     int N, std::span<const ExtLeg> cre,
                     std::span<const ExtLeg> ann, const EvalPoint& at,
                     AssemblyStats* stats = nullptr, int Lmin = 1);
Jet2 channel_jet(const KernelFamily& fam, const FlowOptions& opt, int M, int N,
                 std::span<const ExtLeg> cre, std::span<const ExtLeg> ann,
                 const EvalPoint& at, AssemblyStats* stats = nullptr,
                 int Lmin = 1);

// Pre-rescale (0,0) decimation value
//   X0 + chi1^2(X0) [ (Ttilde[X]+E) Upsilon[X] + sum_{L>=2} V^(L)[X] ]
// (physical sector: the scale -1 resolvents and cutoffs).
double w00_value(const KernelFamily& fam, const FlowOptions& opt,
                 const EvalPoint& at, AssemblyStats* stats = nullptr);
Jet2 w00_jet(const KernelFamily& fam, const FlowOptions& opt,
             const EvalPoint& at, AssemblyStats* stats = nullptr);

// E-functional: the (0,0) value at the origin with the spectral slot
// overridden to z (the chain solver's workhorse).
double E_of_z(const KernelFamily& fam, const FlowOptions& opt, double z,
              AssemblyStats* stats = nullptr);

// Upsilon at a point (diagnostics, free-comparison tests).
double upsilon_value(const KernelFamily& fam, const EvalPoint& at);

struct StepRecord {
  int scale_from = 0;
  double E_new = 0.0;
  double z_new = 0.0;
  Jet2 dgamma;  // renormalized minus current (0,0) jet at the origin
  double proj_residual1 = 0.0;
  double proj_residual2 = 0.0;
  double degree_spill = 0.0;
  TruncationBudget budget;
  double min_denominator = std::numeric_limits<double>::infinity();
};

// One decimation-plus-rescale step on a reduced family, or the first
// decimation (rho-free) on the physical family; returns the next family.
KernelFamily rg_step(const KernelFamily& fam, const FlowOptions& opt,
                     StepRecord* rec = nullptr);

// Measured cutoff constant: sup over the lattice of the derivative sums of
// the resolvent chain factors, scaled by rho^eta (ends eta = 0, middles 1).
double measure_C_Theta(const KernelFamily& fam, const FlowOptions& opt);

}  // namespace rg
