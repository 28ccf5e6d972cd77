#pragma once

#include <vector>

#include "rgflow/initcond.hpp"
#include "rgflow/wickflow.hpp"

namespace rg {

// ---------------------------------------------------------------------------
// Leading-order constants by independent 1-D quadrature.
// ---------------------------------------------------------------------------

// tilde_c2 = int_0^inf kappa^2(x) / (1 + x/2) dx; sharp unit profile gives
// 2 ln(3/2). The leading mass coefficient is (8 pi / 3) tilde_c2.
double tilde_c2(const FormFactor& kappa);

// The seam decomposition of the leading mass slice and its composition
// identity: C_{-1} uses the unit cutoff window, C_0 the first flow window,
// and the composed value uses chibar_rho directly.
struct LeadingConstants {
  double C_minus1 = 0.0;
  double C_0 = 0.0;
  double composed = 0.0;  // direct chibar_rho integral
  double tc = 0.0;        // tilde_c2 of the same profile
};
LeadingConstants leading_constants(const FormFactor& kappa, const Cutoff& chi1,
                                   double rho);

// ---------------------------------------------------------------------------
// Chain solve: the per-scale spectral slots e_n with E_(n)[e_n] =
// rho_eff e_{n+1}, closed by e_N = 0, iterated with frozen-upstream sweeps
// (kernels rebuilt forward after each backward pass).
// ---------------------------------------------------------------------------
struct FlowChain {
  ModelParams mp;
  FlowOptions opt;
  std::vector<KernelFamily> fam;  // fam[0] at scale -1 (physical)
  std::vector<StepRecord> rec;    // rec[i]: step fam[i] -> fam[i+1]
  std::vector<double> e;          // solved slot per family
  int sweeps = 0;
  double chain_residual = 0.0;    // max |E_map(e_i) - rho_eff e_{i+1}|
  TruncationBudget budget;        // accumulated over all steps

  double rho_eff(int i) const { return fam[i].sector == Sector::physical ? 1.0 : mp.rho; }
};

// A non-null grid overrides the default leg grid of the initial family
// (matched-discretization cross checks put the kernels on a test rule).
FlowChain solve_chain(const ModelParams& mp, int n_scales,
                      const FlowOptions* opt = nullptr,
                      std::shared_ptr<const RadialGrid> grid = nullptr);

// Ground-state energy E(p, sigma) = p^2/2 + (g^2/2) <A^2> - zeta_star with
// zeta_star the solved physical slot.
double ground_energy_of_chain(const FlowChain& ch);
double ground_energy(const ModelParams& mp, int n_scales,
                     const FlowOptions* opt = nullptr);

// ---------------------------------------------------------------------------
// Renormalized mass at p = 0 from the accumulated (0,0) corrections:
//   m* = (1 + sum dgamma1) / (1 + sum rho^{-n+} dgamma2),
// dgamma1 the X0-slope increments (marginal, weight one), dgamma2 the
// Xpar-Hessian increments transported to original units (seam weight one).
// ---------------------------------------------------------------------------
struct MassResult {
  double m_star = 1.0;
  double sum_dg1 = 0.0;
  double sum_dg2w = 0.0;
  double E_ground = 0.0;
  double zeta_star = 0.0;
  TruncationBudget budget;
};
MassResult renormalized_mass_from_chain(const FlowChain& ch);
MassResult renormalized_mass(const ModelParams& mp, int n_scales,
                             const FlowOptions* opt = nullptr);

// ---------------------------------------------------------------------------
// Free comparison operator T0^{(p;lambda)} = X0 - |p| Xpar + lambda X^2 and
// channel readouts of a flowed T.
// ---------------------------------------------------------------------------
XPoly15 T0_free(double p, double lambda);
double lambda_channel(const XPoly15& T);  // mean diagonal X-vec curvature / 2

// Measured contraction constants: C_Theta from the resolvent-chain
// derivatives, K_Theta from the outer/inner norm transfer of T-perturbations
// under the free step, and the derived machinery constants.
struct FlowConstants {
  double C_Theta = 1.0;
  double K_Theta = 1.0;
  double xi = 1.0;       // (120 C_Theta^3)^{-1/2}
  double c2 = 0.0;       // 960 C_Theta^3
  double c4 = 0.0;       // 9620 C_Theta^4
};
FlowConstants flow_constants(const ModelParams& mp,
                             const FlowOptions* opt = nullptr);

}  // namespace rg
