#pragma once

#include "rgflow/kernelspace.hpp"

namespace rg {

// Soft-photon sum rule at one scale: the soft limit of the one-creation
// kernel tracks the X-gradient of the (0,0) part,
//   w10[X; k -> 0]  =  mu * g * <eps, grad_X w00[X]> ,
// with strength mu = 1 initially and mu -> rho^sigma mu per step. mu_hat is
// the least-squares fit of the scalar strength over a deterministic lattice;
// residual_sup is the worst absolute deviation after fitting.
struct SumRuleReport {
  double mu_hat = 0.0;
  double residual_sup = 0.0;
  double rhs_scale = 0.0;  // sup |g <eps, grad w00>|, for relative reading
};

SumRuleReport soft_sum_rule(const KernelFamily& fam);

}  // namespace rg
