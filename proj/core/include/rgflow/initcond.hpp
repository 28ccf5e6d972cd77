#pragma once

#include "rgflow/kernelspace.hpp"

namespace rg {

// Model parameters of a run: coupling, conserved momentum modulus (direction
// fixed to e3), infrared exponent, scale ratio, and the kappa profile.
struct ModelParams {
  double g = 0.0;
  double p = 0.0;
  double sigma = 0.0;
  double rho = 0.25;
  FormFactor::Profile profile = FormFactor::Profile::smooth;
  double kappa_uv = 1.0;
  double kappa_window = 0.25;
  int grid_nodes = 24;

  FormFactor form_factor() const {
    FormFactor ff;
    ff.sigma = sigma;
    ff.profile = profile;
    ff.uv = kappa_uv;
    ff.window = kappa_window;
    return ff;
  }
};

// Leg grid adapted to the kappa plateau edge and the cutoff seams.
std::shared_ptr<const RadialGrid> make_default_grid(const ModelParams& mp);

// Vacuum expectation <A(0)^2> with the d^3k/(2|k|) mode normalization:
// 4 pi int q^{1+2 sigma} plateau^2 dq (equals 2 pi for the sharp unit
// profile at sigma = 0).
double a2_physical(const FormFactor& kappa);
// The polarization-summed tadpole sum_lambda int d^3k kappa^2/|k| = twice
// a2_physical (4 pi in the sharp reference case).
double a2_bare(const FormFactor& kappa);

// Physical-sector family at scale -1 for the fiber operator at spectral
// parameter z:  T = X0 - |p| Xpar + X^2/2,  slot = p^2/2 + (g^2/2)<A^2> - z,
// and the exact interaction kernels
//   w10 = -g <(p - X), eps> kappa = w01*,   w11 = g^2 <eps,eps'> k k',
//   w20 = w02* = (g^2/2) <eps,eps'> k k'.
// A non-null grid overrides the default leg grid (matched-discretization
// cross checks put the kernels exactly on a test quadrature rule).
KernelFamily initial_family(const ModelParams& mp, double z = 0.0,
                            std::shared_ptr<const RadialGrid> grid = nullptr);

}  // namespace rg
