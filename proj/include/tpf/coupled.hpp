#pragma once

// First-order step for open boundaries, solved as one coupled (S_w, p)
// system.
//
// The decoupled steps eliminate the pressure by inverting no-flow elliptic
// operators, which is not available once a boundary carries flux.  Here both
// phase mass balances are kept, with the same convex-splitting potentials as
// the first-order scheme, and Newton runs on (S_w, p) together.  The
// Dirichlet pressure fixes the gauge.
//
// Boundary treatment along the x axis:
//   lower x face: prescribed wetting inflow velocity, no non-wetting flux
//   upper x face: p = p_out through a ghost value at distance h/2, with zero
//                 normal derivative of both chemical potentials
// Every other boundary face is closed.

#include "tpf/stepper.hpp"

namespace tpf {

struct MixedBoundary {
  double inflow_w = 0.0;  ///< wetting velocity entering through the lower x face (m/s)
  double p_out = 0.0;     ///< pressure at the upper x face (Pa)

  void validate() const;
};

struct CoupledConfig {
  int max_iter = 50;
  /// On |dt (phi dS/dt + div u_a) / phi|, the per-cell saturation residual.
  double residual_tol = 1e-13;
  double theta = 0.9;
  /// Relative tolerance of the inner BiCGSTAB solve.
  double linear_rtol = 1e-12;
};

/// One coupled first-order step (no retry).  state.p is the Newton guess.
StepResult step_coupled(const SimState& state, const Model& model, const MixedBoundary& bc, double dt,
                        const CoupledConfig& cfg = {});

/// step_coupled with the dt-halving retry policy of `advance`.
StepResult advance_coupled(const SimState& state, const Model& model, const MixedBoundary& bc, double dt,
                           const CoupledConfig& cfg = {}, int max_retries = 3);

/// Total outward flux through boundary faces, times face area (m^3/s).
double net_boundary_outflow(const FaceField& boundary_flux);

}  // namespace tpf
