#pragma once

// Fully decoupled convex-splitting time steps.
//
// Step 1 solves one scalar nonlinear problem for S_w (the pressure eliminated
// by inverting the phase operators and subtracting the two phase equations),
// Step 2 recovers the pressure from the wetting equation; S_n = 1 - S_w.

#include <functional>
#include <optional>

#include "tpf/diagnostics.hpp"
#include "tpf/newton.hpp"
#include "tpf/physics.hpp"

namespace tpf {

struct SimState {
  CellField S_w;
  CellField S_w_prev;  ///< S_w one step back; empty before the first step
  CellField p;
  double t = 0.0;
  int k = 0;

  bool has_prev() const { return static_cast<bool>(S_w_prev.grid_ptr()); }
  CellField S_n() const;
};

/// Initial state at time t with zero pressure.
SimState initial_state(CellField S_w, double t = 0.0);

/// Cellwise source rates q_w, q_n (1/s) as functions of time.
struct SourceSpec {
  std::function<void(double t, CellField& q_w, CellField& q_n)> eval;

  bool empty() const { return !eval; }
};

enum class Scheme { First, Second };

/// How the second-order stepper treats the convexity condition
/// sigma_wn < (sigma_w + sigma_n)/2.
enum class ConvexityCheck {
  Strict,     ///< reject parameter sets that violate it (default)
  Pointwise,  ///< only require the Newton Jacobian diagonal to stay positive
};

/// How the second-order scheme obtains S^{-1}.
enum class Bootstrap {
  FrozenHistory,  ///< second-order step with S^{-1} = S^0
  FirstOrder,     ///< one first-order step
};

struct StepperOptions {
  NewtonConfig newton{};
  EllipticBackend elliptic = EllipticBackend::Direct;
  KrylovConfig krylov{};
  ConvexityCheck convexity = ConvexityCheck::Strict;
  Bootstrap bootstrap = Bootstrap::FirstOrder;
  /// Halvings of dt allowed when Newton fails.
  int max_retries = 3;
  /// Tolerance of the closed-system source compatibility check.
  double source_compat_tol = 1e-12;
};

struct StepResult {
  SimState state;
  StepAux aux;
  DiagnosticsRecord record;
  double multiplier = 0.0;
  NewtonStats newton;
  int substeps = 1;
};

/// One first-order step (no retry).
StepResult step_first(const SimState& state, const Model& model, const SourceSpec& sources, double dt,
                      const StepperOptions& opt = {});

/// One second-order step (no retry).  Needs state.S_w_prev.
StepResult step_second(const SimState& state, const Model& model, const SourceSpec& sources, double dt,
                       const StepperOptions& opt = {});

/// Produces state 1 from state 0 for the second-order scheme; sets S_w_prev.
StepResult bootstrap(const SimState& state0, const Model& model, const SourceSpec& sources, double dt,
                     const StepperOptions& opt = {});

/// One step of `scheme` with the dt-halving retry policy.  Second-order
/// states without history are bootstrapped.
StepResult advance(const SimState& state, const Model& model, const SourceSpec& sources, double dt, Scheme scheme,
                   const StepperOptions& opt = {});

/// Validates a closed-system source pair: (q_w + q_n, 1)_h = 0.
void check_source_compatibility(const CellField& q_w, const CellField& q_n, double tol);

}  // namespace tpf
