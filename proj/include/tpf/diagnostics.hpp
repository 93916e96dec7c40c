#pragma once

#include <filesystem>
#include <vector>

#include "tpf/grid.hpp"
#include "tpf/physics.hpp"

namespace tpf {

struct DiagnosticsRecord {
  int step = 0;
  double time = 0.0;
  double energy = 0.0;
  double mass_w = 0.0;
  double mass_n = 0.0;
  double smin = 0.0;
  double smax = 0.0;
  /// E^{k+1} - E^k + dt sum_a ||M_a^1/2 grad(p + mu_a)||^2 - dt sum_a (q_a, p + mu_a)
  double diss_slack = 0.0;
  /// max over cells and phases of |dt (phi dS_a/dt + div u_a - q_a) / phi|
  double mass_residual = 0.0;
  int newton_iters = 0;
  int krylov_iters = 0;

  bool operator==(const DiagnosticsRecord&) const = default;
};

/// Quantities a step used, needed to recompute its flux terms.
struct StepAux {
  CellField mu_w, mu_n;  ///< chemical potentials at the scheme's time level
  CellField p;           ///< pressure at the same level
  FaceField M_w, M_n;    ///< face mobilities of the step
  CellField q_w, q_n;    ///< sources of the step (zero when absent)
  /// Boundary-face phase fluxes, signed along the face axis like any face
  /// field.  Empty for closed problems, where boundary faces carry no flux.
  FaceField boundary_flux_w, boundary_flux_n;
  double dt = 0.0;
};

/// Rebuilds energy, masses, extrema, dissipation slack and local mass
/// residual for the step S_prev -> S_next.
DiagnosticsRecord audit_step(const CellField& S_prev, const CellField& S_next, const Model& model,
                             const StepAux& aux, int step, double time);

/// Record for an initial state (no flux terms).
DiagnosticsRecord initial_record(const CellField& S, const Model& model, double time);

/// Phase velocity -M grad(p + mu), plus prescribed boundary fluxes when given.
FaceField phase_velocity(const CellField& p, const CellField& mu, const FaceField& M, const FaceField* boundary);

/// Per-cell |dt (phi dS/dt + div u - q) / phi| for one phase.
CellField local_mass_residual(const CellField& dS, const FaceField& u, const CellField& q, const CellField& phi,
                              double dt);

void write_series(const std::vector<DiagnosticsRecord>& records, const std::filesystem::path& path);
std::vector<DiagnosticsRecord> read_series(const std::filesystem::path& path);

inline constexpr const char* kSeriesHeader =
    "step,time,energy,mass_w,mass_n,smin,smax,diss_slack,mass_residual,newton_iters,krylov_iters";

}  // namespace tpf
