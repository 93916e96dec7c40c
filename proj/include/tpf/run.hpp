#pragma once

// Simulation driver: stepping loop, invariant checks and output files.
//
// Output directory layout:
//   config.ini                the resolved configuration
//   series.csv                one diagnostics record per step
//   snapshots/S_w_NNNNNN.txt  (and .bin, and p_NNNNNN.*) every `cadence` steps
//   vtk/state_NNNNNN.vtk      S_w, S_n, p on the same cadence
// Snapshots are written for step 0, every cadence, and the last step.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tpf/config.hpp"
#include "tpf/diagnostics.hpp"

namespace tpf {

/// Tolerances of the per-step invariant checks.
struct InvariantTolerances {
  double bound_margin = 1e-12;     ///< 0 + margin < S < 1 - margin
  double energy_rel = 1e-10;       ///< E^{k+1} <= E^k + tol max(1, |E^k|), same for the slack
  double mass_rel = 1e-10;         ///< closed systems: |mass - mass_0| <= tol |mass_0|
  double open_mass_rel = 1e-8;     ///< open systems: bookkeeping against boundary volume
  double local_mass = 1e-10;       ///< per-cell mass residual
};

/// Stateful checker fed one record per step.
class InvariantChecker {
 public:
  /// `closed` enables the energy and constant-mass checks.
  InvariantChecker(const DiagnosticsRecord& initial, bool closed, InvariantTolerances tol = {});

  /// Checks `r`.  `boundary_volume_w` is the wetting volume that left through
  /// the boundary during the step (negative for net inflow); without it an
  /// open system skips the mass bookkeeping.  Returns the violations found.
  std::vector<std::string> check(const DiagnosticsRecord& r, std::optional<double> boundary_volume_w = 0.0);

 private:
  DiagnosticsRecord initial_;
  DiagnosticsRecord last_;
  bool closed_;
  InvariantTolerances tol_;
  double outflow_w_ = 0.0;
  double gross_w_ = 0.0;
};

struct RunSummary {
  int steps = 0;
  std::vector<std::string> violations;
  bool aborted = false;  ///< stopped early under fail-fast
};

/// Runs the configured simulation and writes its outputs; progress lines go
/// to `log`.  Throws on solver failure.
RunSummary run_simulation(const RunConfig& cfg, std::ostream& log);

/// Process exit status for a summary: 0, or 3 when a fail-fast run stopped.
int exit_status(const RunSummary& s);

struct AuditReport {
  int records = 0;
  int snapshots = 0;
  std::vector<std::string> violations;
};

/// Re-checks a finished run directory: series invariants, and every stored
/// S_w snapshot against its series record.
AuditReport audit_run(const std::filesystem::path& dir);

}  // namespace tpf
