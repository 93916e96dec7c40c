#pragma once

// Run configuration and its INI-style text form.
//
//   [run]      scheme, scenario, T, dt, steps, out, cadence, policy,
//              snapshot_format, bootstrap, convexity, newton_step_tol,
//              newton_residual_tol, newton_max_iter, newton_linear,
//              krylov_rtol, max_retries
//   [grid]     dim, cells, lower, upper, mask
//   [physics]  eta_w, eta_n, m, mobility_reg_coeff
//   [boundary] kind (no-flow | mixed), inflow_w, p_out
//   [region.N] lo, hi, phi, K, sigma_w, sigma_n, sigma_wn, s0
//
// '#' and ';' start comments.  Scalars may carry a unit after the number
// ("0.5 day", "100 d", "1 bar"); the serializer always writes plain SI.
// Sections absent from a file keep the values of the named built-in
// scenario; any [region.N] section replaces the whole region list.

#include <filesystem>
#include <string>

#include "tpf/scenarios.hpp"
#include "tpf/stepper.hpp"

namespace tpf {

enum class InvariantPolicy { Record, FailFast };
enum class SnapshotFormat { Text, Binary, Both };

struct RunConfig {
  Scheme scheme = Scheme::First;
  std::string scenario_name = "example2";
  ScenarioConfig scenario = build_example2("rect");
  /// Truncates the run to this many steps when >= 0.
  int max_steps = -1;
  std::filesystem::path out = "out";
  int cadence = 10;
  InvariantPolicy policy = InvariantPolicy::Record;
  SnapshotFormat snapshot_format = SnapshotFormat::Text;
  StepperOptions stepper{};

  /// Throws ConfigError on T <= 0, dt <= 0, cadence < 1 or a bad scenario.
  void validate() const;
  /// Steps the run will take: floor(T / dt), capped by max_steps.
  int steps() const;
  bool operator==(const RunConfig& o) const;
};

/// Parses config text; `origin` names the source in error messages.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "config");
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& cfg);

/// Config for a built-in scenario with defaults.
RunConfig default_run_config(const std::string& scenario);

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);

}  // namespace tpf
