#pragma once

// Built-in benchmark configurations and the scenario description they share
// with user config files.  All numbers are SI.

#include <array>
#include <string>
#include <vector>

#include "tpf/coupled.hpp"
#include "tpf/physics.hpp"
#include "tpf/stepper.hpp"

namespace tpf {

/// Axis-aligned box of cells with piecewise-constant properties.  A cell
/// takes the last region whose box contains its centre.
struct Region {
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{0.0, 0.0, 0.0};
  double phi = 0.2;
  double K = 1.0;
  double sigma_w = 1.0, sigma_n = 1.0, sigma_wn = 0.0;
  double s0 = 0.5;  ///< initial wetting saturation

  bool contains(const std::array<double, 3>& x, int dim) const;
  bool operator==(const Region&) const = default;
};

enum class BoundaryKind { NoFlow, Mixed };

struct BoundarySpec {
  BoundaryKind kind = BoundaryKind::NoFlow;
  MixedBoundary mixed{};  ///< used when kind == Mixed

  bool operator==(const BoundarySpec& o) const {
    return kind == o.kind && mixed.inflow_w == o.mixed.inflow_w && mixed.p_out == o.mixed.p_out;
  }
};

struct ScenarioConfig {
  std::string name;
  int dim = 2;
  std::array<int, 3> cells{1, 1, 1};
  std::array<double, 3> lower{0.0, 0.0, 0.0};
  std::array<double, 3> upper{1.0, 1.0, 1.0};
  /// "" (all active), "lshape" (upper-right quadrant removed) or the path of
  /// a plain 0/1 mask file in storage order.
  std::string mask;
  std::vector<Region> regions;
  double eta_w = 1.0, eta_n = 1.0, m = 2.0;
  double mobility_reg_coeff = 1.0;
  double dt = 1.0;
  double T = 1.0;
  BoundarySpec boundary{};

  /// Throws ConfigError on uncovered active cells, bad extents or values.
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// Example 2 on [0, 100 m]^2, 50 x 50, closed.  variant: "rect" or "lshape".
///
/// The porosity and permeability layout is only given as pictures, so it is
/// replaced by a low-permeability block [30, 70]^2 m inside a
/// high-permeability background:
///   background: phi = 0.25, K = 1 d,    sigma = (5.8275, 0.5398, 3.712) Pa
///   block:      phi = 0.15, K = 0.15 d, sigma = (11.655, 1.0796, 7.424) Pa
/// so sqrt(phi / K) doubles across the interface like the sigma values do.
/// Initial S_w = 0.3 everywhere; dt = 0.5 day, T = 200 steps.
ScenarioConfig build_example2(const std::string& variant = "rect");

/// Example 3 on [0, 100 m]^3, 20^3, S_w = 0.01, phi = 0.2, K = 100 d in the
/// stripes 20 <= y <= 40 and 60 <= y <= 80, 1 d elsewhere.  Wetting inflow
/// 0.7 m/year through x = 0, p = 1 bar on x = 100.  dt = 0.8 day,
/// T = 200 steps.
ScenarioConfig build_example3();

/// Names accepted by builtin_scenario.
std::vector<std::string> builtin_names();
/// "example2", "example2-lshape" or "example3".
ScenarioConfig builtin_scenario(const std::string& name);

GridPtr build_grid(const ScenarioConfig& sc);
Model build_model(const ScenarioConfig& sc, const GridPtr& grid);
CellField initial_saturation(const ScenarioConfig& sc, const GridPtr& grid);
/// Index of the region owning each active cell (-1 for inactive cells).
std::vector<int> region_map(const ScenarioConfig& sc, const GridSpec& grid);

}  // namespace tpf
