#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tpf/operators.hpp"
#include "tpf/scenarios.hpp"
#include "tpf/units.hpp"

using namespace tpf;

TEST_CASE("built-in scenarios are valid and deterministic") {
  for (const std::string& name : builtin_names()) {
    const ScenarioConfig a = builtin_scenario(name);
    CHECK_NOTHROW(a.validate());
    CHECK(a == builtin_scenario(name));
    const GridPtr g = build_grid(a);
    const Model m = build_model(a, g);
    CHECK_NOTHROW(m.validate());
    const CellField S = initial_saturation(a, g);
    CHECK(min_active(S) > 0.0);
    CHECK(max_active(S) < 1.0);
  }
  CHECK_THROWS_AS(builtin_scenario("example9"), ConfigError);
}

TEST_CASE("example 2 layout") {
  const ScenarioConfig sc = build_example2("rect");
  CHECK(sc.cells == std::array<int, 3>{50, 50, 1});
  CHECK(sc.dt == doctest::Approx(0.5 * units::day));
  CHECK(sc.T == doctest::Approx(200 * sc.dt));
  const GridPtr g = build_grid(sc);
  CHECK(g->h() == doctest::Approx(2.0));
  const auto map = region_map(sc, *g);
  // centre cell sits in the low-permeability block, a corner cell outside
  CHECK(map[g->cell_index(25, 25)] != map[g->cell_index(0, 0)]);
  const Model m = build_model(sc, g);
  CHECK(m.medium.K[g->cell_index(25, 25)] < m.medium.K[g->cell_index(0, 0)]);
  CHECK(m.sigma_w[g->cell_index(25, 25)] == doctest::Approx(2.0 * m.sigma_w[g->cell_index(0, 0)]));

  const ScenarioConfig ls = build_example2("lshape");
  const GridPtr gl = build_grid(ls);
  CHECK(gl->num_active() == 2500 - 625);
  CHECK_FALSE(gl->active(gl->cell_index(40, 40)));
  CHECK(gl->active(gl->cell_index(40, 10)));
  CHECK_THROWS_AS(build_example2("round"), ConfigError);
}

TEST_CASE("example 3 layout") {
  const ScenarioConfig sc = build_example3();
  CHECK(sc.dim == 3);
  CHECK(sc.boundary.kind == BoundaryKind::Mixed);
  CHECK(sc.boundary.mixed.inflow_w == doctest::Approx(0.7 / units::year));
  CHECK(sc.boundary.mixed.p_out == doctest::Approx(units::bar));
  const GridPtr g = build_grid(sc);
  const Model m = build_model(sc, g);
  CHECK(m.medium.K[g->cell_index(5, 6, 5)] == doctest::Approx(100 * units::darcy));  // y = 32.5
  CHECK(m.medium.K[g->cell_index(5, 10, 5)] == doctest::Approx(units::darcy));       // y = 52.5
}

TEST_CASE("scenario validation") {
  ScenarioConfig sc = build_example2("rect");
  sc.dt = 0.0;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = build_example2("rect");
  sc.regions[0].phi = 1.5;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = build_example2("rect");
  sc.regions = {sc.regions[1]};  // the block alone leaves cells uncovered
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = build_example2("rect");
  sc.upper[1] = 120.0;
  CHECK_THROWS(sc.validate());

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "tpf_test_scenarios";
  fs::create_directories(dir);
  sc = build_example2("rect");
  sc.cells = {4, 4, 1};
  sc.upper = {100, 100, 0};
  sc.mask = (dir / "mask.txt").string();
  std::ofstream(dir / "mask.txt") << "1 1 1 1\n1 1 1 1\n1 1 0 0\n1 1 0 0\n";
  CHECK(build_grid(sc)->num_active() == 12);
  std::ofstream(dir / "mask.txt") << "1 1 1\n";
  CHECK_THROWS_AS(build_grid(sc), ConfigError);
}

TEST_CASE("unit conversions") {
  CHECK(units::darcy == doctest::Approx(9.869233e-13));
  CHECK(units::day == 86400.0);
  CHECK(units::year == 365.0 * 86400.0);
  CHECK(units::bar == 1e5);
  CHECK(units::centipoise == 1e-3);
}

TEST_CASE("coupled open-boundary steps close the wetting-mass budget") {
  ScenarioConfig sc = build_example3();
  sc.cells = {6, 5, 3};
  sc.upper = {60, 50, 30};
  sc.regions.resize(1);
  sc.regions.push_back(sc.regions[0]);
  sc.regions[1].lo = {0, 20, 0};
  sc.regions[1].hi = {60, 30, 30};
  sc.regions[1].K = 100 * units::darcy;
  sc.validate();
  const GridPtr g = build_grid(sc);
  const Model m = build_model(sc, g);
  SimState s = initial_state(initial_saturation(sc, g));
  s.p = CellField(g, sc.boundary.mixed.p_out);
  const double mass0 = weighted_integral(s.S_w, m.medium.phi);
  double out = 0.0;
  for (int k = 0; k < 5; ++k) {
    const StepResult r = advance_coupled(s, m, sc.boundary.mixed, sc.dt);
    out += sc.dt * net_boundary_outflow(r.aux.boundary_flux_w);
    s = r.state;
    CHECK(r.record.smin > 0.0);
    CHECK(r.record.smax < 1.0);
    CHECK(r.record.mass_residual <= 1e-10);
  }
  const double inflow = sc.boundary.mixed.inflow_w * 50.0 * 30.0 * 5 * sc.dt;
  const double gain = weighted_integral(s.S_w, m.medium.phi) - mass0;
  CHECK(gain > 0.0);
  CHECK(std::abs(gain + out) <= 1e-8 * inflow);
  // out counts the inflow as negative volume plus what leaves at x = L
  CHECK(-out <= inflow * (1 + 1e-12));

  MixedBoundary bad{-1.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), ParamError);
}
