#include "tpf/scenarios.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tpf/errors.hpp"
#include "tpf/units.hpp"

namespace tpf {

bool Region::contains(const std::array<double, 3>& x, int dim) const {
  for (int a = 0; a < dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

void ScenarioConfig::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
  for (int a = 0; a < dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    if (cells[i] < 1) throw ConfigError("cell counts must be positive");
    if (!(upper[i] > lower[i])) throw ConfigError("domain upper bound must exceed lower bound");
  }
  if (!(eta_w > 0.0 && eta_n > 0.0 && m > 0.0)) throw ConfigError("viscosities and m must be positive");
  if (!(mobility_reg_coeff >= 0.0)) throw ConfigError("mobility_reg_coeff must be non-negative");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (regions.empty()) throw ConfigError("at least one region is required");
  for (const Region& r : regions) {
    if (!(r.phi > 0.0 && r.phi < 1.0)) throw ConfigError("region porosity must lie in (0,1)");
    if (!(r.K > 0.0)) throw ConfigError("region permeability must be positive");
    if (!(r.sigma_w > 0.0 && r.sigma_n > 0.0 && r.sigma_wn >= 0.0))
      throw ConfigError("region sigma values must be positive");
    if (!(r.s0 > 0.0 && r.s0 < 1.0)) throw ConfigError("region initial saturation must lie in (0,1)");
  }
  if (boundary.kind == BoundaryKind::Mixed) {
    try {
      boundary.mixed.validate();
    } catch (const ParamError& e) {
      throw ConfigError(e.what());
    }
  }
  const GridPtr g = build_grid(*this);
  const auto map = region_map(*this, *g);
  for (std::size_t c = 0; c < g->num_cells(); ++c)
    if (g->active(c) && map[c] < 0) throw ConfigError("active cell " + std::to_string(c) + " is not covered by a region");
}

namespace {

std::vector<std::uint8_t> read_mask(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mask file " + path);
  std::vector<std::uint8_t> mask;
  mask.reserve(n);
  for (int v; in >> v;) {
    if (v != 0 && v != 1) throw ConfigError("mask file " + path + " must hold only 0 and 1");
    mask.push_back(static_cast<std::uint8_t>(v));
  }
  if (!in.eof()) throw ConfigError("mask file " + path + " holds a non-integer entry");
  if (mask.size() != n)
    throw ConfigError("mask file " + path + " has " + std::to_string(mask.size()) + " entries, expected " +
                      std::to_string(n));
  return mask;
}

}  // namespace

GridPtr build_grid(const ScenarioConfig& sc) {
  std::size_t n = 1;
  for (int a = 0; a < sc.dim; ++a) n *= static_cast<std::size_t>(sc.cells[static_cast<std::size_t>(a)]);
  std::vector<std::uint8_t> mask;
  if (sc.mask == "lshape") {
    mask.assign(n, 1);
    const int nx = sc.cells[0], ny = sc.cells[1];
    const int nz = sc.dim == 3 ? sc.cells[2] : 1;
    for (int k = 0; k < nz; ++k)
      for (int j = ny / 2; j < ny; ++j)
        for (int i = nx / 2; i < nx; ++i)
          mask[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * (static_cast<std::size_t>(j) +
                                                                           static_cast<std::size_t>(ny) * k)] = 0;
  } else if (!sc.mask.empty()) {
    mask = read_mask(sc.mask, n);
  }
  std::array<int, 3> cells = sc.cells;
  if (sc.dim == 2) cells[2] = 1;
  return make_grid(GridSpec::from_extents(sc.dim, cells, sc.lower, sc.upper, std::move(mask)));
}

std::vector<int> region_map(const ScenarioConfig& sc, const GridSpec& grid) {
  std::vector<int> map(grid.num_cells(), -1);
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    if (!grid.active(c)) continue;
    const auto x = grid.cell_center(c);
    for (std::size_t r = 0; r < sc.regions.size(); ++r)
      if (sc.regions[r].contains(x, sc.dim)) map[c] = static_cast<int>(r);
  }
  return map;
}

Model build_model(const ScenarioConfig& sc, const GridPtr& grid) {
  const auto map = region_map(sc, *grid);
  Model model;
  model.medium.phi = CellField(grid);
  model.medium.K = CellField(grid);
  model.sigma_w = CellField(grid);
  model.sigma_n = CellField(grid);
  model.sigma_wn = CellField(grid);
  for (std::size_t c = 0; c < grid->num_cells(); ++c) {
    if (map[c] < 0) continue;
    const Region& r = sc.regions[static_cast<std::size_t>(map[c])];
    model.medium.phi[c] = r.phi;
    model.medium.K[c] = r.K;
    model.sigma_w[c] = r.sigma_w;
    model.sigma_n[c] = r.sigma_n;
    model.sigma_wn[c] = r.sigma_wn;
  }
  model.eta_w = sc.eta_w;
  model.eta_n = sc.eta_n;
  model.m = sc.m;
  model.mobility_reg_coeff = sc.mobility_reg_coeff;
  model.validate();
  return model;
}

CellField initial_saturation(const ScenarioConfig& sc, const GridPtr& grid) {
  const auto map = region_map(sc, *grid);
  CellField S(grid);
  for (std::size_t c = 0; c < grid->num_cells(); ++c)
    if (map[c] >= 0) S[c] = sc.regions[static_cast<std::size_t>(map[c])].s0;
  return S;
}

namespace {

// Regularization c dt^3 held at 1e-6 of a reference mobility at the
// scenario's step, so the floor stays far below physical mobilities.
double reg_coeff(double reference_mobility, double dt) { return 1e-6 * reference_mobility / (dt * dt * dt); }

}  // namespace

ScenarioConfig build_example2(const std::string& variant) {
  if (variant != "rect" && variant != "lshape") throw ConfigError("example2 variant must be rect or lshape");
  ScenarioConfig sc;
  sc.name = variant == "rect" ? "example2" : "example2-lshape";
  sc.dim = 2;
  sc.cells = {50, 50, 1};
  sc.lower = {0.0, 0.0, 0.0};
  sc.upper = {100.0, 100.0, 0.0};
  if (variant == "lshape") sc.mask = "lshape";

  Region background;
  background.lo = {0.0, 0.0, 0.0};
  background.hi = {100.0, 100.0, 0.0};
  background.phi = 0.25;
  background.K = 1.0 * units::darcy;
  background.sigma_w = 5.8275;
  background.sigma_n = 0.5398;
  background.sigma_wn = 3.712;
  background.s0 = 0.3;

  Region block = background;
  block.lo = {30.0, 30.0, 0.0};
  block.hi = {70.0, 70.0, 0.0};
  block.phi = 0.15;
  block.K = 0.15 * units::darcy;
  block.sigma_w = 11.655;
  block.sigma_n = 1.0796;
  block.sigma_wn = 7.424;
  sc.regions = {background, block};

  sc.eta_w = 0.9 * units::centipoise;
  sc.eta_n = 0.1 * units::centipoise;
  sc.m = 3.0;
  sc.dt = 0.5 * units::day;
  sc.T = 200 * sc.dt;
  sc.mobility_reg_coeff = reg_coeff(background.K / sc.eta_w, sc.dt);
  return sc;
}

ScenarioConfig build_example3() {
  ScenarioConfig sc;
  sc.name = "example3";
  sc.dim = 3;
  sc.cells = {20, 20, 20};
  sc.lower = {0.0, 0.0, 0.0};
  sc.upper = {100.0, 100.0, 100.0};

  Region low;
  low.lo = {0.0, 0.0, 0.0};
  low.hi = {100.0, 100.0, 100.0};
  low.phi = 0.2;
  low.K = 1.0 * units::darcy;
  low.sigma_w = 11.655;
  low.sigma_n = 1.0796;
  low.sigma_wn = 7.424;
  low.s0 = 0.01;

  Region stripe = low;
  stripe.K = 100.0 * units::darcy;
  stripe.sigma_w = 2.331;
  stripe.sigma_n = 0.2159;
  stripe.sigma_wn = 1.4848;
  Region s1 = stripe, s2 = stripe;
  s1.lo[1] = 20.0;
  s1.hi[1] = 40.0;
  s2.lo[1] = 60.0;
  s2.hi[1] = 80.0;
  sc.regions = {low, s1, s2};

  sc.eta_w = 1.0 * units::centipoise;
  sc.eta_n = 0.75 * units::centipoise;
  sc.m = 3.0;
  sc.dt = 0.8 * units::day;
  sc.T = 200 * sc.dt;
  sc.mobility_reg_coeff = reg_coeff(low.K / sc.eta_w, sc.dt);
  sc.boundary.kind = BoundaryKind::Mixed;
  sc.boundary.mixed.inflow_w = 0.7 / units::year;
  sc.boundary.mixed.p_out = 1.0 * units::bar;
  return sc;
}

std::vector<std::string> builtin_names() { return {"example2", "example2-lshape", "example3"}; }

ScenarioConfig builtin_scenario(const std::string& name) {
  if (name == "example2") return build_example2("rect");
  if (name == "example2-lshape") return build_example2("lshape");
  if (name == "example3") return build_example3();
  throw ConfigError("unknown scenario '" + name + "'");
}

}  // namespace tpf
