#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "tpf/operators.hpp"
#include "tpf/stepper.hpp"

using namespace tpf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "tpf_test_diagnostics";
  fs::create_directories(d);
  return d / name;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

Model random_model(const GridPtr& g, std::mt19937_64& rng) {
  return Model::uniform({oracle::random_field(g, 0.2, 0.9, rng), oracle::random_field(g, 0.5, 2.0, rng)},
                        {1.1, 0.7, 0.4, 2.0, 1.0, 0.5});
}

}  // namespace

TEST_CASE("stationary step records a zero slack") {
  std::mt19937_64 rng(1);
  const GridPtr g = make_grid(GridSpec(2, {5, 5, 1}, 0.2));
  const Model m = random_model(g, rng);
  const SimState s = initial_state(CellField(g, 0.4));
  const StepResult r = step_first(s, m, {}, 0.1);
  const DiagnosticsRecord r0 = initial_record(s.S_w, m, 0.0);
  CHECK(std::abs(r.record.diss_slack) <= 1e-15);
  CHECK(r.record.mass_w == r0.mass_w);
  CHECK(r.record.mass_n == r0.mass_n);
  CHECK(r.record.energy == r0.energy);
  CHECK(r.record.mass_residual <= 1e-15);
}

TEST_CASE("record fields against direct evaluation") {
  std::mt19937_64 rng(2);
  const GridPtr g = make_grid(GridSpec(2, {4, 4, 1}, 0.25));
  const Model m = random_model(g, rng);
  const SimState s = initial_state(oracle::random_field(g, 0.2, 0.8, rng));
  const double dt = 0.05;
  const SourceSpec q{[](double, CellField& qw, CellField& qn) {
    for (std::size_t c = 0; c < qw.size(); ++c) {
      qw[c] = c % 3 == 0 ? 0.4 : -0.1;
      qn[c] = -qw[c];
    }
  }};
  const StepResult r = step_first(s, m, q, dt);

  double mw = 0.0, mn = 0.0, smin = 1.0, smax = 0.0;
  for (std::size_t c = 0; c < 16; ++c) {
    mw += m.medium.phi[c] * r.state.S_w[c] / 16.0;
    mn += m.medium.phi[c] * (1.0 - r.state.S_w[c]) / 16.0;
    smin = std::min(smin, r.state.S_w[c]);
    smax = std::max(smax, r.state.S_w[c]);
  }
  CHECK(r.record.mass_w == doctest::Approx(mw).epsilon(1e-14));
  CHECK(r.record.mass_n == doctest::Approx(mn).epsilon(1e-14));
  CHECK(r.record.smin == smin);
  CHECK(r.record.smax == smax);
  const DiagnosticsRecord r0 = initial_record(s.S_w, m, 0.0);
  CHECK(std::abs(r.record.mass_w - r0.mass_w - dt * integral(r.aux.q_w)) <= 1e-12);
  CHECK(r.record.mass_residual <= 1e-12);

  // slack from its definition
  const CellField pw = r.aux.p + r.aux.mu_w, pn = r.aux.p + r.aux.mu_n;
  const FaceField gw = gradient(pw), gn = gradient(pn);
  const double flux = inner_product(hadamard(r.aux.M_w, gw), gw) + inner_product(hadamard(r.aux.M_n, gn), gn);
  const double work = inner_product(r.aux.q_w, pw) + inner_product(r.aux.q_n, pn);
  const double slack = r.record.energy - r0.energy + dt * flux - dt * work;
  CHECK(r.record.diss_slack == doctest::Approx(slack).epsilon(1e-12));
  CHECK(r.record.diss_slack <= 1e-10);
}

TEST_CASE("local mass residual and boundary fluxes") {
  std::mt19937_64 rng(3);
  const GridPtr g = make_grid(GridSpec(2, {4, 3, 1}, 0.25));
  const CellField phi = oracle::random_field(g, 0.2, 0.9, rng);
  const FaceField u = oracle::random_faces(g, -1.0, 1.0, rng, true);
  const double dt = 0.1;
  const CellField div = divergence(u);
  CellField dS(g);
  for (std::size_t c = 0; c < dS.size(); ++c) dS[c] = -dt * div[c] / phi[c];
  CHECK(max_active(local_mass_residual(dS, u, CellField(), phi, dt)) <= 1e-15);

  FaceField b(g);
  b(0, g->face_index(0, 0, 1)) = 2.0;
  const FaceField v = phase_velocity(CellField(g), CellField(g), FaceField(g, 1.0), &b);
  CHECK(v(0, g->face_index(0, 0, 1)) == 2.0);
  CHECK(v(0, g->face_index(0, 4, 1)) == 0.0);
}

TEST_CASE("series files") {
  write_series({}, scratch("empty.csv"));
  const auto e = lines_of(scratch("empty.csv"));
  REQUIRE(e.size() == 1);
  CHECK(e[0] == kSeriesHeader);
  CHECK(read_series(scratch("empty.csv")).empty());

  DiagnosticsRecord r;
  r.step = 3;
  r.time = 0.1 + 0.2;
  r.energy = -1.0 / 3.0;
  r.mass_w = 0.123456789012345678;
  r.mass_n = 1e-300;
  r.smin = 0.1;
  r.smax = 0.9;
  r.diss_slack = -7.6e-8;
  r.mass_residual = 2.5e-13;
  r.newton_iters = 4;
  r.krylov_iters = 17;
  write_series({r}, scratch("one.csv"));
  CHECK(lines_of(scratch("one.csv")).size() == 2);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<DiagnosticsRecord> many;
  for (int k = 0; k < 20; ++k) {
    DiagnosticsRecord x;
    x.step = k;
    x.time = u(rng);
    x.energy = u(rng) * 1e7;
    x.mass_w = u(rng);
    x.mass_n = u(rng);
    x.smin = u(rng);
    x.smax = u(rng);
    x.diss_slack = u(rng) * 1e-12;
    x.mass_residual = std::abs(u(rng));
    x.newton_iters = k;
    many.push_back(x);
  }
  write_series(many, scratch("many.csv"));
  CHECK(read_series(scratch("many.csv")) == many);

  std::ofstream(scratch("bad.csv")) << "step,time\n";
  CHECK_THROWS_AS(read_series(scratch("bad.csv")), ConfigError);
}
