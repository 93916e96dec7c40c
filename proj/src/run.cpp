#include "tpf/run.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "tpf/coupled.hpp"
#include "tpf/errors.hpp"
#include "tpf/snapshot.hpp"

namespace tpf {

namespace fs = std::filesystem;

InvariantChecker::InvariantChecker(const DiagnosticsRecord& initial, bool closed, InvariantTolerances tol)
    : initial_(initial), last_(initial), closed_(closed), tol_(tol) {}

std::vector<std::string> InvariantChecker::check(const DiagnosticsRecord& r, std::optional<double> boundary_volume_w) {
  std::vector<std::string> v;
  const std::string at = "step " + std::to_string(r.step) + ": ";
  if (!(r.smin > tol_.bound_margin)) v.push_back(at + "S_w minimum " + format_double(r.smin) + " at the lower bound");
  if (!(r.smax < 1.0 - tol_.bound_margin)) v.push_back(at + "S_w maximum " + format_double(r.smax) + " at the upper bound");
  if (!(r.mass_residual <= tol_.local_mass))
    v.push_back(at + "local mass residual " + format_double(r.mass_residual));
  if (closed_) {
    const double etol = tol_.energy_rel * std::max(1.0, std::abs(last_.energy));
    if (!(r.energy <= last_.energy + etol))
      v.push_back(at + "energy rose by " + format_double(r.energy - last_.energy));
    if (!(r.diss_slack <= etol)) v.push_back(at + "dissipation slack " + format_double(r.diss_slack));
    const double dw = std::abs(r.mass_w - initial_.mass_w);
    const double dn = std::abs(r.mass_n - initial_.mass_n);
    if (!(dw <= tol_.mass_rel * std::abs(initial_.mass_w))) v.push_back(at + "wetting mass drift " + format_double(dw));
    if (!(dn <= tol_.mass_rel * std::abs(initial_.mass_n)))
      v.push_back(at + "non-wetting mass drift " + format_double(dn));
  } else if (boundary_volume_w) {
    outflow_w_ += *boundary_volume_w;
    gross_w_ += std::abs(*boundary_volume_w);
    const double defect = std::abs(r.mass_w - initial_.mass_w + outflow_w_);
    if (!(defect <= tol_.open_mass_rel * std::max(gross_w_, 1e-300)))
      v.push_back(at + "wetting mass bookkeeping off by " + format_double(defect));
  }
  last_ = r;
  return v;
}

int exit_status(const RunSummary& s) { return s.aborted ? 3 : 0; }

namespace {

std::string stamp(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", k);
  return buf;
}

void write_outputs(const RunConfig& cfg, const SimState& st, int k) {
  const fs::path snap = cfg.out / "snapshots";
  const std::string s = stamp(k);
  const bool text = cfg.snapshot_format != SnapshotFormat::Binary;
  const bool bin = cfg.snapshot_format != SnapshotFormat::Text;
  if (text) {
    write_snapshot_text(snap / ("S_w_" + s + ".txt"), st.S_w);
    write_snapshot_text(snap / ("p_" + s + ".txt"), st.p);
  }
  if (bin) {
    write_snapshot_binary(snap / ("S_w_" + s + ".bin"), st.S_w);
    write_snapshot_binary(snap / ("p_" + s + ".bin"), st.p);
  }
  const CellField Sn = st.S_n();
  write_vtk(cfg.out / "vtk" / ("state_" + s + ".vtk"), {{"S_w", &st.S_w}, {"S_n", &Sn}, {"p", &st.p}});
}

}  // namespace

RunSummary run_simulation(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const ScenarioConfig& sc = cfg.scenario;
  const GridPtr grid = build_grid(sc);
  const Model model = build_model(sc, grid);
  const bool open = sc.boundary.kind == BoundaryKind::Mixed;
  if (cfg.scheme == Scheme::Second && cfg.stepper.convexity == ConvexityCheck::Strict)
    model.require_second_order_admissible();

  fs::create_directories(cfg.out / "snapshots");
  fs::create_directories(cfg.out / "vtk");
  {
    std::ofstream o(cfg.out / "config.ini");
    o << serialize_run_config(cfg);
  }

  SimState st = initial_state(initial_saturation(sc, grid));
  if (open) st.p = CellField(grid, sc.boundary.mixed.p_out).mask_inactive();
  const DiagnosticsRecord r0 = initial_record(st.S_w, model, 0.0);
  InvariantChecker checker(r0, !open);
  write_outputs(cfg, st, 0);

  const int K = cfg.steps();
  std::vector<DiagnosticsRecord> series;
  series.reserve(static_cast<std::size_t>(K));
  RunSummary sum;
  log << sc.name << ": " << scheme_name(cfg.scheme) << "-order scheme, " << K << " steps of " << format_double(sc.dt)
      << " s\n";
  for (int k = 0; k < K; ++k) {
    StepResult r;
    std::optional<double> out_w;
    if (open) {
      r = advance_coupled(st, model, sc.boundary.mixed, sc.dt, {}, cfg.stepper.max_retries);
      out_w = sc.dt * net_boundary_outflow(r.aux.boundary_flux_w);
    } else {
      r = advance(st, model, {}, sc.dt, cfg.scheme, cfg.stepper);
    }
    st = std::move(r.state);
    st.t = (k + 1) * sc.dt;
    r.record.time = st.t;
    series.push_back(r.record);
    sum.steps = k + 1;

    const auto v = checker.check(r.record, out_w);
    for (const auto& msg : v) log << "invariant violated: " << msg << "\n";
    sum.violations.insert(sum.violations.end(), v.begin(), v.end());

    const bool last = k + 1 == K;
    const bool stop = !v.empty() && cfg.policy == InvariantPolicy::FailFast;
    if ((k + 1) % cfg.cadence == 0 || last || stop) {
      write_outputs(cfg, st, k + 1);
      log << "step " << k + 1 << "  t = " << format_double(st.t) << "  E = " << format_double(r.record.energy)
          << "  S in [" << format_double(r.record.smin) << ", " << format_double(r.record.smax) << "]\n";
    }
    if (stop) {
      sum.aborted = true;
      break;
    }
  }
  write_series(series, cfg.out / "series.csv");
  return sum;
}

AuditReport audit_run(const fs::path& dir) {
  const RunConfig cfg = load_run_config(dir / "config.ini");
  const GridPtr grid = build_grid(cfg.scenario);
  const Model model = build_model(cfg.scenario, grid);
  const bool open = cfg.scenario.boundary.kind == BoundaryKind::Mixed;
  const auto series = read_series(dir / "series.csv");

  AuditReport rep;
  rep.records = static_cast<int>(series.size());
  auto load = [&](int k) -> std::optional<CellField> {
    const fs::path base = dir / "snapshots" / ("S_w_" + stamp(k));
    if (fs::exists(base.string() + ".txt")) return to_field(read_snapshot_text(base.string() + ".txt"), grid);
    if (fs::exists(base.string() + ".bin")) return to_field(read_snapshot_binary(base.string() + ".bin"), grid);
    return std::nullopt;
  };

  const auto S0 = load(0);
  if (!S0) {
    rep.violations.push_back("initial snapshot missing");
    return rep;
  }
  ++rep.snapshots;
  InvariantChecker checker(initial_record(*S0, model, 0.0), !open);
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  for (const auto& r : series) {
    const auto v = checker.check(r, std::nullopt);
    rep.violations.insert(rep.violations.end(), v.begin(), v.end());
    const auto S = load(r.step);
    if (!S) continue;
    ++rep.snapshots;
    const DiagnosticsRecord re = initial_record(*S, model, r.time);
    const std::string at = "step " + std::to_string(r.step) + ": ";
    if (!close(re.energy, r.energy)) rep.violations.push_back(at + "snapshot energy disagrees with the series");
    if (!close(re.mass_w, r.mass_w) || !close(re.mass_n, r.mass_n))
      rep.violations.push_back(at + "snapshot mass disagrees with the series");
    if (re.smin != r.smin || re.smax != r.smax) rep.violations.push_back(at + "snapshot extrema disagree with the series");
  }
  return rep;
}

}  // namespace tpf
