// tpf: command-line front end.
//
//   tpf run --scenario example2 --steps 20 --out out/ex2
//   tpf run --config case.ini --scheme second --fail-fast
//   tpf table --preset table1 --out tables
//   tpf audit out/ex2
//   tpf mms-check
//
// TPF_THREADS caps how many ladder entries `table` runs at once.

#include <omp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "tpf/config.hpp"
#include "tpf/errors.hpp"
#include "tpf/mms.hpp"
#include "tpf/run.hpp"

namespace {

int thread_cap() {
  if (const char* env = std::getenv("TPF_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw tpf::ConfigError("TPF_THREADS must be a positive integer");
  }
  return omp_get_max_threads();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-preserving two-phase porous-media flow simulator"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a scenario and write series, snapshots and VTK files");
  std::string config_path, scenario, scheme, out;
  int steps = -1;
  int cadence = 0;
  bool fail_fast = false;
  run->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  run->add_option("--scenario", scenario, "built-in scenario: example2, example2-lshape, example3");
  run->add_option("--scheme", scheme, "first or second")->check(CLI::IsMember({"first", "second"}));
  run->add_option("--out", out, "output directory");
  run->add_option("--steps", steps, "stop after N steps")->check(CLI::NonNegativeNumber);
  run->add_option("--cadence", cadence, "snapshot every N steps")->check(CLI::PositiveNumber);
  run->add_flag("--fail-fast", fail_fast, "stop with a nonzero status at the first invariant violation");

  // table
  auto* table = app.add_subcommand("table", "Manufactured-solution convergence table");
  std::string preset_name, table_out = ".", history = "exact";
  int levels = 3;
  bool injection = false;
  table->add_option("--preset", preset_name, "table1, table2, table3 or table4")
      ->required()
      ->check(CLI::IsMember({"table1", "table2", "table3", "table4"}));
  table->add_option("--levels", levels, "ladder length")->check(CLI::Range(1, 6));
  table->add_option("--out", table_out, "directory for <preset>.csv and <preset>.txt");
  table->add_option("--history", history, "second-order start: exact, first-order or frozen-history")
      ->check(CLI::IsMember({"exact", "first-order", "frozen-history"}));
  table->add_flag("--exact-injection", injection, "replace every state by the exact solution (zero-error dry run)");

  // audit
  auto* audit = app.add_subcommand("audit", "Re-check the invariants of a finished run directory");
  std::string audit_dir;
  audit->add_option("dir", audit_dir, "run output directory")->required()->check(CLI::ExistingDirectory);

  // mms-check
  auto* check = app.add_subcommand("mms-check", "Cross-check closed-form MMS sources against finite differences");
  double check_tol = 1e-8;
  check->add_option("--tol", check_tol, "largest accepted relative mismatch");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (config_path.empty() && scenario.empty()) scenario = "example2";
      if (!config_path.empty() && !scenario.empty()) throw tpf::ConfigError("use either --config or --scenario");
      tpf::RunConfig cfg =
          config_path.empty() ? tpf::default_run_config(scenario) : tpf::load_run_config(config_path);
      if (!scheme.empty()) cfg.scheme = tpf::parse_scheme(scheme);
      if (!out.empty()) cfg.out = out;
      if (steps >= 0) cfg.max_steps = steps;
      if (cadence > 0) cfg.cadence = cadence;
      if (fail_fast) cfg.policy = tpf::InvariantPolicy::FailFast;
      const tpf::RunSummary s = tpf::run_simulation(cfg, std::cout);
      std::cout << s.steps << " steps, " << s.violations.size() << " invariant violations\n";
      return tpf::exit_status(s);
    }
    if (*table) {
      tpf::mms::MmsOptions base;
      base.exact_injection = injection;
      base.exact_history = history == "exact";
      if (history == "frozen-history") base.stepper.bootstrap = tpf::Bootstrap::FrozenHistory;
      const auto p = tpf::mms::preset(preset_name, levels);
      const auto t = tpf::mms::convergence_table(p, base, thread_cap());
      std::filesystem::create_directories(table_out);
      const std::filesystem::path dir(table_out);
      tpf::mms::write_table_csv(t, dir / (preset_name + ".csv"));
      const std::string txt = tpf::mms::format_table_text(t);
      std::ofstream(dir / (preset_name + ".txt")) << txt;
      std::cout << txt;
      return 0;
    }
    if (*audit) {
      const tpf::AuditReport r = tpf::audit_run(audit_dir);
      for (const auto& v : r.violations) std::cout << "violation: " << v << "\n";
      std::cout << r.records << " records, " << r.snapshots << " snapshots, " << r.violations.size()
                << " violations\n";
      return r.violations.empty() ? 0 : 3;
    }
    if (*check) {
      int status = 0;
      for (auto id : {tpf::mms::CaseId::A, tpf::mms::CaseId::B}) {
        const double e = tpf::mms::source_crosscheck(tpf::mms::make_case(id));
        const bool ok = e <= check_tol;
        std::cout << "case " << tpf::mms::case_name(id) << ": max relative mismatch " << e << (ok ? "  ok" : "  FAIL")
                  << "\n";
        if (!ok) status = 1;
      }
      return status;
    }
  } catch (const tpf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
