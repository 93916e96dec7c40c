#pragma once

// Manufactured solutions on the unit square with no-flow boundaries.
//
// Case A: S_w = e^-t (x^2(1-x)^2 y^2(1-y)^2 / 4 + 1/2), phi = 0.8
// Case B: S_w = e^-t (cos(pi x) cos(pi y) / 10 + 1/2),   phi = 0.9
// Both:   p = e^-t cos(pi x) cos(pi y) / 2, K = 0.1, eta_w = 1, eta_n = 0.5,
//         m = 2, sigma = sigma_bar / sqrt(K) with sigma_bar = (0.58, 0.05, 0.36).

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tpf/physics.hpp"
#include "tpf/stepper.hpp"

namespace tpf::mms {

enum class CaseId { A, B };

struct ManufacturedCase {
  CaseId id = CaseId::A;
  double phi = 0.8;
  double K = 0.1;
  EnergyParams params;

  double S(double x, double y, double t) const;
  double p(double x, double y, double t) const;
  /// dS/dt, grad S, Laplacian S
  double S_t(double x, double y, double t) const;
  std::array<double, 2> grad_S(double x, double y, double t) const;
  double lap_S(double x, double y, double t) const;
  std::array<double, 2> grad_p(double x, double y, double t) const;
  double lap_p(double x, double y, double t) const;
};

ManufacturedCase make_case(CaseId id);
CaseId parse_case(const std::string& name);
std::string case_name(CaseId id);

/// Closed-form (q_w, q_n) = phi dS_a/dt - div(lambda_a K grad(p + mu_a)).
std::pair<double, double> manufactured_sources(const ManufacturedCase& mc, double x, double y, double t);

/// Uniform N x N grid on the unit square.
GridPtr unit_square(int N);
Model make_model(const ManufacturedCase& mc, const GridPtr& grid);
/// Cell-centre samples of the sources; q_n is shifted by the mean of
/// q_w + q_n so the closed-system compatibility holds exactly.
SourceSpec make_sources(const ManufacturedCase& mc, const GridPtr& grid);
CellField sample_S(const ManufacturedCase& mc, const GridPtr& grid, double t);
CellField sample_p(const ManufacturedCase& mc, const GridPtr& grid, double t);

/// sqrt(dt sum_k ||e^k||_h^2), accumulated step by step.
class SpaceTimeError {
 public:
  void add(const CellField& numeric, const CellField& exact, double dt);
  /// Pressure variant: both fields are compared after removing their means.
  void add_pressure(const CellField& numeric, const CellField& exact, double dt);
  double value() const;

 private:
  double sum_ = 0.0;
};

struct MmsOptions {
  Scheme scheme = Scheme::First;
  int N = 8;
  double dt = 1.0 / 64.0;
  double T = 1.0;
  StepperOptions stepper{};
  /// Replace every numerical state by the exact samples (harness check).
  bool exact_injection = false;
  /// Second order: take S^{-1} from the exact solution at t = -dt.  When
  /// false the stepper's bootstrap produces the first step.
  bool exact_history = true;
};

struct MmsResult {
  double e_w = 0.0;
  double e_p = 0.0;
  /// ||S_w(T) - exact||_{-1,h} at the final time.
  double h_minus1_final = 0.0;
  int steps = 0;
  int newton_iterations = 0;
};

/// Runs one manufactured case to T and measures the space-time errors.
/// Second-order pressures are compared at half steps.
MmsResult run_mms(CaseId id, const MmsOptions& opt);

struct TableRow {
  double param = 0.0;  ///< tau (first order) or h (second order)
  int N = 0;
  double dt = 0.0;
  double e_w = 0.0, rate_w = 0.0;  ///< rate is NaN on the first row
  double e_p = 0.0, rate_p = 0.0;
};

struct ConvergenceTable {
  std::string name;
  CaseId id = CaseId::A;
  Scheme scheme = Scheme::First;
  std::string param_label;  ///< "tau" or "h"
  std::vector<TableRow> rows;
};

struct LadderEntry {
  int N;
  double dt;
  double param;
};

/// Table presets: table1 (A, first, tau = h^2), table2 (A, second, tau = h/2),
/// table3 (B, first, tau = h^2), table4 (B, second, tau = h).  `levels`
/// trims or extends the ladder (default 3).
struct Preset {
  std::string name;
  CaseId id;
  Scheme scheme;
  std::string param_label;
  std::vector<LadderEntry> ladder;
};
Preset preset(const std::string& name, int levels = 3);

/// Runs the ladder (entries in parallel, at most `max_threads` at a time)
/// and fills errors and rates.
ConvergenceTable convergence_table(const Preset& p, const MmsOptions& base = {}, int max_threads = 1);

double observed_rate(double e_prev, double e_cur, double param_prev, double param_cur);

void write_table_csv(const ConvergenceTable& t, const std::filesystem::path& path);
std::string format_table_text(const ConvergenceTable& t);

/// Largest relative mismatch between the closed-form sources and an
/// eighth-order finite-difference evaluation of the continuous operator at
/// sample points.
double source_crosscheck(const ManufacturedCase& mc, int samples_per_axis = 7);

}  // namespace tpf::mms
