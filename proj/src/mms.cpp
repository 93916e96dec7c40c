#include "tpf/mms.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "tpf/elliptic.hpp"
#include "tpf/errors.hpp"
#include "tpf/operators.hpp"
#include "tpf/snapshot.hpp"

namespace tpf::mms {

namespace {

constexpr double pi = std::numbers::pi;

// g(x) = x^2 (1-x)^2 and its derivatives
double g0(double x) { return x * x * (1 - x) * (1 - x); }
double g1(double x) { return 2 * x * (1 - x) * (1 - 2 * x); }
double g2(double x) { return 2 * (1 - 6 * x + 6 * x * x); }

}  // namespace

double ManufacturedCase::S(double x, double y, double t) const {
  const double e = std::exp(-t);
  if (id == CaseId::A) return e * (0.25 * g0(x) * g0(y) + 0.5);
  return e * (0.1 * std::cos(pi * x) * std::cos(pi * y) + 0.5);
}

double ManufacturedCase::S_t(double x, double y, double t) const { return -S(x, y, t); }

std::array<double, 2> ManufacturedCase::grad_S(double x, double y, double t) const {
  const double e = std::exp(-t);
  if (id == CaseId::A) return {e * 0.25 * g1(x) * g0(y), e * 0.25 * g0(x) * g1(y)};
  return {-e * 0.1 * pi * std::sin(pi * x) * std::cos(pi * y), -e * 0.1 * pi * std::cos(pi * x) * std::sin(pi * y)};
}

double ManufacturedCase::lap_S(double x, double y, double t) const {
  const double e = std::exp(-t);
  if (id == CaseId::A) return e * 0.25 * (g2(x) * g0(y) + g0(x) * g2(y));
  return -e * 0.2 * pi * pi * std::cos(pi * x) * std::cos(pi * y);
}

double ManufacturedCase::p(double x, double y, double t) const {
  return 0.5 * std::exp(-t) * std::cos(pi * x) * std::cos(pi * y);
}

std::array<double, 2> ManufacturedCase::grad_p(double x, double y, double t) const {
  const double e = std::exp(-t);
  return {-0.5 * pi * e * std::sin(pi * x) * std::cos(pi * y), -0.5 * pi * e * std::cos(pi * x) * std::sin(pi * y)};
}

double ManufacturedCase::lap_p(double x, double y, double t) const {
  return -pi * pi * std::exp(-t) * std::cos(pi * x) * std::cos(pi * y);
}

ManufacturedCase make_case(CaseId id) {
  ManufacturedCase mc;
  mc.id = id;
  mc.phi = id == CaseId::A ? 0.8 : 0.9;
  mc.K = 0.1;
  const double s = 1.0 / std::sqrt(mc.K);
  mc.params = EnergyParams{0.58 * s, 0.05 * s, 0.36 * s, 2.0, 1.0, 0.5};
  return mc;
}

CaseId parse_case(const std::string& name) {
  if (name == "A" || name == "a") return CaseId::A;
  if (name == "B" || name == "b") return CaseId::B;
  throw ConfigError("unknown manufactured case '" + name + "' (expected A or B)");
}

std::string case_name(CaseId id) { return id == CaseId::A ? "A" : "B"; }

std::pair<double, double> manufactured_sources(const ManufacturedCase& mc, double x, double y, double t) {
  const EnergyParams& P = mc.params;
  const double S = mc.S(x, y, t);
  const double Sn = 1.0 - S;
  const auto gS = mc.grad_S(x, y, t);
  const auto gp = mc.grad_p(x, y, t);
  const double lS = mc.lap_S(x, y, t);
  const double lp = mc.lap_p(x, y, t);
  const double gS2 = gS[0] * gS[0] + gS[1] * gS[1];

  // mu_w = sigma_w ln S + sigma_wn (1 - S), mu_n = sigma_n ln(1 - S) + sigma_wn S,
  // derivatives with respect to S_w.
  const double mw1 = P.sigma_w / S - P.sigma_wn;
  const double mw2 = -P.sigma_w / (S * S);
  const double mn1 = -P.sigma_n / Sn + P.sigma_wn;
  const double mn2 = -P.sigma_n / (Sn * Sn);

  const double lam_w = std::pow(S, P.m) / P.eta_w;
  const double dlam_w = P.m * std::pow(S, P.m - 1.0) / P.eta_w;  // d/dS_w
  const double lam_n = std::pow(Sn, P.m) / P.eta_n;
  const double dlam_n = -P.m * std::pow(Sn, P.m - 1.0) / P.eta_n;  // d/dS_w

  // grad Phi = grad p + mu' grad S,  Lap Phi = Lap p + mu'' |grad S|^2 + mu' Lap S
  const double gSgp = gS[0] * gp[0] + gS[1] * gp[1];
  const double gS_gPhi_w = gSgp + mw1 * gS2;
  const double gS_gPhi_n = gSgp + mn1 * gS2;
  const double lPhi_w = lp + mw2 * gS2 + mw1 * lS;
  const double lPhi_n = lp + mn2 * gS2 + mn1 * lS;

  const double St = mc.S_t(x, y, t);
  const double q_w = mc.phi * St - mc.K * (dlam_w * gS_gPhi_w + lam_w * lPhi_w);
  const double q_n = -mc.phi * St - mc.K * (dlam_n * gS_gPhi_n + lam_n * lPhi_n);
  return {q_w, q_n};
}

GridPtr unit_square(int N) {
  if (N < 2) throw GridError("manufactured grids need N >= 2");
  return make_grid(GridSpec(2, {N, N, 1}, 1.0 / N));
}

Model make_model(const ManufacturedCase& mc, const GridPtr& grid) {
  PorousMedium med{CellField(grid, mc.phi), CellField(grid, mc.K)};
  return Model::uniform(std::move(med), mc.params);
}

namespace {

CellField sample(const GridPtr& grid, const std::function<double(double, double)>& f) {
  CellField out(grid);
  for (std::size_t c = 0; c < grid->num_cells(); ++c) {
    const auto x = grid->cell_center(c);
    out[c] = f(x[0], x[1]);
  }
  return out;
}

}  // namespace

CellField sample_S(const ManufacturedCase& mc, const GridPtr& grid, double t) {
  return sample(grid, [&](double x, double y) { return mc.S(x, y, t); });
}

CellField sample_p(const ManufacturedCase& mc, const GridPtr& grid, double t) {
  return sample(grid, [&](double x, double y) { return mc.p(x, y, t); });
}

SourceSpec make_sources(const ManufacturedCase& mc, const GridPtr& grid) {
  SourceSpec spec;
  spec.eval = [mc, grid](double t, CellField& q_w, CellField& q_n) {
    double sum = 0.0;
    for (std::size_t c = 0; c < grid->num_cells(); ++c) {
      const auto x = grid->cell_center(c);
      const auto [a, b] = manufactured_sources(mc, x[0], x[1], t);
      q_w[c] = a;
      q_n[c] = b;
      sum += a + b;
    }
    const double shift = sum / static_cast<double>(grid->num_cells());
    for (std::size_t c = 0; c < grid->num_cells(); ++c) q_n[c] -= shift;
  };
  return spec;
}

void SpaceTimeError::add(const CellField& numeric, const CellField& exact, double dt) {
  const CellField e = numeric - exact;
  sum_ += dt * inner_product(e, e);
}

void SpaceTimeError::add_pressure(const CellField& numeric, const CellField& exact, double dt) {
  CellField e = numeric - exact;
  const double m = mean(e);
  const GridSpec& g = e.grid();
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) e[c] -= m;
  sum_ += dt * inner_product(e, e);
}

double SpaceTimeError::value() const { return std::sqrt(sum_); }

MmsResult run_mms(CaseId id, const MmsOptions& opt) {
  const ManufacturedCase mc = make_case(id);
  const GridPtr grid = unit_square(opt.N);
  const Model model = make_model(mc, grid);
  const SourceSpec src = make_sources(mc, grid);
  const int K = static_cast<int>(std::llround(opt.T / opt.dt));
  if (K < 1 || std::abs(K * opt.dt - opt.T) > 1e-9 * opt.T)
    throw ConfigError("final time must be a multiple of the time step");

  StepperOptions so = opt.stepper;
  if (opt.scheme == Scheme::Second) so.convexity = ConvexityCheck::Pointwise;

  SimState state = initial_state(sample_S(mc, grid, 0.0));
  if (opt.scheme == Scheme::Second && opt.exact_history) state.S_w_prev = sample_S(mc, grid, -opt.dt);
  SpaceTimeError ew, ep;
  MmsResult res;
  for (int k = 0; k < K; ++k) {
    const double t_new = (k + 1) * opt.dt;
    // Pressure lives at t^{k+1} (first order) or t^{k+1/2} (second order).
    const double t_p = opt.scheme == Scheme::First ? t_new : t_new - 0.5 * opt.dt;
    if (opt.exact_injection) {
      SimState next;
      next.S_w = sample_S(mc, grid, t_new);
      next.S_w_prev = state.S_w;
      next.p = sample_p(mc, grid, t_p);
      next.t = t_new;
      next.k = k + 1;
      state = std::move(next);
    } else {
      StepResult r = advance(state, model, src, opt.dt, opt.scheme, so);
      res.newton_iterations += r.record.newton_iters;
      state = std::move(r.state);
      state.t = t_new;  // avoid drift from repeated additions
    }
    ew.add(state.S_w, sample_S(mc, grid, t_new), opt.dt);
    ep.add_pressure(state.p, sample_p(mc, grid, t_p), opt.dt);
  }
  res.e_w = ew.value();
  res.e_p = ep.value();
  res.steps = K;
  CellField diff = state.S_w - sample_S(mc, grid, opt.T);
  const double m = mean(diff);
  for (double& v : diff.values()) v -= m;
  res.h_minus1_final = h_minus1_norm(diff);
  return res;
}

double observed_rate(double e_prev, double e_cur, double param_prev, double param_cur) {
  if (!(e_prev > 0.0) || !(e_cur > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(e_prev / e_cur) / std::log(param_prev / param_cur);
}

Preset preset(const std::string& name, int levels) {
  if (levels < 1 || levels > 6) throw ConfigError("ladder levels must lie in 1..6");
  Preset p;
  p.name = name;
  if (name == "table1" || name == "table3") {
    p.id = name == "table1" ? CaseId::A : CaseId::B;
    p.scheme = Scheme::First;
    p.param_label = "tau";
    for (int i = 0; i < levels; ++i) {
      const int N = 4 << i;  // tau = h^2 = 1/16, 1/64, ...
      p.ladder.push_back({N, 1.0 / (N * N), 1.0 / (N * N)});
    }
  } else if (name == "table2" || name == "table4") {
    p.id = name == "table2" ? CaseId::A : CaseId::B;
    p.scheme = Scheme::Second;
    p.param_label = "h";
    for (int i = 0; i < levels; ++i) {
      const int N = 8 << i;
      const double h = 1.0 / N;
      p.ladder.push_back({N, name == "table2" ? 0.5 * h : h, h});
    }
  } else {
    throw ConfigError("unknown table preset '" + name + "' (expected table1..table4)");
  }
  return p;
}

ConvergenceTable convergence_table(const Preset& p, const MmsOptions& base, int max_threads) {
  ConvergenceTable t;
  t.name = p.name;
  t.id = p.id;
  t.scheme = p.scheme;
  t.param_label = p.param_label;
  t.rows.resize(p.ladder.size());
  const int n = static_cast<int>(p.ladder.size());
  const int threads = std::max(1, std::min(max_threads, n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < n; ++i) {
    const auto& e = p.ladder[static_cast<std::size_t>(i)];
    MmsOptions o = base;
    o.scheme = p.scheme;
    o.N = e.N;
    o.dt = e.dt;
    TableRow& row = t.rows[static_cast<std::size_t>(i)];
    row.param = e.param;
    row.N = e.N;
    row.dt = e.dt;
    try {
      const MmsResult r = run_mms(p.id, o);
      row.e_w = r.e_w;
      row.e_p = r.e_p;
    } catch (const std::exception& ex) {
      errors[static_cast<std::size_t>(i)] = ex.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("ladder entry failed: " + e);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    auto& r = t.rows[i];
    if (i == 0) {
      r.rate_w = r.rate_p = std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto& q = t.rows[i - 1];
      r.rate_w = observed_rate(q.e_w, r.e_w, q.param, r.param);
      r.rate_p = observed_rate(q.e_p, r.e_p, q.param, r.param);
    }
  }
  return t;
}

namespace {

std::string rate_text(double r, int precision) {
  if (std::isnan(r)) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << r;
  return s.str();
}

std::string pad(const std::string& text, std::size_t width) {
  return text + std::string(text.size() < width ? width - text.size() : 1, ' ');
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(4) << v;
  return s.str();
}

}  // namespace

void write_table_csv(const ConvergenceTable& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << t.param_label << ",N,dt,e_w,rate_w,e_p,rate_p\n";
  for (const auto& r : t.rows) {
    out << format_double(r.param) << ',' << r.N << ',' << format_double(r.dt) << ',' << format_double(r.e_w) << ','
        << (std::isnan(r.rate_w) ? std::string() : format_double(r.rate_w)) << ','
        << format_double(r.e_p) << ',' << (std::isnan(r.rate_p) ? std::string() : format_double(r.rate_p))
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string format_table_text(const ConvergenceTable& t) {
  std::ostringstream s;
  s << t.name << ": case " << case_name(t.id) << ", " << (t.scheme == Scheme::First ? "first" : "second")
    << "-order scheme, T = 1\n";
  s << pad(t.param_label, 10) << pad("N", 6) << pad("e_w", 13) << pad("rate", 9) << pad("e_p", 13) << "rate\n";
  for (const auto& r : t.rows) {
    s << pad("1/" + std::to_string(std::llround(1.0 / r.param)), 10) << pad(std::to_string(r.N), 6)
      << pad(sci(r.e_w), 13) << pad(rate_text(r.rate_w, 4), 9) << pad(sci(r.e_p), 13) << rate_text(r.rate_p, 4)
      << '\n';
  }
  return s.str();
}

namespace {

// Eighth-order central first derivative.
double d1(const std::function<double(double)>& f, double x, double h) {
  static constexpr double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  double s = 0.0;
  for (int k = 1; k <= 4; ++k) s += c[k - 1] * (f(x + k * h) - f(x - k * h));
  return s / h;
}

}  // namespace

double source_crosscheck(const ManufacturedCase& mc, int samples_per_axis) {
  const EnergyParams& P = mc.params;
  const double h = 1e-3;
  auto Phi = [&](int phase, double x, double y, double t) {
    const double S = mc.S(x, y, t);
    const double mu = phase == 0 ? P.sigma_w * std::log(S) + P.sigma_wn * (1.0 - S)
                                 : P.sigma_n * std::log(1.0 - S) + P.sigma_wn * S;
    return mc.p(x, y, t) + mu;
  };
  auto lam = [&](int phase, double x, double y, double t) {
    const double S = mc.S(x, y, t);
    return phase == 0 ? std::pow(S, P.m) / P.eta_w : std::pow(1.0 - S, P.m) / P.eta_n;
  };
  auto flux = [&](int phase, int axis, double x, double y, double t) {
    const double g = axis == 0 ? d1([&](double s) { return Phi(phase, s, y, t); }, x, h)
                               : d1([&](double s) { return Phi(phase, x, s, t); }, y, h);
    return lam(phase, x, y, t) * mc.K * g;
  };
  double worst = 0.0;
  for (int i = 1; i <= samples_per_axis; ++i)
    for (int j = 1; j <= samples_per_axis; ++j)
      for (double t : {0.0, 0.37, 1.0}) {
        const double x = static_cast<double>(i) / (samples_per_axis + 1);
        const double y = static_cast<double>(j) / (samples_per_axis + 1);
        const double St = d1([&](double s) { return mc.S(x, y, s); }, t, h);
        double q[2];
        for (int ph = 0; ph < 2; ++ph) {
          const double div = d1([&](double s) { return flux(ph, 0, s, y, t); }, x, h) +
                             d1([&](double s) { return flux(ph, 1, x, s, t); }, y, h);
          q[ph] = (ph == 0 ? 1.0 : -1.0) * mc.phi * St - div;
        }
        const auto [qw, qn] = manufactured_sources(mc, x, y, t);
        const double scale = std::max({1.0, std::abs(qw), std::abs(qn)});
        worst = std::max({worst, std::abs(qw - q[0]) / scale, std::abs(qn - q[1]) / scale});
      }
  return worst;
}

}  // namespace tpf::mms
