#include "tpf/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <type_traits>
#include <vector>

#include "tpf/errors.hpp"
#include "tpf/snapshot.hpp"
#include "tpf/units.hpp"

namespace tpf {

std::string scheme_name(Scheme s) { return s == Scheme::First ? "first" : "second"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "first") return Scheme::First;
  if (s == "second") return Scheme::Second;
  throw ConfigError("scheme must be 'first' or 'second', got '" + s + "'");
}

void RunConfig::validate() const {
  if (!(scenario.T > 0.0)) throw ConfigError("T must be positive");
  if (!(scenario.dt > 0.0)) throw ConfigError("dt must be positive");
  if (cadence < 1) throw ConfigError("cadence must be at least 1");
  if (stepper.max_retries < 0) throw ConfigError("max_retries must be non-negative");
  scenario.validate();
  if (scheme == Scheme::Second && scenario.boundary.kind == BoundaryKind::Mixed)
    throw ConfigError("open boundaries are only supported by the first-order scheme");
}

int RunConfig::steps() const {
  int n = static_cast<int>(std::floor(scenario.T / scenario.dt * (1.0 + 1e-12)));
  if (max_steps >= 0) n = std::min(n, max_steps);
  return n;
}

bool RunConfig::operator==(const RunConfig& o) const {
  const auto& a = stepper;
  const auto& b = o.stepper;
  return scheme == o.scheme && scenario_name == o.scenario_name && scenario == o.scenario &&
         max_steps == o.max_steps && out == o.out && cadence == o.cadence && policy == o.policy &&
         snapshot_format == o.snapshot_format && a.bootstrap == b.bootstrap && a.convexity == b.convexity &&
         a.newton.step_tol == b.newton.step_tol && a.newton.residual_tol == b.newton.residual_tol &&
         a.newton.max_iter == b.newton.max_iter && a.newton.linear == b.newton.linear &&
         a.krylov.rtol == b.krylov.rtol && a.newton.inner.rtol == b.newton.inner.rtol &&
         a.max_retries == b.max_retries;
}

RunConfig default_run_config(const std::string& scenario) {
  RunConfig c;
  c.scenario_name = scenario;
  c.scenario = builtin_scenario(scenario);
  return c;
}

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

class Reader {
 public:
  Reader(std::string origin, std::map<std::string, Section> sections)
      : origin_(std::move(origin)), sections_(std::move(sections)) {}

  bool has(const std::string& sec) const { return sections_.count(sec) != 0; }

  const Section& section(const std::string& sec) const { return sections_.at(sec); }

  [[noreturn]] void fail(const std::string& sec, const std::string& key, const std::string& msg) const {
    const auto& e = sections_.at(sec).at(key);
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": [" + sec + "] " + key + ": " + msg);
  }

  double number(const std::string& sec, const std::string& key, double fallback) const {
    const auto* e = find(sec, key);
    if (!e) return fallback;
    const auto tok = split(e->value);
    if (tok.empty() || tok.size() > 2) fail(sec, key, "expected a number with an optional unit");
    double v = 0.0;
    try {
      v = parse_double(tok[0]);
    } catch (const std::exception&) {
      fail(sec, key, "'" + tok[0] + "' is not a number");
    }
    if (tok.size() == 2) {
      try {
        v = units::to_si(v, tok[1]);
      } catch (const ConfigError&) {
        fail(sec, key, "unknown unit '" + tok[1] + "'");
      }
    }
    return v;
  }

  int integer(const std::string& sec, const std::string& key, int fallback) const {
    const auto* e = find(sec, key);
    if (!e) return fallback;
    try {
      std::size_t pos = 0;
      const int v = std::stoi(e->value, &pos);
      if (pos != e->value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(sec, key, "'" + e->value + "' is not an integer");
    }
  }

  std::string text(const std::string& sec, const std::string& key, const std::string& fallback) const {
    const auto* e = find(sec, key);
    return e ? e->value : fallback;
  }

  template <class T>
  std::array<T, 3> triple(const std::string& sec, const std::string& key, std::array<T, 3> fallback) const {
    const auto* e = find(sec, key);
    if (!e) return fallback;
    const auto tok = split(e->value);
    if (tok.size() < 2 || tok.size() > 3) fail(sec, key, "expected 2 or 3 values");
    std::array<T, 3> out{};
    if constexpr (std::is_same_v<T, int>) out = {1, 1, 1};
    for (std::size_t i = 0; i < tok.size(); ++i) {
      try {
        if constexpr (std::is_same_v<T, int>) {
          std::size_t pos = 0;
          out[i] = std::stoi(tok[i], &pos);
          if (pos != tok[i].size()) throw std::invalid_argument("trailing");
        } else {
          out[i] = parse_double(tok[i]);
        }
      } catch (const std::exception&) {
        fail(sec, key, "'" + tok[i] + "' is not a number");
      }
    }
    return out;
  }

  template <class E>
  E choice(const std::string& sec, const std::string& key, E fallback,
           const std::vector<std::pair<std::string, E>>& options) const {
    const auto* e = find(sec, key);
    if (!e) return fallback;
    for (const auto& [name, v] : options)
      if (name == e->value) return v;
    std::string list;
    for (const auto& [name, v] : options) list += (list.empty() ? "" : ", ") + name;
    fail(sec, key, "'" + e->value + "' is not one of " + list);
  }

  /// Rejects keys outside `allowed`.
  void only(const std::string& sec, const std::vector<std::string>& allowed) const {
    if (!has(sec)) return;
    for (const auto& [key, e] : sections_.at(sec)) {
      bool ok = false;
      for (const auto& a : allowed) ok = ok || a == key;
      if (!ok) throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": unknown key '" + key + "' in [" + sec + "]");
    }
  }

 private:
  const Entry* find(const std::string& sec, const std::string& key) const {
    const auto s = sections_.find(sec);
    if (s == sections_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  std::string origin_;
  std::map<std::string, Section> sections_;
};

const std::vector<std::pair<std::string, Scheme>> kSchemes{{"first", Scheme::First}, {"second", Scheme::Second}};
const std::vector<std::pair<std::string, InvariantPolicy>> kPolicies{{"record", InvariantPolicy::Record},
                                                                      {"fail-fast", InvariantPolicy::FailFast}};
const std::vector<std::pair<std::string, SnapshotFormat>> kFormats{
    {"text", SnapshotFormat::Text}, {"binary", SnapshotFormat::Binary}, {"both", SnapshotFormat::Both}};
const std::vector<std::pair<std::string, Bootstrap>> kBootstraps{{"first-order", Bootstrap::FirstOrder},
                                                                  {"frozen-history", Bootstrap::FrozenHistory}};
const std::vector<std::pair<std::string, ConvexityCheck>> kConvexity{{"strict", ConvexityCheck::Strict},
                                                                      {"pointwise", ConvexityCheck::Pointwise}};
const std::vector<std::pair<std::string, NewtonLinearSolver>> kLinear{{"direct", NewtonLinearSolver::Direct},
                                                                       {"krylov", NewtonLinearSolver::Krylov}};
const std::vector<std::pair<std::string, BoundaryKind>> kBoundary{{"no-flow", BoundaryKind::NoFlow},
                                                                   {"mixed", BoundaryKind::Mixed}};

template <class E>
std::string name_of(E v, const std::vector<std::pair<std::string, E>>& options) {
  for (const auto& [name, x] : options)
    if (x == v) return name;
  return "?";
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  std::map<std::string, Section> sections;
  std::string current;
  std::istringstream in(text);
  int lineno = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      if (sections.count(current))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    if (current.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto& sec = sections[current];
    if (sec.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "' in [" + current + "]");
    sec[key] = {value, lineno};
  }

  for (const auto& [name, sec] : sections) {
    (void)sec;
    if (name != "run" && name != "grid" && name != "physics" && name != "boundary" && name.rfind("region.", 0) != 0)
      throw ConfigError(origin + ": unknown section [" + name + "]");
  }

  const Reader r(origin, sections);
  r.only("run", {"scheme", "scenario", "T", "dt", "steps", "out", "cadence", "policy", "snapshot_format", "bootstrap",
                 "convexity", "newton_step_tol", "newton_residual_tol", "newton_max_iter", "newton_linear",
                 "krylov_rtol", "max_retries"});
  r.only("grid", {"dim", "cells", "lower", "upper", "mask"});
  r.only("physics", {"eta_w", "eta_n", "m", "mobility_reg_coeff"});
  r.only("boundary", {"kind", "inflow_w", "p_out"});

  RunConfig c;
  c.scenario_name = r.text("run", "scenario", "example2");
  bool builtin = false;
  for (const auto& n : builtin_names()) builtin = builtin || n == c.scenario_name;
  if (builtin) {
    c.scenario = builtin_scenario(c.scenario_name);
  } else {
    c.scenario = ScenarioConfig{};
    c.scenario.name = c.scenario_name;
    if (!r.has("grid")) throw ConfigError(origin + ": scenario '" + c.scenario_name + "' is not built in and [grid] is missing");
  }
  ScenarioConfig& sc = c.scenario;

  c.scheme = r.choice("run", "scheme", Scheme::First, kSchemes);
  sc.T = r.number("run", "T", sc.T);
  sc.dt = r.number("run", "dt", sc.dt);
  c.max_steps = r.integer("run", "steps", -1);
  c.out = r.text("run", "out", "out");
  c.cadence = r.integer("run", "cadence", 10);
  c.policy = r.choice("run", "policy", InvariantPolicy::Record, kPolicies);
  c.snapshot_format = r.choice("run", "snapshot_format", SnapshotFormat::Text, kFormats);
  auto& so = c.stepper;
  so.bootstrap = r.choice("run", "bootstrap", so.bootstrap, kBootstraps);
  so.convexity = r.choice("run", "convexity", so.convexity, kConvexity);
  so.newton.step_tol = r.number("run", "newton_step_tol", so.newton.step_tol);
  so.newton.residual_tol = r.number("run", "newton_residual_tol", so.newton.residual_tol);
  so.newton.max_iter = r.integer("run", "newton_max_iter", so.newton.max_iter);
  so.newton.linear = r.choice("run", "newton_linear", so.newton.linear, kLinear);
  so.krylov.rtol = r.number("run", "krylov_rtol", so.krylov.rtol);
  so.newton.inner.rtol = so.krylov.rtol;
  so.max_retries = r.integer("run", "max_retries", so.max_retries);

  sc.dim = r.integer("grid", "dim", sc.dim);
  sc.cells = r.triple<int>("grid", "cells", sc.cells);
  sc.lower = r.triple<double>("grid", "lower", sc.lower);
  sc.upper = r.triple<double>("grid", "upper", sc.upper);
  sc.mask = r.text("grid", "mask", sc.mask);
  if (sc.mask == "none") sc.mask.clear();

  sc.eta_w = r.number("physics", "eta_w", sc.eta_w);
  sc.eta_n = r.number("physics", "eta_n", sc.eta_n);
  sc.m = r.number("physics", "m", sc.m);
  sc.mobility_reg_coeff = r.number("physics", "mobility_reg_coeff", sc.mobility_reg_coeff);

  sc.boundary.kind = r.choice("boundary", "kind", sc.boundary.kind, kBoundary);
  sc.boundary.mixed.inflow_w = r.number("boundary", "inflow_w", sc.boundary.mixed.inflow_w);
  sc.boundary.mixed.p_out = r.number("boundary", "p_out", sc.boundary.mixed.p_out);

  std::map<int, Region> regions;
  for (const auto& [name, sec] : sections) {
    if (name.rfind("region.", 0) != 0) continue;
    int idx = -1;
    try {
      std::size_t pos = 0;
      idx = std::stoi(name.substr(7), &pos);
      if (pos != name.size() - 7 || idx < 0) throw std::invalid_argument("index");
    } catch (const std::exception&) {
      throw ConfigError(origin + ": region sections are named [region.N] with N >= 0, got [" + name + "]");
    }
    r.only(name, {"lo", "hi", "phi", "K", "sigma_w", "sigma_n", "sigma_wn", "s0"});
    Region g;
    for (const char* key : {"lo", "hi", "phi", "K", "sigma_w", "sigma_n", "sigma_wn", "s0"})
      if (!sec.count(key)) throw ConfigError(origin + ": [" + name + "] is missing '" + key + "'");
    g.lo = r.triple<double>(name, "lo", g.lo);
    g.hi = r.triple<double>(name, "hi", g.hi);
    g.phi = r.number(name, "phi", g.phi);
    g.K = r.number(name, "K", g.K);
    g.sigma_w = r.number(name, "sigma_w", g.sigma_w);
    g.sigma_n = r.number(name, "sigma_n", g.sigma_n);
    g.sigma_wn = r.number(name, "sigma_wn", g.sigma_wn);
    g.s0 = r.number(name, "s0", g.s0);
    regions[idx] = g;
  }
  if (!regions.empty()) {
    sc.regions.clear();
    int expect = 0;
    for (const auto& [idx, g] : regions) {
      if (idx != expect) throw ConfigError(origin + ": region indices must run 0, 1, 2, ... without gaps");
      sc.regions.push_back(g);
      ++expect;
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

std::string serialize_run_config(const RunConfig& c) {
  const ScenarioConfig& sc = c.scenario;
  const auto& so = c.stepper;
  std::ostringstream o;
  auto d = [](double x) { return format_double(x); };
  auto tri = [&](const std::array<double, 3>& a) {
    return d(a[0]) + " " + d(a[1]) + (sc.dim == 3 ? " " + d(a[2]) : std::string());
  };
  o << "[run]\n"
    << "scheme = " << scheme_name(c.scheme) << "\n"
    << "scenario = " << c.scenario_name << "\n"
    << "T = " << d(sc.T) << "\n"
    << "dt = " << d(sc.dt) << "\n"
    << "steps = " << c.max_steps << "\n"
    << "out = " << c.out.string() << "\n"
    << "cadence = " << c.cadence << "\n"
    << "policy = " << name_of(c.policy, kPolicies) << "\n"
    << "snapshot_format = " << name_of(c.snapshot_format, kFormats) << "\n"
    << "bootstrap = " << name_of(so.bootstrap, kBootstraps) << "\n"
    << "convexity = " << name_of(so.convexity, kConvexity) << "\n"
    << "newton_step_tol = " << d(so.newton.step_tol) << "\n"
    << "newton_residual_tol = " << d(so.newton.residual_tol) << "\n"
    << "newton_max_iter = " << so.newton.max_iter << "\n"
    << "newton_linear = " << name_of(so.newton.linear, kLinear) << "\n"
    << "krylov_rtol = " << d(so.krylov.rtol) << "\n"
    << "max_retries = " << so.max_retries << "\n\n";
  o << "[grid]\n"
    << "dim = " << sc.dim << "\n"
    << "cells = " << sc.cells[0] << " " << sc.cells[1];
  if (sc.dim == 3) o << " " << sc.cells[2];
  o << "\n"
    << "lower = " << tri(sc.lower) << "\n"
    << "upper = " << tri(sc.upper) << "\n"
    << "mask = " << (sc.mask.empty() ? "none" : sc.mask) << "\n\n";
  o << "[physics]\n"
    << "eta_w = " << d(sc.eta_w) << "\n"
    << "eta_n = " << d(sc.eta_n) << "\n"
    << "m = " << d(sc.m) << "\n"
    << "mobility_reg_coeff = " << d(sc.mobility_reg_coeff) << "\n\n";
  o << "[boundary]\n"
    << "kind = " << name_of(sc.boundary.kind, kBoundary) << "\n"
    << "inflow_w = " << d(sc.boundary.mixed.inflow_w) << "\n"
    << "p_out = " << d(sc.boundary.mixed.p_out) << "\n";
  for (std::size_t i = 0; i < sc.regions.size(); ++i) {
    const Region& g = sc.regions[i];
    o << "\n[region." << i << "]\n"
      << "lo = " << tri(g.lo) << "\n"
      << "hi = " << tri(g.hi) << "\n"
      << "phi = " << d(g.phi) << "\n"
      << "K = " << d(g.K) << "\n"
      << "sigma_w = " << d(g.sigma_w) << "\n"
      << "sigma_n = " << d(g.sigma_n) << "\n"
      << "sigma_wn = " << d(g.sigma_wn) << "\n"
      << "s0 = " << d(g.s0) << "\n";
  }
  return o.str();
}

}  // namespace tpf
