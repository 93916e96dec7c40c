#include "tpf/diagnostics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tpf/errors.hpp"
#include "tpf/operators.hpp"
#include "tpf/snapshot.hpp"

namespace tpf {

namespace {

bool has_values(const FaceField& f) { return static_cast<bool>(f.grid_ptr()); }
bool has_values(const CellField& f) { return static_cast<bool>(f.grid_ptr()); }

void fill_state_terms(DiagnosticsRecord& r, const CellField& S, const Model& model) {
  r.energy = total_energy(S, model);
  const CellField& phi = model.medium.phi;
  r.mass_w = weighted_integral(S, phi);
  CellField Sn(S.grid_ptr(), 1.0);
  Sn -= S;
  r.mass_n = weighted_integral(Sn, phi);
  r.smin = min_active(S);
  r.smax = max_active(S);
}

}  // namespace

FaceField phase_velocity(const CellField& p, const CellField& mu, const FaceField& M, const FaceField* boundary) {
  FaceField u = darcy_velocity(p, mu, M);
  if (boundary && has_values(*boundary)) {
    const GridSpec& g = p.grid();
    for (int a = 0; a < g.dim(); ++a)
      for (std::size_t f = 0; f < g.num_faces(a); ++f)
        if (!g.interior_face(a, f)) u(a, f) = (*boundary)(a, f);
  }
  return u;
}

CellField local_mass_residual(const CellField& dS, const FaceField& u, const CellField& q, const CellField& phi,
                              double dt) {
  const GridSpec& g = dS.grid();
  const CellField div = divergence(u);
  CellField out(dS.grid_ptr());
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    if (!g.active(c)) continue;
    const double qc = has_values(q) ? q[c] : 0.0;
    out[c] = std::abs(dS[c] + dt * (div[c] - qc) / phi[c]);
  }
  return out;
}

DiagnosticsRecord initial_record(const CellField& S, const Model& model, double time) {
  DiagnosticsRecord r;
  r.time = time;
  fill_state_terms(r, S, model);
  return r;
}

DiagnosticsRecord audit_step(const CellField& S_prev, const CellField& S_next, const Model& model,
                             const StepAux& aux, int step, double time) {
  DiagnosticsRecord r;
  r.step = step;
  r.time = time;
  fill_state_terms(r, S_next, model);
  const double E_prev = total_energy(S_prev, model);
  const CellField& phi = model.medium.phi;
  const double dt = aux.dt;

  const CellField pw = aux.p + aux.mu_w;
  const CellField pn = aux.p + aux.mu_n;
  const FaceField gw = gradient(pw);
  const FaceField gn = gradient(pn);
  const double flux = inner_product(hadamard(aux.M_w, gw), gw) + inner_product(hadamard(aux.M_n, gn), gn);
  double work = 0.0;
  if (has_values(aux.q_w)) work += inner_product(aux.q_w, pw);
  if (has_values(aux.q_n)) work += inner_product(aux.q_n, pn);
  r.diss_slack = r.energy - E_prev + dt * flux - dt * work;

  const CellField dSw = S_next - S_prev;
  CellField dSn = dSw;
  dSn *= -1.0;
  const FaceField uw = phase_velocity(aux.p, aux.mu_w, aux.M_w, &aux.boundary_flux_w);
  const FaceField un = phase_velocity(aux.p, aux.mu_n, aux.M_n, &aux.boundary_flux_n);
  r.mass_residual = std::max(max_active(local_mass_residual(dSw, uw, aux.q_w, phi, dt)),
                             max_active(local_mass_residual(dSn, un, aux.q_n, phi, dt)));
  return r;
}

void write_series(const std::vector<DiagnosticsRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << kSeriesHeader << '\n';
  for (const auto& r : records) {
    out << r.step << ',' << format_double(r.time) << ',' << format_double(r.energy) << ','
        << format_double(r.mass_w) << ',' << format_double(r.mass_n) << ',' << format_double(r.smin) << ','
        << format_double(r.smax) << ',' << format_double(r.diss_slack) << ',' << format_double(r.mass_residual)
        << ',' << r.newton_iters << ',' << r.krylov_iters << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<DiagnosticsRecord> read_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kSeriesHeader) throw ConfigError("unexpected series header in " + path.string());
  std::vector<DiagnosticsRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> tok;
    std::stringstream ss(line);
    for (std::string t; std::getline(ss, t, ',');) tok.push_back(t);
    if (tok.size() != 11) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 11 columns");
    DiagnosticsRecord r;
    r.step = std::stoi(tok[0]);
    r.time = parse_double(tok[1]);
    r.energy = parse_double(tok[2]);
    r.mass_w = parse_double(tok[3]);
    r.mass_n = parse_double(tok[4]);
    r.smin = parse_double(tok[5]);
    r.smax = parse_double(tok[6]);
    r.diss_slack = parse_double(tok[7]);
    r.mass_residual = parse_double(tok[8]);
    r.newton_iters = std::stoi(tok[9]);
    r.krylov_iters = std::stoi(tok[10]);
    out.push_back(r);
  }
  return out;
}

}  // namespace tpf
