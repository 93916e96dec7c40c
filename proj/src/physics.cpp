#include "tpf/physics.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "tpf/operators.hpp"

namespace tpf {

void EnergyParams::validate() const {
  if (!(sigma_w > 0.0) || !(sigma_n > 0.0) || !(sigma_wn >= 0.0))
    throw ParamError("energy parameters must be positive");
  if (!(m > 0.0) || !(eta_w > 0.0) || !(eta_n > 0.0))
    throw ParamError("mobility exponent and viscosities must be positive");
}

double EnergyParams::gamma0() const {
  const double s = std::sqrt(sigma_w) + std::sqrt(sigma_n);
  return s * s - 2.0 * sigma_wn;
}

bool EnergyParams::second_order_admissible() const { return sigma_wn < 0.5 * (sigma_w + sigma_n); }

void PorousMedium::validate() const {
  const GridSpec& g = phi.grid();
  require_same_grid(g, K.grid(), "PorousMedium");
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    if (!g.active(c)) continue;
    if (!(phi[c] > 0.0 && phi[c] < 1.0)) throw ParamError("porosity outside (0,1) at cell " + std::to_string(c));
    if (!(K[c] > 0.0)) throw ParamError("non-positive permeability at cell " + std::to_string(c));
  }
}

Model Model::uniform(PorousMedium medium, const EnergyParams& p) {
  p.validate();
  Model out;
  const GridPtr grid = medium.phi.grid_ptr();
  out.medium = std::move(medium);
  out.sigma_w = CellField(grid, p.sigma_w);
  out.sigma_n = CellField(grid, p.sigma_n);
  out.sigma_wn = CellField(grid, p.sigma_wn);
  out.eta_w = p.eta_w;
  out.eta_n = p.eta_n;
  out.m = p.m;
  return out;
}

EnergyParams Model::params_at(std::size_t c) const {
  return EnergyParams{sigma_w[c], sigma_n[c], sigma_wn[c], m, eta_w, eta_n};
}

void Model::validate() const {
  medium.validate();
  const GridSpec& g = grid();
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) params_at(c).validate();
  if (!(mobility_reg_coeff > 0.0)) throw ParamError("mobility regularization coefficient must be positive");
}

void Model::require_second_order_admissible() const {
  const GridSpec& g = grid();
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c) && !params_at(c).second_order_admissible())
      throw ParamError("sigma_wn >= (sigma_w + sigma_n)/2 at cell " + std::to_string(c) +
                       "; the second-order splitting is not convex");
}

double Model::gamma0_min() const {
  double out = std::numeric_limits<double>::infinity();
  const GridSpec& g = grid();
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) out = std::min(out, params_at(c).gamma0());
  return out;
}

double free_energy_density(double S_w, double S_n, const EnergyParams& p) {
  if (!(S_w > 0.0) || !(S_n > 0.0)) throw DomainError("free energy needs positive saturations");
  return p.sigma_w * S_w * (std::log(S_w) - 1.0) + p.sigma_n * S_n * (std::log(S_n) - 1.0) +
         p.sigma_wn * S_w * S_n;
}

void require_interior(const CellField& S, const char* what) {
  const GridSpec& g = S.grid();
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c) && !(S[c] > 0.0 && S[c] < 1.0))
      throw DomainError(std::string(what) + ": saturation outside (0,1) at cell " + std::to_string(c));
}

CellField chem_potential_first(const CellField& S_new, const CellField& S_other_old, const CellField& sigma,
                               const CellField& sigma_wn) {
  const GridSpec& g = S_new.grid();
  CellField out(S_new.grid_ptr());
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    if (!g.active(c)) continue;
    if (!(S_new[c] > 0.0 && S_new[c] < 1.0)) throw DomainError("chemical potential needs 0 < S < 1");
    out[c] = sigma[c] * std::log(S_new[c]) + sigma_wn[c] * S_other_old[c];
  }
  return out;
}

CellField chem_potential_first(const CellField& S_new, const CellField& S_other_old, double sigma,
                               double sigma_wn) {
  return chem_potential_first(S_new, S_other_old, CellField(S_new.grid_ptr(), sigma),
                              CellField(S_new.grid_ptr(), sigma_wn));
}

double H1(double a, double x) {
  if (!(a > 0.0) || !(x > 0.0)) throw DomainError("H1 needs positive arguments");
  if (std::abs(x - a) < 1e-12 * std::max(a, x)) return std::log(0.5 * (a + x)) + 1.0;
  const double u = (x - a) / a;
  return std::log(a) + (1.0 + u) * std::log1p(u) / u;
}

double H2(double a, double x) {
  if (!(a > 0.0) || !(x > 0.0)) throw DomainError("H2 needs positive arguments");
  const double u = (x - a) / a;
  if (std::abs(u) < 0.05) {
    // (u - log1p u) / u^2 = sum_{k>=0} (-1)^k u^k / (k + 2)
    double s = 0.0, uk = 1.0;
    for (int k = 0; k < 14; ++k) {
      s += ((k % 2 == 0) ? uk : -uk) / static_cast<double>(k + 2);
      uk *= u;
    }
    return s / a;
  }
  return (u - std::log1p(u)) / (a * u * u);
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double H0(double a, double x) {
  if (!(a > 0.0) || !(x > 0.0)) throw DomainError("H0 needs positive arguments");
  if (x == a) return 0.0;
  const std::function<double(double)> f = [a](double t) { return H1(a, t); };
  const double fa = f(a), fb = f(x), fm = f(0.5 * (a + x));
  const double whole = (x - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, x, fa, fm, fb, whole, 1e-10, 50);
}

HValues H_family(double a, double x) { return {H0(a, x), H1(a, x), H2(a, x)}; }

double secant_H(double a, double b) {
  if (!(a > 0.0 && a < 1.0) || !(b > 0.0 && b < 1.0)) throw DomainError("secant_H needs arguments in (0,1)");
  return H1(b, a);
}

double signed_pow(double S, double m) {
  return S >= 0.0 ? std::pow(S, m) : -std::pow(-S, m);
}

FaceField mobility_face(const CellField& S, const PorousMedium& medium, double eta, double m,
                        std::optional<double> dt, double reg_coeff) {
  const GridSpec& g = S.grid();
  CellField lamK(S.grid_ptr());
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) lamK[c] = signed_pow(S[c], m) / eta * medium.K[c];
  FaceField M = face_average(lamK);
  if (dt) {
    const double d = reg_coeff * (*dt) * (*dt) * (*dt);
    for (int a = 0; a < g.dim(); ++a)
      for (double& v : M.axis(a)) v = std::hypot(v, d);
    return M;
  }
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t f = 0; f < g.num_faces(a); ++f)
      if (g.interior_face(a, f) && !(M(a, f) > 0.0)) throw DomainError("non-positive face mobility");
  return M;
}

double total_energy(const CellField& S_w, const Model& model) {
  const GridSpec& g = S_w.grid();
  double s = 0.0;
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) s += model.medium.phi[c] * free_energy_density(S_w[c], 1.0 - S_w[c], model.params_at(c));
  return s * g.cell_volume();
}

FaceField darcy_velocity(const CellField& p, const CellField& mu, const FaceField& M) {
  FaceField u = hadamard(M, gradient(p + mu));
  u *= -1.0;
  return u;
}

}  // namespace tpf
