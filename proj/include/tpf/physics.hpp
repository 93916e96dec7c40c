#pragma once

// Free energy, chemical potentials, mobilities and the x ln x secant family.
//
// F(S_w, S_n) = sigma_w S_w (ln S_w - 1) + sigma_n S_n (ln S_n - 1)
//             + sigma_wn S_w S_n
// The energy parameters may vary by region, so the model stores them as cell
// fields; viscosities and the relative-permeability exponent are global.

#include <optional>

#include "tpf/errors.hpp"
#include "tpf/grid.hpp"

namespace tpf {

struct EnergyParams {
  double sigma_w = 1.0;
  double sigma_n = 1.0;
  double sigma_wn = 0.0;
  double m = 2.0;
  double eta_w = 1.0;
  double eta_n = 1.0;

  /// Throws ParamError unless every entry is strictly positive (sigma_wn >= 0).
  void validate() const;
  /// (sqrt(sigma_w) + sqrt(sigma_n))^2 - 2 sigma_wn
  double gamma0() const;
  /// sigma_wn < (sigma_w + sigma_n) / 2, the convexity condition of the
  /// second-order splitting.
  bool second_order_admissible() const;
};

struct PorousMedium {
  CellField phi;
  CellField K;

  void validate() const;
};

/// Medium plus region-wise energy parameters.
struct Model {
  PorousMedium medium;
  CellField sigma_w, sigma_n, sigma_wn;
  double eta_w = 1.0;
  double eta_n = 1.0;
  double m = 2.0;
  /// c in the mobility regularization sqrt(Pi^2 + (c dt^3)^2).  1 recovers
  /// the plain dt^6 form; dimensional runs scale it to mobility / time^3.
  double mobility_reg_coeff = 1.0;

  static Model uniform(PorousMedium medium, const EnergyParams& p);

  const GridSpec& grid() const { return medium.phi.grid(); }
  const GridPtr& grid_ptr() const { return medium.phi.grid_ptr(); }
  EnergyParams params_at(std::size_t c) const;

  void validate() const;
  /// Throws ParamError naming the first cell that fails the second-order
  /// convexity condition.
  void require_second_order_admissible() const;
  /// Minimum of gamma0 over active cells.
  double gamma0_min() const;
};

double free_energy_density(double S_w, double S_n, const EnergyParams& p);

/// sigma ln(S_new) + sigma_wn S_other_old; serves both phases by swapping
/// arguments.
CellField chem_potential_first(const CellField& S_new, const CellField& S_other_old, const CellField& sigma,
                               const CellField& sigma_wn);
CellField chem_potential_first(const CellField& S_new, const CellField& S_other_old, double sigma,
                               double sigma_wn);

/// (a ln a - b ln b) / (a - b) for a, b in (0,1), with the limit ln a + 1 when
/// |a - b| < 1e-12 max(a, b).
double secant_H(double a, double b);

struct HValues {
  double H0, H1, H2;
};

/// H1 = secant of x ln x from a to x, H0 = integral of H1 from a to x,
/// H2 = dH1/dx.  Needs a, x > 0.
HValues H_family(double a, double x);
double H1(double a, double x);
double H2(double a, double x);
/// Adaptive Simpson to 1e-10; only used for the solvability functional.
double H0(double a, double x);

/// S^m with the sign of S kept, so extrapolated values below zero stay
/// negative instead of flipping through an even power.
double signed_pow(double S, double m);

/// Face mobility Pi(lambda K) with lambda = S^m / eta.  With `dt` the value is
/// regularized to sqrt(Pi^2 + (reg_coeff dt^3)^2).
FaceField mobility_face(const CellField& S, const PorousMedium& medium, double eta, double m,
                        std::optional<double> dt = std::nullopt, double reg_coeff = 1.0);

/// (phi, F(S_w, 1 - S_w))_h
double total_energy(const CellField& S_w, const Model& model);

/// -M grad(p + mu)
FaceField darcy_velocity(const CellField& p, const CellField& mu, const FaceField& M);

/// Throws DomainError unless 0 < S < 1 on active cells.
void require_interior(const CellField& S, const char* what);

}  // namespace tpf
