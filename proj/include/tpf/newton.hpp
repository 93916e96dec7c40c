#pragma once

// Safeguarded Newton for the per-step saturation problem
//
//   R(S) = local(S) + (1/dt) (L_w^-1 + L_n^-1)(S - S_old - m) = c,
//   mean_phi(S - S_old) = m,
//
// where `local` is a pointwise map (chemical potential difference plus fixed
// source terms) and c is a scalar multiplier.  Both convex-splitting schemes
// fit this form; only `local` differs.

#include <functional>
#include <memory>

#include "tpf/elliptic.hpp"
#include "tpf/grid.hpp"

namespace tpf {

enum class EllipticBackend { Direct, Krylov };
enum class NewtonLinearSolver { Direct, Krylov };

struct NewtonConfig {
  double step_tol = 1e-6;       ///< on ||dS||_inf
  double residual_tol = 1e-11;  ///< on ||R - c||_inf, relative to the residual scale
  int max_iter = 100;
  double theta = 0.9;
  NewtonLinearSolver linear = NewtonLinearSolver::Direct;
  /// Inner projected CG (Krylov path only); the relative tolerance used is
  /// min(1e-2, ||r||) capped below by `inner.rtol`.
  KrylovConfig inner{};

  void validate() const;
};

struct NewtonStats {
  int iterations = 0;
  int krylov_iterations = 0;
  int damped_steps = 0;
  double residual = 0.0;  ///< final ||R - c||_inf
  double last_step = 0.0;
};

struct NewtonResult {
  CellField S;
  double c = 0.0;
  NewtonStats stats;
};

/// Pointwise part: fills `value` (and `diag` = d value / dS when non-null).
using LocalTerm = std::function<void(const CellField& S, CellField& value, CellField* diag)>;

class SaturationResidual {
 public:
  struct Spec {
    CellField phi;
    CellField S_old;
    double shift = 0.0;  ///< m in the mean constraint
    double dt = 1.0;
    FaceField M_w, M_n;
    LocalTerm local;
    double scale = 1.0;  ///< residual magnitude for relative tolerances
    EllipticBackend backend = EllipticBackend::Direct;
    KrylovConfig elliptic{};
  };

  explicit SaturationResidual(Spec spec);

  const Spec& spec() const { return spec_; }
  const GridSpec& grid() const { return spec_.phi.grid(); }

  /// Raw residual R(S) (multiplier not subtracted).
  CellField value(const CellField& S) const;
  /// d local / dS
  CellField local_diag(const CellField& S) const;
  /// J(S) v for phi-mean-zero v.
  CellField jacobian_apply(const CellField& S, const CellField& v) const;
  /// (1/dt)(L_w^-1 + L_n^-1) v for phi-mean-zero v.
  CellField nonlocal(const CellField& v) const;

  CellField inverse_w(const CellField& f) const;
  CellField inverse_n(const CellField& f) const;
  const EllipticSolver* solver_w() const { return solver_w_.get(); }
  const EllipticSolver* solver_n() const { return solver_n_.get(); }

  /// Elliptic Krylov iterations spent so far (Krylov backend).
  int elliptic_iterations() const { return elliptic_iters_; }

 private:
  CellField inverse(const EllipticProblem& prob, const EllipticSolver* solver, const CellField& f) const;

  Spec spec_;
  EllipticProblem prob_w_, prob_n_;
  std::unique_ptr<EllipticSolver> solver_w_, solver_n_;
  mutable int elliptic_iters_ = 0;
};

NewtonResult solve(const SaturationResidual& residual, const CellField& S_init, const NewtonConfig& cfg = {});

/// Largest alpha <= 1 with (1 - theta) S <= S + alpha dS <= S + theta (1 - S).
double safeguard_step(const CellField& S, const CellField& dS, double theta);

/// Interior point satisfying the mean constraint, close to S_old.
CellField constrained_initial_guess(const CellField& S_old, const CellField& phi, double shift);

}  // namespace tpf
