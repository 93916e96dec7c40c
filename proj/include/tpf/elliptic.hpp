#pragma once

// L_M c = -div(M grad c) / phi with no-flow boundaries, its inverse on
// phi-compatible data, and the associated dual norms.

#include <Eigen/SparseCore>
#include <memory>
#include <vector>

#include "tpf/errors.hpp"
#include "tpf/grid.hpp"

namespace tpf {

struct EllipticProblem {
  FaceField M;
  CellField phi;

  /// Throws DomainError unless M > 0 on interior faces and 0 < phi < 1 on
  /// active cells.  `phi_le_one` relaxes the upper bound to phi <= 1 (the
  /// plain H^-1 norm uses phi = 1).
  void validate(bool phi_le_one = false) const;
};

/// Uniform unit mobility and porosity on `grid`.
EllipticProblem unit_problem(const GridPtr& grid);

struct KrylovConfig {
  double rtol = 1e-11;
  double atol = 1e-14;
  int max_iter = 0;  ///< 0 means 10 * number of cells
  bool jacobi = false;
};

struct KrylovStats {
  int iterations = 0;
  double residual = 0.0;
};

CellField apply_L(const EllipticProblem& prob, const CellField& c);

/// psi with apply_L(psi) = f and phi-weighted mean zero, by conjugate
/// gradients on -div(M grad) psi = phi f.
CellField invert_L(const EllipticProblem& prob, const CellField& f, const KrylovConfig& cfg = {},
                   KrylovStats* stats = nullptr);

/// sqrt((c, (-Delta_h)^-1 c)_h) for plain-mean-zero c.
double h_minus1_norm(const CellField& c, const KrylovConfig& cfg = {});

/// sqrt((phi c, L^-1 c)_h) for phi-weighted-mean-zero c.
double dual_norm_weighted(const CellField& c, const EllipticProblem& prob, const KrylovConfig& cfg = {});

/// Throws IncompatibleRhs unless |mean_phi(f)| <= tol * max|f|.
void check_compatible(const CellField& f, const CellField& phi, double tol = 1e-10);

/// f minus its phi-weighted mean.
CellField remove_weighted_mean(const CellField& f, const CellField& phi);

/// Factorized L_M for repeated solves (sparse LDL^T with one pinned cell).
/// Solutions agree with invert_L up to the direct solver's rounding.
class EllipticSolver {
 public:
  explicit EllipticSolver(EllipticProblem prob);
  ~EllipticSolver();
  EllipticSolver(EllipticSolver&&) noexcept;
  EllipticSolver& operator=(EllipticSolver&&) noexcept;

  const EllipticProblem& problem() const { return prob_; }

  /// Same contract as invert_L; the compatibility check is skipped when
  /// `check` is false (the rhs is then projected silently).
  CellField solve(const CellField& f, bool check = true) const;

  /// -div(M grad) over active cells in compact numbering (entries M/h^2).
  const Eigen::SparseMatrix<double>& stiffness() const;
  /// Compact index -> cell index.
  const std::vector<std::size_t>& active_cells() const;

 private:
  struct Impl;
  EllipticProblem prob_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tpf
