#include "tpf/elliptic.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <vector>

#include "tpf/operators.hpp"

namespace tpf {

void EllipticProblem::validate(bool phi_le_one) const {
  const GridSpec& g = phi.grid();
  require_same_grid(g, M.grid(), "EllipticProblem");
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    if (!g.active(c)) continue;
    const double p = phi[c];
    if (!(p > 0.0) || (phi_le_one ? p > 1.0 : p >= 1.0))
      throw DomainError("porosity outside (0,1) at cell " + std::to_string(c));
  }
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t f = 0; f < g.num_faces(a); ++f)
      if (g.interior_face(a, f) && !(M(a, f) > 0.0))
        throw DomainError("non-positive face mobility on axis " + std::to_string(a));
}

EllipticProblem unit_problem(const GridPtr& grid) {
  return EllipticProblem{FaceField(grid, 1.0), CellField(grid, 1.0)};
}

CellField apply_L(const EllipticProblem& prob, const CellField& c) {
  CellField out = flux_laplacian(prob.M, c);
  const GridSpec& g = c.grid();
  for (std::size_t i = 0; i < out.size(); ++i)
    if (g.active(i)) out[i] /= prob.phi[i];
  return out;
}

void check_compatible(const CellField& f, const CellField& phi, double tol) {
  const double m = weighted_mean(f, phi);
  const double scale = max_abs_active(f);
  if (!(std::abs(m) <= tol * scale) && scale > 0.0)
    throw IncompatibleRhs("right-hand side has nonzero weighted mean " + std::to_string(m));
  if (!std::isfinite(m)) throw IncompatibleRhs("non-finite right-hand side");
}

CellField remove_weighted_mean(const CellField& f, const CellField& phi) {
  CellField out = f;
  const double m = weighted_mean(f, phi);
  const GridSpec& g = f.grid();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.active(i) ? out[i] - m : 0.0;
  return out;
}

namespace {

double dot_active(const GridSpec& g, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (g.active(i)) s += a[i] * b[i];
  return s;
}

// phi * f with the plain mean over active cells removed, inactive zeroed.
std::vector<double> scaled_rhs(const CellField& f, const CellField& phi) {
  const GridSpec& g = f.grid();
  std::vector<double> b(f.size(), 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (g.active(i)) {
      b[i] = phi[i] * f[i];
      s += b[i];
    }
  s /= static_cast<double>(g.num_active());
  for (std::size_t i = 0; i < b.size(); ++i)
    if (g.active(i)) b[i] -= s;
  return b;
}

std::vector<double> diagonal(const EllipticProblem& prob) {
  const GridSpec& g = prob.phi.grid();
  std::vector<double> d(g.num_cells(), 0.0);
  const double inv_h2 = 1.0 / (g.h() * g.h());
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t f = 0; f < g.num_faces(a); ++f) {
      if (!g.interior_face(a, f)) continue;
      const double w = prob.M(a, f) * inv_h2;
      d[static_cast<std::size_t>(g.face_lo(a, f))] += w;
      d[static_cast<std::size_t>(g.face_hi(a, f))] += w;
    }
  return d;
}

CellField gauge_weighted(CellField psi, const CellField& phi) {
  const double m = weighted_mean(psi, phi);
  const GridSpec& g = psi.grid();
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = g.active(i) ? psi[i] - m : 0.0;
  return psi;
}

}  // namespace

CellField invert_L(const EllipticProblem& prob, const CellField& f, const KrylovConfig& cfg,
                   KrylovStats* stats) {
  const GridSpec& g = f.grid();
  require_same_grid(g, prob.phi.grid(), "invert_L");
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0)) throw ConfigError("Krylov tolerances must be positive");
  check_compatible(f, prob.phi);

  const std::vector<double> b = scaled_rhs(f, prob.phi);
  const std::size_t n = b.size();
  const double vol = g.cell_volume();
  const double bnorm = std::sqrt(dot_active(g, b, b) * vol);
  const double target = std::max(cfg.rtol * bnorm, cfg.atol);
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : static_cast<int>(10 * g.num_cells());

  std::vector<double> dinv;
  if (cfg.jacobi) {
    dinv = diagonal(prob);
    for (double& d : dinv) d = d > 0.0 ? 1.0 / d : 0.0;
  }
  auto precondition = [&](const std::vector<double>& r, std::vector<double>& z) {
    if (cfg.jacobi) {
      for (std::size_t i = 0; i < n; ++i) z[i] = r[i] * dinv[i];
    } else {
      z = r;
    }
  };

  CellField x(f.grid_ptr());
  std::vector<double> r = b, z(n), p(n);
  precondition(r, z);
  p = z;
  double rz = dot_active(g, r, z);
  double rnorm = bnorm;
  int it = 0;
  CellField pf(f.grid_ptr());
  while (rnorm > target) {
    if (it >= max_iter) {
      if (stats) *stats = {it, rnorm};
      throw NoConvergence("CG did not converge in " + std::to_string(it) + " iterations", rnorm, it);
    }
    std::copy(p.begin(), p.end(), pf.values().begin());
    const CellField ap = flux_laplacian(prob.M, pf);
    const double pap = dot_active(g, p, ap.values());
    if (!(pap > 0.0)) break;  // exact breakdown: residual is already in the kernel
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    precondition(r, z);
    const double rz_new = dot_active(g, r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rnorm = std::sqrt(dot_active(g, r, r) * vol);
    ++it;
  }
  if (stats) *stats = {it, rnorm};
  return gauge_weighted(std::move(x), prob.phi);
}

double h_minus1_norm(const CellField& c, const KrylovConfig& cfg) {
  const EllipticProblem prob = unit_problem(c.grid_ptr());
  const double m = mean(c);
  if (!(std::abs(m) <= 1e-10 * std::max(max_abs_active(c), 1e-300)) && max_abs_active(c) > 0.0)
    throw IncompatibleRhs("h_minus1_norm needs a mean-zero argument");
  const CellField psi = invert_L(prob, c, cfg);
  return std::sqrt(std::max(inner_product(c, psi), 0.0));
}

double dual_norm_weighted(const CellField& c, const EllipticProblem& prob, const KrylovConfig& cfg) {
  const CellField psi = invert_L(prob, c, cfg);
  return std::sqrt(std::max(inner_product(hadamard(c, prob.phi), psi), 0.0));
}

struct EllipticSolver::Impl {
  std::vector<std::int64_t> compact;  // cell -> compact index, -1 when inactive
  std::vector<std::size_t> cells;     // compact index -> cell
  Eigen::SparseMatrix<double> A;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

EllipticSolver::EllipticSolver(EllipticProblem prob) : prob_(std::move(prob)), impl_(std::make_unique<Impl>()) {
  prob_.validate(true);
  const GridSpec& g = prob_.phi.grid();
  impl_->compact.assign(g.num_cells(), -1);
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) {
      impl_->compact[c] = static_cast<std::int64_t>(impl_->cells.size());
      impl_->cells.push_back(c);
    }
  const auto n = static_cast<Eigen::Index>(impl_->cells.size());
  const double inv_h2 = 1.0 / (g.h() * g.h());
  std::vector<Eigen::Triplet<double>> trip;
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t f = 0; f < g.num_faces(a); ++f) {
      if (!g.interior_face(a, f)) continue;
      const double w = prob_.M(a, f) * inv_h2;
      const auto lo = static_cast<Eigen::Index>(impl_->compact[static_cast<std::size_t>(g.face_lo(a, f))]);
      const auto hi = static_cast<Eigen::Index>(impl_->compact[static_cast<std::size_t>(g.face_hi(a, f))]);
      trip.emplace_back(lo, lo, w);
      trip.emplace_back(hi, hi, w);
      trip.emplace_back(lo, hi, -w);
      trip.emplace_back(hi, lo, -w);
    }
  impl_->A.resize(n, n);
  impl_->A.setFromTriplets(trip.begin(), trip.end());
  if (n <= 1) return;

  // Pin compact unknown 0 by dropping its row and column.
  const Eigen::SparseMatrix<double> reduced = impl_->A.bottomRightCorner(n - 1, n - 1);
  impl_->ldlt.compute(reduced);
  if (impl_->ldlt.info() != Eigen::Success) throw NoConvergence("sparse LDLT factorization failed", 0.0, 0);
}

const Eigen::SparseMatrix<double>& EllipticSolver::stiffness() const { return impl_->A; }
const std::vector<std::size_t>& EllipticSolver::active_cells() const { return impl_->cells; }

EllipticSolver::~EllipticSolver() = default;
EllipticSolver::EllipticSolver(EllipticSolver&&) noexcept = default;
EllipticSolver& EllipticSolver::operator=(EllipticSolver&&) noexcept = default;

CellField EllipticSolver::solve(const CellField& f, bool check) const {
  if (check) check_compatible(f, prob_.phi);
  const std::vector<double> b = scaled_rhs(f, prob_.phi);
  CellField psi(f.grid_ptr());
  const auto n = static_cast<Eigen::Index>(impl_->cells.size());
  if (n <= 1) return psi;
  Eigen::VectorXd rhs(n - 1);
  for (Eigen::Index i = 1; i < n; ++i) rhs[i - 1] = b[impl_->cells[static_cast<std::size_t>(i)]];
  const Eigen::VectorXd x = impl_->ldlt.solve(rhs);
  for (Eigen::Index i = 1; i < n; ++i) psi[impl_->cells[static_cast<std::size_t>(i)]] = x[i - 1];
  return gauge_weighted(std::move(psi), prob_.phi);
}

}  // namespace tpf
