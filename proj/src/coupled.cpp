#include "tpf/coupled.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <vector>

#include "tpf/errors.hpp"
#include "tpf/operators.hpp"
#include "tpf/physics.hpp"

namespace tpf {

void MixedBoundary::validate() const {
  if (!std::isfinite(inflow_w) || inflow_w < 0.0) throw ParamError("inflow velocity must be finite and non-negative");
  if (!std::isfinite(p_out)) throw ParamError("outflow pressure must be finite");
}

double net_boundary_outflow(const FaceField& boundary_flux) {
  const GridSpec& g = boundary_flux.grid();
  const double area = g.cell_volume() / g.h();
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t f = 0; f < g.num_faces(a); ++f) {
      if (g.interior_face(a, f)) continue;
      const bool lower = g.face_hi(a, f) >= 0;
      const bool upper = g.face_lo(a, f) >= 0;
      if (lower) s -= boundary_flux(a, f);
      else if (upper) s += boundary_flux(a, f);
    }
  return s * area;
}

namespace {

// Unknowns: S at 0..n-1 and p - p_out at n..2n-1, in active-cell order.
// Rows are the two phase balances scaled by dt / phi, so residuals read as
// saturation increments.
class CoupledSystem {
 public:
  CoupledSystem(const Model& model, const MixedBoundary& bc, double dt, const CellField& Sk)
      : g_(Sk.grid()), model_(model), bc_(bc), dt_(dt), Sk_(Sk) {
    for (std::size_t c = 0; c < g_.num_cells(); ++c)
      if (g_.active(c)) cells_.push_back(c);
    n_ = static_cast<Eigen::Index>(cells_.size());
    compact_.assign(g_.num_cells(), -1);
    for (std::size_t k = 0; k < cells_.size(); ++k) compact_[cells_[k]] = static_cast<std::int64_t>(k);

    CellField Snk(Sk.grid_ptr(), 1.0);
    Snk -= Sk;
    M_w_ = mobility_face(Sk, model.medium, model.eta_w, model.m);
    M_n_ = mobility_face(Snk, model.medium, model.eta_n, model.m);
    for (std::size_t f = 0; f < g_.num_faces(0); ++f) {
      if (g_.interior_face(0, f)) continue;
      const std::int64_t lo = g_.face_lo(0, f), hi = g_.face_hi(0, f);
      if (hi >= 0 && g_.cell_coords(static_cast<std::size_t>(hi))[0] == 0)
        inflow_.push_back({f, static_cast<std::size_t>(hi)});
      if (lo >= 0 && g_.cell_coords(static_cast<std::size_t>(lo))[0] == g_.n(0) - 1) {
        const std::size_t c = static_cast<std::size_t>(lo);
        const double K = model.medium.K[c];
        outflow_.push_back({f, c, signed_pow(Sk[c], model.m) / model.eta_w * K,
                            signed_pow(1.0 - Sk[c], model.m) / model.eta_n * K});
      }
    }
  }

  Eigen::Index size() const { return 2 * n_; }
  const std::vector<std::size_t>& cells() const { return cells_; }
  const FaceField& M_w() const { return M_w_; }
  const FaceField& M_n() const { return M_n_; }

  void potentials(const CellField& S, CellField& mu_w, CellField& mu_n) const {
    for (std::size_t c : cells_) {
      const double s = S[c];
      if (!(s > 0.0 && s < 1.0)) throw DomainError("saturation left (0,1) inside coupled Newton");
      mu_w[c] = model_.sigma_w[c] * std::log(s) + model_.sigma_wn[c] * (1.0 - Sk_[c]);
      mu_n[c] = model_.sigma_n[c] * std::log(1.0 - s) + model_.sigma_wn[c] * Sk_[c];
    }
  }

  /// Residual, and optionally the Jacobian triplets.
  Eigen::VectorXd residual(const CellField& S, const CellField& pt, std::vector<Eigen::Triplet<double>>* jac) const {
    CellField mu_w(S.grid_ptr()), mu_n(S.grid_ptr());
    potentials(S, mu_w, mu_n);
    const double h = g_.h();
    const Eigen::Index n = n_;
    Eigen::VectorXd r(2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const std::size_t c = cells_[static_cast<std::size_t>(k)];
      r[k] = S[c] - Sk_[c];
      r[n + k] = -(S[c] - Sk_[c]);
      if (jac) {
        jac->emplace_back(k, k, 1.0);
        jac->emplace_back(n + k, k, -1.0);
      }
    }
    auto scale = [&](std::size_t c) { return dt_ / (model_.medium.phi[c] * h); };
    auto dmu = [&](int phase, std::size_t c) {
      return phase == 0 ? model_.sigma_w[c] / S[c] : -model_.sigma_n[c] / (1.0 - S[c]);
    };

    for (int a = 0; a < g_.dim(); ++a)
      for (std::size_t f = 0; f < g_.num_faces(a); ++f) {
        if (!g_.interior_face(a, f)) continue;
        const std::size_t lo = static_cast<std::size_t>(g_.face_lo(a, f));
        const std::size_t hi = static_cast<std::size_t>(g_.face_hi(a, f));
        const Eigen::Index klo = compact_[lo], khi = compact_[hi];
        for (int phase = 0; phase < 2; ++phase) {
          const double M = phase == 0 ? M_w_(a, f) : M_n_(a, f);
          const CellField& mu = phase == 0 ? mu_w : mu_n;
          const double u = -M * ((pt[hi] + mu[hi]) - (pt[lo] + mu[lo])) / h;
          const Eigen::Index off = phase * n;
          r[off + klo] += scale(lo) * u;
          r[off + khi] -= scale(hi) * u;
          if (!jac) continue;
          // du/dPhi_hi = -M/h, du/dPhi_lo = M/h
          const double g = M / h;
          const double slo = scale(lo), shi = scale(hi);
          jac->emplace_back(off + klo, khi, -slo * g * dmu(phase, hi));
          jac->emplace_back(off + klo, klo, slo * g * dmu(phase, lo));
          jac->emplace_back(off + klo, n + khi, -slo * g);
          jac->emplace_back(off + klo, n + klo, slo * g);
          jac->emplace_back(off + khi, khi, shi * g * dmu(phase, hi));
          jac->emplace_back(off + khi, klo, -shi * g * dmu(phase, lo));
          jac->emplace_back(off + khi, n + khi, shi * g);
          jac->emplace_back(off + khi, n + klo, -shi * g);
        }
      }

    for (const auto& in : inflow_) r[compact_[in.cell]] -= scale(in.cell) * bc_.inflow_w;
    for (const auto& out : outflow_) {
      const Eigen::Index k = compact_[out.cell];
      const double s = scale(out.cell);
      // u = 2 M (p - p_out) / h; the ghost chemical potential equals the cell's.
      r[k] += s * 2.0 * out.M_w * pt[out.cell] / h;
      r[n + k] += s * 2.0 * out.M_n * pt[out.cell] / h;
      if (jac) {
        jac->emplace_back(k, n + k, s * 2.0 * out.M_w / h);
        jac->emplace_back(n + k, n + k, s * 2.0 * out.M_n / h);
      }
    }
    return r;
  }

  /// Boundary-face fluxes of both phases for the converged state.
  void boundary_fluxes(const CellField& pt, FaceField& bw, FaceField& bn) const {
    const double h = g_.h();
    for (const auto& in : inflow_) bw(0, in.face) = bc_.inflow_w;
    for (const auto& out : outflow_) {
      bw(0, out.face) = 2.0 * out.M_w * pt[out.cell] / h;
      bn(0, out.face) = 2.0 * out.M_n * pt[out.cell] / h;
    }
  }

 private:
  struct Inflow {
    std::size_t face, cell;
  };
  struct Outflow {
    std::size_t face, cell;
    double M_w, M_n;
  };

  const GridSpec& g_;
  const Model& model_;
  const MixedBoundary& bc_;
  double dt_;
  const CellField& Sk_;
  std::vector<std::size_t> cells_;
  std::vector<std::int64_t> compact_;
  Eigen::Index n_ = 0;
  FaceField M_w_, M_n_;
  std::vector<Inflow> inflow_;
  std::vector<Outflow> outflow_;
};

// BiCGSTAB with an incomplete LU; sparse LU when it stalls.
Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& J, const Eigen::VectorXd& b, const CoupledConfig& cfg) {
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> it;
  it.preconditioner().setDroptol(1e-4);
  it.preconditioner().setFillfactor(10);
  it.setTolerance(cfg.linear_rtol);
  it.compute(J);
  if (it.info() == Eigen::Success) {
    Eigen::VectorXd x = it.solve(b);
    if (it.info() == Eigen::Success) return x;
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(J);
  if (lu.info() != Eigen::Success) throw NoConvergence("coupled Jacobian factorization failed", b.norm(), 0);
  return lu.solve(b);
}

}  // namespace

StepResult step_coupled(const SimState& state, const Model& model, const MixedBoundary& bc, double dt,
                        const CoupledConfig& cfg) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  bc.validate();
  require_interior(state.S_w, "step_coupled");
  const GridPtr& grid = state.S_w.grid_ptr();
  const CoupledSystem sys(model, bc, dt, state.S_w);
  const auto& cells = sys.cells();
  const Eigen::Index n = static_cast<Eigen::Index>(cells.size());

  CellField S = state.S_w;
  CellField pt(grid);
  const bool have_p = static_cast<bool>(state.p.grid_ptr());
  for (std::size_t c : cells) pt[c] = have_p ? state.p[c] - bc.p_out : 0.0;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd r = sys.residual(S, pt, nullptr);
  double rinf = r.lpNorm<Eigen::Infinity>();
  int it = 0;
  int damped = 0;
  while (rinf > cfg.residual_tol) {
    if (it >= cfg.max_iter) throw NoConvergence("coupled Newton did not converge", rinf, it);
    ++it;
    trip.clear();
    sys.residual(S, pt, &trip);
    Eigen::SparseMatrix<double> J(sys.size(), sys.size());
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    Eigen::VectorXd dx = linear_solve(J, -r, cfg);

    CellField dS(grid), dp(grid);
    for (Eigen::Index k = 0; k < n; ++k) {
      dS[cells[static_cast<std::size_t>(k)]] = dx[k];
      dp[cells[static_cast<std::size_t>(k)]] = dx[n + k];
    }
    double alpha = safeguard_step(S, dS, cfg.theta);
    const double rnorm = r.norm();
    bool counted = false;
    for (;;) {
      if (alpha < 1e-10) throw DampingStall("coupled Newton backtracking stalled");
      CellField St = S, pn = pt;
      St.axpy(alpha, dS);
      pn.axpy(alpha, dp);
      Eigen::VectorXd rt;
      bool ok = true;
      try {
        rt = sys.residual(St, pn, nullptr);
      } catch (const DomainError&) {
        ok = false;
      }
      if (ok && (rt.norm() <= (1.0 - 1e-4 * alpha) * rnorm || rt.lpNorm<Eigen::Infinity>() <= cfg.residual_tol)) {
        S = std::move(St);
        pt = std::move(pn);
        r = std::move(rt);
        break;
      }
      alpha *= 0.5;
      if (!counted) {
        ++damped;
        counted = true;
      }
    }
    rinf = r.lpNorm<Eigen::Infinity>();
  }

  StepResult out;
  out.newton.iterations = it;
  out.newton.damped_steps = damped;
  out.newton.residual = rinf;

  CellField mu_w(grid), mu_n(grid);
  sys.potentials(S, mu_w, mu_n);
  CellField p(grid);
  for (std::size_t c : cells) p[c] = pt[c] + bc.p_out;
  FaceField bw(grid), bn(grid);
  sys.boundary_fluxes(pt, bw, bn);

  out.aux.mu_w = std::move(mu_w);
  out.aux.mu_n = std::move(mu_n);
  out.aux.p = p;
  out.aux.M_w = sys.M_w();
  out.aux.M_n = sys.M_n();
  out.aux.boundary_flux_w = std::move(bw);
  out.aux.boundary_flux_n = std::move(bn);
  out.aux.dt = dt;

  out.state.S_w = std::move(S);
  out.state.S_w_prev = state.S_w;
  out.state.p = std::move(p);
  out.state.t = state.t + dt;
  out.state.k = state.k + 1;
  require_interior(out.state.S_w, "coupled step result");
  out.record = audit_step(state.S_w, out.state.S_w, model, out.aux, out.state.k, out.state.t);
  out.record.newton_iters = it;
  return out;
}

namespace {

StepResult coupled_attempt(const SimState& state, const Model& model, const MixedBoundary& bc, double dt,
                           const CoupledConfig& cfg, int max_retries, int level) {
  try {
    return step_coupled(state, model, bc, dt, cfg);
  } catch (const NoConvergence&) {
    if (level >= max_retries) throw;
  } catch (const DampingStall&) {
    if (level >= max_retries) throw;
  } catch (const DomainError&) {
    if (level >= max_retries) throw;
  }
  StepResult a = coupled_attempt(state, model, bc, 0.5 * dt, cfg, max_retries, level + 1);
  StepResult b = coupled_attempt(a.state, model, bc, 0.5 * dt, cfg, max_retries, level + 1);
  b.state.k = state.k + 1;
  b.state.S_w_prev = state.S_w;
  b.record.step = b.state.k;
  b.record.diss_slack += a.record.diss_slack;
  b.record.mass_residual = std::max(a.record.mass_residual, b.record.mass_residual);
  b.record.newton_iters += a.record.newton_iters;
  b.newton.iterations += a.newton.iterations;
  b.substeps += a.substeps;
  // Boundary fluxes are reported as the average over the two halves, so that
  // dt times the reported flux is the volume that crossed the boundary.
  b.aux.boundary_flux_w += a.aux.boundary_flux_w;
  b.aux.boundary_flux_w *= 0.5;
  b.aux.boundary_flux_n += a.aux.boundary_flux_n;
  b.aux.boundary_flux_n *= 0.5;
  b.aux.dt = dt;
  return b;
}

}  // namespace

StepResult advance_coupled(const SimState& state, const Model& model, const MixedBoundary& bc, double dt,
                           const CoupledConfig& cfg, int max_retries) {
  return coupled_attempt(state, model, bc, dt, cfg, max_retries, 0);
}

}  // namespace tpf
