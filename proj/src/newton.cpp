#include "tpf/newton.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "tpf/errors.hpp"
#include "tpf/operators.hpp"
#include "tpf/physics.hpp"
#include "tpf/snapshot.hpp"

namespace tpf {

void NewtonConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("Newton theta must lie in (0,1)");
  if (!(step_tol > 0.0) || !(residual_tol > 0.0)) throw ConfigError("Newton tolerances must be positive");
  if (max_iter < 1) throw ConfigError("Newton needs at least one iteration");
}

SaturationResidual::SaturationResidual(Spec spec)
    : spec_(std::move(spec)),
      prob_w_{spec_.M_w, spec_.phi},
      prob_n_{spec_.M_n, spec_.phi} {
  if (!(spec_.dt > 0.0)) throw ConfigError("time step must be positive");
  if (!spec_.local) throw ConfigError("residual needs a local term");
  prob_w_.validate();
  prob_n_.validate();
  if (spec_.backend == EllipticBackend::Direct) {
    solver_w_ = std::make_unique<EllipticSolver>(prob_w_);
    solver_n_ = std::make_unique<EllipticSolver>(prob_n_);
  }
}

CellField SaturationResidual::inverse(const EllipticProblem& prob, const EllipticSolver* solver,
                                      const CellField& f) const {
  if (solver) return solver->solve(f, false);
  KrylovStats st;
  CellField out = invert_L(prob, remove_weighted_mean(f, spec_.phi), spec_.elliptic, &st);
  elliptic_iters_ += st.iterations;
  return out;
}

CellField SaturationResidual::inverse_w(const CellField& f) const { return inverse(prob_w_, solver_w_.get(), f); }
CellField SaturationResidual::inverse_n(const CellField& f) const { return inverse(prob_n_, solver_n_.get(), f); }

CellField SaturationResidual::nonlocal(const CellField& v) const {
  CellField out = inverse_w(v);
  out += inverse_n(v);
  out *= 1.0 / spec_.dt;
  return out;
}

CellField SaturationResidual::value(const CellField& S) const {
  const GridSpec& g = grid();
  CellField delta(S.grid_ptr());
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) delta[c] = S[c] - spec_.S_old[c] - spec_.shift;
  CellField R(S.grid_ptr());
  spec_.local(S, R, nullptr);
  R += nonlocal(remove_weighted_mean(delta, spec_.phi));
  return R.mask_inactive();
}

CellField SaturationResidual::local_diag(const CellField& S) const {
  CellField v(S.grid_ptr()), d(S.grid_ptr());
  spec_.local(S, v, &d);
  return d;
}

CellField SaturationResidual::jacobian_apply(const CellField& S, const CellField& v) const {
  CellField out = hadamard(local_diag(S), v);
  out += nonlocal(v);
  return out.mask_inactive();
}

double safeguard_step(const CellField& S, const CellField& dS, double theta) {
  const GridSpec& g = S.grid();
  double alpha = 1.0;
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    if (!g.active(c)) continue;
    const double d = dS[c];
    if (d < 0.0)
      alpha = std::min(alpha, theta * S[c] / -d);
    else if (d > 0.0)
      alpha = std::min(alpha, theta * (1.0 - S[c]) / d);
  }
  return alpha;
}

CellField constrained_initial_guess(const CellField& S_old, const CellField& phi, double shift) {
  const GridSpec& g = S_old.grid();
  CellField S = S_old;
  if (shift == 0.0) return S;
  // Move toward 1 (or 0) proportionally to the remaining room, so the mean
  // shift is met exactly and every cell stays interior.
  CellField room(S_old.grid_ptr());
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) room[c] = shift > 0.0 ? 1.0 - S_old[c] : S_old[c];
  const double avg = weighted_mean(room, phi);
  if (!(std::abs(shift) < avg)) throw DomainError("mass constraint cannot be met with interior saturations");
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) S[c] += shift * room[c] / avg;
  return S;
}

namespace {

double weighted_norm(const CellField& v, const CellField& phi) { return std::sqrt(weighted_integral(hadamard(v, v), phi)); }

// Direct Newton step.  The augmented system
//
//   Phi (D z + w_w + w_n - c 1) = -Phi R
//   Phi z - dt A_a w_a - Phi d_a 1 = 0,    1'Phi w_a = 0,    1'Phi z = g
//
// (w_a = L_a^-1 z / dt, g the mass-constraint defect) gives d_a = g / 1'Phi
// directly.  Eliminating z = D^-1 (-R - w_w - w_n + c 1) leaves the symmetric
// block system
//
//   [ dt A_w + E   E         ] [ w_w ]   [ -E R - Phi d 1 + c E 1 ]
//   [ E            dt A_n + E] [ w_n ] = [ -E R - Phi d 1 + c E 1 ],   E = Phi D^-1,
//
// singular only along (1, -1), which leaves w_w + w_n unchanged; pinning one
// w_n entry removes it.  Dropping the gauge rows 1'Phi w_a = 0 lets a
// constant in w_w + w_n absorb c, so c = 0 can be taken: summing the w_w rows
// reproduces the mass constraint for any c.
class DirectNewtonSystem {
 public:
  explicit DirectNewtonSystem(const SaturationResidual& res) : res_(res) {
    const auto& cells = res.solver_w()->active_cells();
    n_ = static_cast<Eigen::Index>(cells.size());
  }

  CellField step(const CellField& D, const CellField& R, double defect) {
    const auto& spec = res_.spec();
    const auto& cells = res_.solver_w()->active_cells();
    const Eigen::Index n = n_;
    // Unknowns: w_w at 0..n-1, w_n at n..2n-1 with the entry n (w_n[0]) pinned.
    const Eigen::Index N = 2 * n - 1;
    auto col = [n](Eigen::Index i) { return i < n ? i : i - 1; };
    std::vector<double> E(static_cast<std::size_t>(n));
    double phisum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t c = cells[static_cast<std::size_t>(i)];
      if (!(D[c] > 0.0)) throw NoConvergence("Newton diagonal lost positivity", D[c], 0);
      E[static_cast<std::size_t>(i)] = spec.phi[c] / D[c];
      phisum += spec.phi[c];
    }

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(4 * n + res_.solver_w()->stiffness().nonZeros() * 2));
    auto add = [&](Eigen::Index r, Eigen::Index c, double v) {
      if (r == n || c == n) return;
      const Eigen::Index rr = col(r), cc = col(c);
      if (rr >= cc) t.emplace_back(rr, cc, v);  // lower triangle
    };
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = E[static_cast<std::size_t>(i)];
      add(i, i, e);
      add(n + i, n + i, e);
      add(n + i, i, e);
      add(i, n + i, e);
    }
    auto add_block = [&](const Eigen::SparseMatrix<double>& A, Eigen::Index off) {
      for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
          add(off + it.row(), off + it.col(), spec.dt * it.value());
    };
    add_block(res_.solver_w()->stiffness(), 0);
    add_block(res_.solver_n()->stiffness(), n);

    Eigen::SparseMatrix<double> K(N, N);
    K.setFromTriplets(t.begin(), t.end());
    K.makeCompressed();
    if (!analyzed_) {
      ldlt_.analyzePattern(K);
      analyzed_ = true;
    }
    ldlt_.factorize(K);
    if (ldlt_.info() != Eigen::Success) throw NoConvergence("Newton system factorization failed", 0.0, 0);

    const double d = defect / phisum;
    Eigen::VectorXd f0(N);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t c = cells[static_cast<std::size_t>(i)];
      const double e = E[static_cast<std::size_t>(i)];
      const double v0 = -e * R[c] - spec.phi[c] * d;
      f0[i] = v0;
      if (i > 0) f0[n + i - 1] = v0;
    }
    const Eigen::VectorXd x0 = ldlt_.solve(f0);
    if (!x0.allFinite()) throw NoConvergence("Newton system solve produced non-finite values", 0.0, 0);
    CellField dS(R.grid_ptr());
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t c = cells[static_cast<std::size_t>(i)];
      const double s = x0[i] + (i > 0 ? x0[n + i - 1] : 0.0);
      dS[c] = (-R[c] - s) / D[c];
    }
    return dS;
  }

 private:
  const SaturationResidual& res_;
  Eigen::Index n_ = 0;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
};

// Projected preconditioned CG in the phi-weighted inner product on the
// phi-mean-zero subspace, preconditioned by the local diagonal.
CellField krylov_step(const SaturationResidual& res, const CellField& D, const CellField& R, double defect,
                      double forcing, const KrylovConfig& kc, int& iterations) {
  const auto& phi = res.spec().phi;
  const GridSpec& g = res.grid();
  // Constant part fixing the mass defect: mean_phi(z0) = defect / sum(phi).
  double phisum = 0.0;
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) phisum += phi[c];
  const double z0 = defect / phisum;

  CellField b = R;
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) b[c] = -(R[c] + D[c] * z0);
  b = remove_weighted_mean(b, phi);

  auto dot = [&](const CellField& a, const CellField& c2) { return weighted_integral(hadamard(a, c2), phi); };
  auto precond = [&](const CellField& r) {
    CellField z(r.grid_ptr());
    for (std::size_t c = 0; c < g.num_cells(); ++c)
      if (g.active(c)) z[c] = r[c] / D[c];
    return remove_weighted_mean(z, phi);
  };
  auto apply = [&](const CellField& v) {
    CellField out = hadamard(D, v);
    out += res.nonlocal(v);
    return remove_weighted_mean(out, phi);
  };

  CellField x(R.grid_ptr());
  CellField r = b;
  CellField z = precond(r);
  CellField p = z;
  double rz = dot(r, z);
  const double bnorm = std::sqrt(dot(b, b));
  const double target = std::max(forcing * bnorm, kc.atol);
  const int max_iter = kc.max_iter > 0 ? kc.max_iter : static_cast<int>(10 * g.num_cells());
  int it = 0;
  double rnorm = bnorm;
  while (rnorm > target && it < max_iter) {
    const CellField ap = apply(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    x.axpy(alpha, p);
    r.axpy(-alpha, ap);
    z = precond(r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    CellField pn = z;
    pn.axpy(beta, p);
    p = std::move(pn);
    rnorm = std::sqrt(dot(r, r));
    ++it;
  }
  iterations += it;
  if (rnorm > target) throw NoConvergence("inner Newton CG did not converge", rnorm, it);
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) x[c] += z0;
  return x;
}

}  // namespace

NewtonResult solve(const SaturationResidual& residual, const CellField& S_init, const NewtonConfig& cfg) {
  cfg.validate();
  const auto& spec = residual.spec();
  const GridSpec& g = residual.grid();
  const CellField& phi = spec.phi;
  require_interior(S_init, "Newton initial guess");
  const bool direct = cfg.linear == NewtonLinearSolver::Direct;
  if (direct && spec.backend != EllipticBackend::Direct)
    throw ConfigError("direct Newton steps need the direct elliptic backend");

  double phisum = 0.0;
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) phisum += phi[c];
  auto mass_defect = [&](const CellField& S) {
    // shift * sum(phi) - sum(phi (S - S_old))
    double s = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c)
      if (g.active(c)) s += phi[c] * (S[c] - spec.S_old[c]);
    return spec.shift * phisum - s;
  };
  const double abs_tol = cfg.residual_tol * spec.scale;

  NewtonResult out;
  out.S = S_init;
  CellField R = residual.value(out.S);
  CellField r = remove_weighted_mean(R, phi);
  double rnorm = weighted_norm(r, phi);
  double rinf = max_abs_active(r);

  std::unique_ptr<DirectNewtonSystem> sys;
  if (direct) sys = std::make_unique<DirectNewtonSystem>(residual);

  auto converged = [&](double step) {
    const double defect = std::abs(mass_defect(out.S)) / phisum;
    return step < cfg.step_tol && rinf <= abs_tol && defect <= 1e-13;
  };

  // A caller handing in an exact solution gets it back after the check.
  if (rinf <= abs_tol && std::abs(mass_defect(out.S)) / phisum <= 1e-13) {
    out.c = weighted_mean(R, phi);
    out.stats.residual = rinf;
    return out;
  }

  for (int k = 0; k < cfg.max_iter; ++k) {
    const CellField D = residual.local_diag(out.S);
    for (std::size_t c = 0; c < g.num_cells(); ++c)
      if (g.active(c) && !(D[c] > 0.0))
        throw DomainError("Newton Jacobian lost positivity at cell " + std::to_string(c));
    const double defect = mass_defect(out.S);
    CellField dS = direct ? sys->step(D, R, defect)
                          : krylov_step(residual, D, R, defect, std::max(std::min(1e-2, rinf / spec.scale), cfg.inner.rtol),
                                        cfg.inner, out.stats.krylov_iterations);
    // A correction below the rounding level of S cannot improve the iterate;
    // the residual has then reached its floor, which scales with the norm of
    // the nonlocal operator and may sit above abs_tol.
    if (max_abs_active(dS) <= 64.0 * std::numeric_limits<double>::epsilon() &&
        std::abs(mass_defect(out.S)) / phisum <= 1e-13) {
      out.stats.iterations = k + 1;
      out.stats.last_step = max_abs_active(dS);
      out.c = weighted_mean(R, phi);
      return out;
    }
    double alpha = safeguard_step(out.S, dS, cfg.theta);

    // Residual-decrease backtracking on the phi-weighted norm.  Once the
    // residual sits at the rounding floor any full step is accepted.
    CellField trial, Rt, rt;
    double tnorm = 0.0;
    for (;;) {
      trial = out.S;
      trial.axpy(alpha, dS);
      Rt = residual.value(trial);
      rt = remove_weighted_mean(Rt, phi);
      tnorm = weighted_norm(rt, phi);
      if (tnorm <= (1.0 - 1e-4 * alpha) * rnorm || max_abs_active(rt) <= abs_tol) break;
      if (alpha < 1e-10) throw DampingStall("Newton backtracking stalled; residual " + format_double(rinf));
      alpha *= 0.5;
    }
    if (alpha < 1.0) ++out.stats.damped_steps;

    const double step = alpha * max_abs_active(dS);
    out.S = std::move(trial);
    R = std::move(Rt);
    r = std::move(rt);
    rnorm = tnorm;
    rinf = max_abs_active(r);
    out.stats.iterations = k + 1;
    out.stats.last_step = step;
    out.stats.residual = rinf;
    if (converged(step)) {
      out.c = weighted_mean(R, phi);
      return out;
    }
  }
  out.c = weighted_mean(R, phi);
  throw NoConvergence("Newton reached " + std::to_string(cfg.max_iter) + " iterations", rinf, cfg.max_iter);
}

}  // namespace tpf
