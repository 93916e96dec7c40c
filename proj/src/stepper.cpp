#include "tpf/stepper.hpp"

#include <algorithm>
#include <cmath>

#include "tpf/errors.hpp"
#include "tpf/operators.hpp"

namespace tpf {

CellField SimState::S_n() const {
  CellField out(S_w.grid_ptr(), 1.0);
  out -= S_w;
  return out.mask_inactive();
}

SimState initial_state(CellField S_w, double t) {
  require_interior(S_w, "initial state");
  SimState s;
  s.p = CellField(S_w.grid_ptr());
  s.S_w = std::move(S_w);
  s.t = t;
  return s;
}

void check_source_compatibility(const CellField& q_w, const CellField& q_n, double tol) {
  const GridSpec& g = q_w.grid();
  double sum = 0.0, scale = 0.0;
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    if (!g.active(c)) continue;
    sum += q_w[c] + q_n[c];
    scale += std::abs(q_w[c]) + std::abs(q_n[c]);
  }
  if (std::abs(sum) > tol * std::max(scale, 1e-300) && scale > 0.0)
    throw CompatibilityError("sources violate (q_w + q_n, 1) = 0: sum " + std::to_string(sum * g.cell_volume()));
}

namespace {

// Pointwise chemical potentials at the new level (and d(mu_w - mu_n)/dS).
using Potentials = std::function<void(const CellField& S, CellField& mu_w, CellField& mu_n, CellField* diag)>;

struct Sources {
  CellField q_w, q_n;  // empty when there are none
  bool present() const { return static_cast<bool>(q_w.grid_ptr()); }
};

Sources evaluate_sources(const SourceSpec& spec, const GridPtr& grid, double t, double tol) {
  Sources s;
  if (spec.empty()) return s;
  s.q_w = CellField(grid);
  s.q_n = CellField(grid);
  spec.eval(t, s.q_w, s.q_n);
  s.q_w.mask_inactive();
  s.q_n.mask_inactive();
  check_source_compatibility(s.q_w, s.q_n, tol);
  return s;
}

double residual_scale(const Model& model) {
  double s = 0.0;
  const GridSpec& g = model.grid();
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) s = std::max(s, model.sigma_w[c] + model.sigma_n[c] + model.sigma_wn[c]);
  return s;
}

StepResult decoupled_step(const SimState& state, const Model& model, double dt, FaceField M_w, FaceField M_n,
                          const Sources& src, const Potentials& potentials, const CellField& S_init,
                          const StepperOptions& opt) {
  const GridPtr& grid = state.S_w.grid_ptr();
  const CellField& phi = model.medium.phi;

  double shift = 0.0;
  CellField qhat_w, qhat_n;
  if (src.present()) {
    shift = dt * integral(src.q_w) / integral(phi);
    CellField a(grid), b(grid);
    for (std::size_t c = 0; c < grid->num_cells(); ++c)
      if (grid->active(c)) {
        a[c] = src.q_w[c] / phi[c];
        b[c] = src.q_n[c] / phi[c];
      }
    qhat_w = remove_weighted_mean(a, phi);
    qhat_n = remove_weighted_mean(b, phi);
  }

  SaturationResidual::Spec spec;
  spec.phi = phi;
  spec.S_old = state.S_w;
  spec.shift = shift;
  spec.dt = dt;
  spec.M_w = M_w;
  spec.M_n = M_n;
  spec.scale = residual_scale(model);
  spec.backend = opt.elliptic;
  spec.elliptic = opt.krylov;
  // The source lift needs the elliptic solvers, so `local` reads it through
  // a shared slot filled once the residual exists.
  auto lift = std::make_shared<CellField>(grid);
  spec.local = [potentials, lift](const CellField& S, CellField& value, CellField* diag) {
    CellField mw(S.grid_ptr()), mn(S.grid_ptr());
    potentials(S, mw, mn, diag);
    value = mw - mn;
    value -= *lift;
  };
  SaturationResidual residual(std::move(spec));
  if (src.present()) {
    *lift = residual.inverse_w(qhat_w);
    *lift -= residual.inverse_n(qhat_n);
  }

  NewtonConfig ncfg = opt.newton;
  if (opt.elliptic == EllipticBackend::Krylov) ncfg.linear = NewtonLinearSolver::Krylov;
  NewtonResult nr = solve(residual, S_init, ncfg);

  StepResult out;
  out.multiplier = nr.c;
  out.newton = nr.stats;

  CellField mu_w(grid), mu_n(grid);
  potentials(nr.S, mu_w, mu_n, nullptr);

  // Pressure from the wetting equation, gauge: plain mean zero.
  CellField delta(grid);
  for (std::size_t c = 0; c < grid->num_cells(); ++c)
    if (grid->active(c)) delta[c] = nr.S[c] - state.S_w[c] - shift;
  CellField p = residual.inverse_w(remove_weighted_mean(delta, phi));
  p *= -1.0 / dt;
  p -= mu_w;
  if (src.present()) p += residual.inverse_w(qhat_w);
  const double pm = mean(p);
  for (std::size_t c = 0; c < grid->num_cells(); ++c) p[c] = grid->active(c) ? p[c] - pm : 0.0;

  out.aux.mu_w = mu_w;
  out.aux.mu_n = mu_n;
  out.aux.p = p;
  out.aux.M_w = std::move(M_w);
  out.aux.M_n = std::move(M_n);
  if (src.present()) {
    out.aux.q_w = src.q_w;
    out.aux.q_n = src.q_n;
  }
  out.aux.dt = dt;

  out.state.S_w = std::move(nr.S);
  out.state.S_w_prev = state.S_w;
  out.state.p = std::move(p);
  out.state.t = state.t + dt;
  out.state.k = state.k + 1;
  require_interior(out.state.S_w, "step result");

  out.record = audit_step(state.S_w, out.state.S_w, model, out.aux, out.state.k, out.state.t);
  out.record.newton_iters = nr.stats.iterations;
  out.record.krylov_iters = nr.stats.krylov_iterations + residual.elliptic_iterations();
  return out;
}

}  // namespace

StepResult step_first(const SimState& state, const Model& model, const SourceSpec& sources, double dt,
                      const StepperOptions& opt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  require_interior(state.S_w, "step_first");
  const GridPtr& grid = state.S_w.grid_ptr();
  const CellField& Sk = state.S_w;
  CellField Snk(grid, 1.0);
  Snk -= Sk;

  FaceField M_w = mobility_face(Sk, model.medium, model.eta_w, model.m);
  FaceField M_n = mobility_face(Snk, model.medium, model.eta_n, model.m);
  const Sources src = evaluate_sources(sources, grid, state.t + dt, opt.source_compat_tol);

  const Model* mp = &model;
  Potentials pot = [mp, Sk](const CellField& S, CellField& mu_w, CellField& mu_n, CellField* diag) {
    const GridSpec& g = S.grid();
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      if (!g.active(c)) continue;
      const double s = S[c];
      if (!(s > 0.0 && s < 1.0)) throw DomainError("saturation left (0,1) inside Newton");
      const double sw = mp->sigma_w[c], sn = mp->sigma_n[c], swn = mp->sigma_wn[c];
      mu_w[c] = sw * std::log(s) + swn * (1.0 - Sk[c]);
      mu_n[c] = sn * std::log(1.0 - s) + swn * Sk[c];
      if (diag) (*diag)[c] = sw / s + sn / (1.0 - s);
    }
  };

  double shift = 0.0;
  if (src.present()) shift = dt * integral(src.q_w) / integral(model.medium.phi);
  const CellField S_init = constrained_initial_guess(Sk, model.medium.phi, shift);
  return decoupled_step(state, model, dt, std::move(M_w), std::move(M_n), src, pot, S_init, opt);
}

StepResult step_second(const SimState& state, const Model& model, const SourceSpec& sources, double dt,
                       const StepperOptions& opt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (!state.has_prev()) throw ConfigError("second-order step needs S_w at the previous level");
  require_interior(state.S_w, "step_second");
  if (opt.convexity == ConvexityCheck::Strict) model.require_second_order_admissible();
  const GridPtr& grid = state.S_w.grid_ptr();
  const CellField& Sk = state.S_w;

  // Extrapolated mobilities with the regularization that keeps them positive.
  CellField Sw_ext(grid), Sn_ext(grid);
  for (std::size_t c = 0; c < grid->num_cells(); ++c)
    if (grid->active(c)) {
      Sw_ext[c] = 1.5 * Sk[c] - 0.5 * state.S_w_prev[c];
      Sn_ext[c] = 1.0 - Sw_ext[c];
    }
  FaceField M_w = mobility_face(Sw_ext, model.medium, model.eta_w, model.m, dt, model.mobility_reg_coeff);
  FaceField M_n = mobility_face(Sn_ext, model.medium, model.eta_n, model.m, dt, model.mobility_reg_coeff);
  const Sources src = evaluate_sources(sources, grid, state.t + 0.5 * dt, opt.source_compat_tol);

  const Model* mp = &model;
  Potentials pot = [mp, Sk, dt](const CellField& S, CellField& mu_w, CellField& mu_n, CellField* diag) {
    const GridSpec& g = S.grid();
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      if (!g.active(c)) continue;
      const double s = S[c], a = Sk[c];
      if (!(s > 0.0 && s < 1.0)) throw DomainError("saturation left (0,1) inside Newton");
      const double sw = mp->sigma_w[c], sn = mp->sigma_n[c], swn = mp->sigma_wn[c];
      const double half = 0.5 * (s + a);
      mu_w[c] = sw * (H1(a, s) - 1.0) + swn * (1.0 - half) + dt * (std::log(s) - std::log(a));
      mu_n[c] = sn * (H1(1.0 - a, 1.0 - s) - 1.0) + swn * half + dt * (std::log(1.0 - s) - std::log(1.0 - a));
      if (diag)
        (*diag)[c] = sw * H2(a, s) + sn * H2(1.0 - a, 1.0 - s) - swn + dt * (1.0 / s + 1.0 / (1.0 - s));
    }
  };

  CellField S_init(grid);
  for (std::size_t c = 0; c < grid->num_cells(); ++c)
    if (grid->active(c)) S_init[c] = std::clamp(Sw_ext[c], 1e-10, 1.0 - 1e-10);
  return decoupled_step(state, model, dt, std::move(M_w), std::move(M_n), src, pot, S_init, opt);
}

StepResult bootstrap(const SimState& state0, const Model& model, const SourceSpec& sources, double dt,
                     const StepperOptions& opt) {
  if (opt.bootstrap == Bootstrap::FirstOrder) return step_first(state0, model, sources, dt, opt);
  SimState s = state0;
  s.S_w_prev = state0.S_w;
  return step_second(s, model, sources, dt, opt);
}

namespace {

StepResult single(const SimState& state, const Model& model, const SourceSpec& sources, double dt, Scheme scheme,
                  const StepperOptions& opt) {
  if (scheme == Scheme::First) return step_first(state, model, sources, dt, opt);
  if (!state.has_prev()) return bootstrap(state, model, sources, dt, opt);
  return step_second(state, model, sources, dt, opt);
}

StepResult attempt(const SimState& state, const Model& model, const SourceSpec& sources, double dt, Scheme scheme,
                   const StepperOptions& opt, int level) {
  try {
    return single(state, model, sources, dt, scheme, opt);
  } catch (const NoConvergence&) {
    if (level >= opt.max_retries) throw;
  } catch (const DampingStall&) {
    if (level >= opt.max_retries) throw;
  } catch (const DomainError&) {
    if (level >= opt.max_retries) throw;
  }
  const double h = 0.5 * dt;
  SimState s = state;
  if (scheme == Scheme::Second && state.has_prev()) {
    // History at t - dt/2 by linear interpolation.
    s.S_w_prev = state.S_w;
    s.S_w_prev *= 0.5;
    s.S_w_prev.axpy(0.5, state.S_w_prev);
  }
  StepResult a = attempt(s, model, sources, h, scheme, opt, level + 1);
  StepResult b = attempt(a.state, model, sources, h, scheme, opt, level + 1);
  b.state.k = state.k + 1;
  if (scheme == Scheme::Second) b.state.S_w_prev = state.S_w;
  b.record.step = b.state.k;
  b.record.diss_slack += a.record.diss_slack;
  b.record.mass_residual = std::max(a.record.mass_residual, b.record.mass_residual);
  b.record.newton_iters += a.record.newton_iters;
  b.record.krylov_iters += a.record.krylov_iters;
  b.newton.iterations += a.newton.iterations;
  b.substeps += a.substeps;
  return b;
}

}  // namespace

StepResult advance(const SimState& state, const Model& model, const SourceSpec& sources, double dt, Scheme scheme,
                   const StepperOptions& opt) {
  return attempt(state, model, sources, dt, scheme, opt, 0);
}

}  // namespace tpf
