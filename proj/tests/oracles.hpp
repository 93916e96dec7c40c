#pragma once

// Dense reference implementations shared by the tests.  Everything here is
// built from the grid topology alone, without the library operators.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "tpf/grid.hpp"

namespace oracle {

using tpf::CellField;
using tpf::FaceField;
using tpf::GridPtr;
using tpf::GridSpec;

inline std::vector<std::size_t> active_cells(const GridSpec& g) {
  std::vector<std::size_t> a;
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) a.push_back(c);
  return a;
}

inline Eigen::VectorXd compact(const CellField& f) {
  const auto a = active_cells(f.grid());
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = f[a[i]];
  return v;
}

inline CellField expand(const GridPtr& g, const Eigen::VectorXd& v) {
  const auto a = active_cells(*g);
  CellField f(g);
  for (std::size_t i = 0; i < a.size(); ++i) f[a[i]] = v[static_cast<Eigen::Index>(i)];
  return f;
}

/// -div(M grad) on active cells, compact numbering.  Each face between two
/// active cells couples them with weight M / h^2.
inline Eigen::MatrixXd stiffness(const GridSpec& g, const FaceField& M) {
  const auto a = active_cells(g);
  std::vector<Eigen::Index> pos(g.num_cells(), -1);
  for (std::size_t i = 0; i < a.size(); ++i) pos[a[i]] = static_cast<Eigen::Index>(i);
  const Eigen::Index n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  const double h2 = g.h() * g.h();
  for (std::size_t c : a) {
    const auto ijk = g.cell_coords(c);
    for (int ax = 0; ax < g.dim(); ++ax) {
      auto nb = ijk;
      nb[static_cast<std::size_t>(ax)] += 1;
      if (nb[static_cast<std::size_t>(ax)] >= g.n(ax)) continue;
      const std::size_t d = g.cell_index(nb[0], nb[1], nb[2]);
      if (!g.active(d)) continue;
      const double w = M(ax, g.upper_face(ax, c)) / h2;
      const Eigen::Index i = pos[c], j = pos[d];
      A(i, i) += w;
      A(j, j) += w;
      A(i, j) -= w;
      A(j, i) -= w;
    }
  }
  return A;
}

/// Unit-coefficient stiffness: the negative 5-point (7-point) Neumann
/// Laplacian, assembled from neighbour counts.
inline Eigen::MatrixXd neumann_laplacian(const GridSpec& g) {
  const auto a = active_cells(g);
  std::vector<Eigen::Index> pos(g.num_cells(), -1);
  for (std::size_t i = 0; i < a.size(); ++i) pos[a[i]] = static_cast<Eigen::Index>(i);
  const Eigen::Index n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  const double h2 = g.h() * g.h();
  for (std::size_t c : a) {
    const auto ijk = g.cell_coords(c);
    for (int ax = 0; ax < g.dim(); ++ax)
      for (int s : {-1, 1}) {
        auto nb = ijk;
        nb[static_cast<std::size_t>(ax)] += s;
        const int v = nb[static_cast<std::size_t>(ax)];
        if (v < 0 || v >= g.n(ax)) continue;
        const std::size_t d = g.cell_index(nb[0], nb[1], nb[2]);
        if (!g.active(d)) continue;
        L(pos[c], pos[c]) -= 1.0 / h2;
        L(pos[c], pos[d]) += 1.0 / h2;
      }
  }
  return L;
}

/// Moore-Penrose pseudoinverse of a symmetric matrix.
inline Eigen::MatrixXd pinv_sym(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cut = 1e-10 * ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv[i] = std::abs(ev[i]) > cut ? 1.0 / ev[i] : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

inline CellField random_field(const GridPtr& g, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  CellField f(g);
  for (std::size_t c = 0; c < g->num_cells(); ++c)
    if (g->active(c)) f[c] = u(rng);
  return f;
}

inline FaceField random_faces(const GridPtr& g, double lo, double hi, std::mt19937_64& rng, bool zero_boundary) {
  std::uniform_real_distribution<double> u(lo, hi);
  FaceField f(g);
  for (int ax = 0; ax < g->dim(); ++ax)
    for (std::size_t i = 0; i < g->num_faces(ax); ++i)
      f(ax, i) = zero_boundary && !g->interior_face(ax, i) ? 0.0 : u(rng);
  return f;
}

/// ln, x ln x secant and friends in long double, for the functionals below.
inline long double secant_xlogx(long double a, long double b) {
  if (std::fabs(a - b) < 1e-9L * std::max(a, b)) {
    const long double m = 0.5L * (a + b), d = b - a;
    return std::log(m) + 1.0L - d * d / (24.0L * m * m);
  }
  return (b * std::log(b) - a * std::log(a)) / (b - a);
}

/// Minimizes a strictly convex functional on {S : sum phi_i S_i = const}
/// inside (0,1)^n by projected gradient descent with Barzilai-Borwein steps.
/// `grad` returns the Euclidean gradient.  Stops when the projected gradient,
/// divided by phi, drops below `gtol` in the max norm.
struct MinimizeResult {
  Eigen::VectorXd S;
  int iterations = 0;
  double projected_gradient = 0.0;
};

inline MinimizeResult minimize_on_slice(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                                        Eigen::VectorXd S, const Eigen::VectorXd& phi, double gtol,
                                        int max_iter = 200000) {
  const double pp = phi.squaredNorm();
  auto project = [&](const Eigen::VectorXd& g) -> Eigen::VectorXd { return g - phi * (phi.dot(g) / pp); };
  Eigen::VectorXd g = project(grad(S));
  double alpha = 1e-3;
  MinimizeResult r;
  for (int it = 0; it < max_iter; ++it) {
    r.projected_gradient = g.cwiseQuotient(phi).cwiseAbs().maxCoeff();
    r.iterations = it;
    if (r.projected_gradient < gtol) break;
    Eigen::VectorXd d = -alpha * g;
    // Stay strictly inside the box.
    double scale = 1.0;
    for (Eigen::Index i = 0; i < S.size(); ++i) {
      if (d[i] < 0.0) scale = std::min(scale, 0.5 * S[i] / -d[i]);
      if (d[i] > 0.0) scale = std::min(scale, 0.5 * (1.0 - S[i]) / d[i]);
    }
    d *= scale;
    const Eigen::VectorXd Sn = S + d;
    const Eigen::VectorXd gn = project(grad(Sn));
    const Eigen::VectorXd y = gn - g;
    const double sy = d.dot(y);
    alpha = sy > 0.0 ? d.squaredNorm() / sy : 2.0 * alpha;
    S = Sn;
    g = gn;
  }
  r.S = S;
  return r;
}

/// One decoupled saturation step written as a convex minimization:
///
///   J(S) = sum_i phi_i G_i(S_i) - sum_i phi_i lift_i S_i
///        + (1/(2 dt)) e' Phi (A_w^+ + A_n^+) Phi e,   e = S - S_old - shift,
///
/// on sum phi_i S_i = sum phi_i (S_old_i + shift).  G_i' is the pointwise
/// potential difference of the scheme; A_a is the dense stiffness with face
/// mobility mean(S^m K / eta) of the neighbours (regularized by hypot for the
/// second-order scheme).
struct StepProblem {
  GridPtr grid;
  CellField phi, K, sigma_w, sigma_n, sigma_wn;
  CellField S_old, S_prev;  // S_prev only for the second-order scheme
  CellField q_w, q_n;       // optional
  double eta_w = 1.0, eta_n = 1.0, m = 2.0, dt = 0.1, reg = 0.0;
  bool second = false;
};

inline FaceField oracle_mobility(const StepProblem& p, const CellField& S, double eta, double reg) {
  const GridSpec& g = *p.grid;
  FaceField M(p.grid);
  for (int ax = 0; ax < g.dim(); ++ax)
    for (std::size_t f = 0; f < g.num_faces(ax); ++f) {
      if (!g.interior_face(ax, f)) continue;
      const auto lo = static_cast<std::size_t>(g.face_lo(ax, f));
      const auto hi = static_cast<std::size_t>(g.face_hi(ax, f));
      auto lk = [&](std::size_t c) {
        return std::copysign(std::pow(std::abs(S[c]), p.m), S[c]) / eta * p.K[c];
      };
      const double v = 0.5 * (lk(lo) + lk(hi));
      M(ax, f) = p.second ? std::sqrt(v * v + reg * reg) : v;
    }
  return M;
}

inline Eigen::VectorXd solve_step_by_minimization(const StepProblem& p, double gtol = 1e-13,
                                                  MinimizeResult* info = nullptr) {
  const GridSpec& g = *p.grid;
  CellField Sw(p.grid), Sn(p.grid);
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (g.active(c)) {
      Sw[c] = p.second ? 1.5 * p.S_old[c] - 0.5 * p.S_prev[c] : p.S_old[c];
      Sn[c] = 1.0 - Sw[c];
    }
  const double d3 = p.reg * p.dt * p.dt * p.dt;
  const Eigen::MatrixXd Bw = pinv_sym(stiffness(g, oracle_mobility(p, Sw, p.eta_w, d3)));
  const Eigen::MatrixXd Bn = pinv_sym(stiffness(g, oracle_mobility(p, Sn, p.eta_n, d3)));
  const Eigen::VectorXd phi = compact(p.phi), Sk = compact(p.S_old);
  const Eigen::VectorXd sw = compact(p.sigma_w), sn = compact(p.sigma_n), swn = compact(p.sigma_wn);

  double shift = 0.0;
  Eigen::VectorXd lift = Eigen::VectorXd::Zero(phi.size());
  if (p.q_w.grid_ptr()) {
    const Eigen::VectorXd qw = compact(p.q_w), qn = compact(p.q_n);
    shift = p.dt * qw.sum() / phi.sum();
    auto hat = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
      const Eigen::VectorXd r = q.cwiseQuotient(phi);
      return r.array() - phi.dot(r) / phi.sum();
    };
    lift = Bw * phi.cwiseProduct(hat(qw)) - Bn * phi.cwiseProduct(hat(qn));
  }
  const Eigen::MatrixXd B = (Bw + Bn) / p.dt;

  auto local = [&](Eigen::Index i, double s) -> double {
    const long double a = Sk[i], x = s;
    if (!p.second)
      return static_cast<double>(sw[i] * std::log(x) - sn[i] * std::log(1.0L - x) + swn[i] * (1.0L - 2.0L * a));
    const long double mw = sw[i] * (secant_xlogx(a, x) - 1.0L) + p.dt * (std::log(x) - std::log(a));
    const long double mn = sn[i] * (secant_xlogx(1.0L - a, 1.0L - x) - 1.0L) +
                           p.dt * (std::log(1.0L - x) - std::log(1.0L - a));
    return static_cast<double>(mw - mn + swn[i] * (1.0L - a - x));
  };
  auto grad = [&](const Eigen::VectorXd& S) -> Eigen::VectorXd {
    const Eigen::VectorXd e = (S - Sk).array() - shift;
    Eigen::VectorXd r = B * phi.cwiseProduct(e) - lift;
    for (Eigen::Index i = 0; i < S.size(); ++i) r[i] += local(i, S[i]);
    return phi.cwiseProduct(r);
  };
  const Eigen::VectorXd S0 = Sk.array() + shift;
  MinimizeResult r = minimize_on_slice(grad, S0, phi, gtol);
  if (info) *info = r;
  return r.S;
}

}  // namespace oracle
