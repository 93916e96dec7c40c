#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tpf/newton.hpp"
#include "tpf/operators.hpp"

using namespace tpf;

namespace {

struct Instance {
  GridPtr grid;
  CellField phi, S_old;
  FaceField M_w, M_n;
  double sw = 1.2, sn = 0.8, swn = 0.3, dt = 0.05;
};

Instance random_instance(int N, std::mt19937_64& rng) {
  Instance I;
  I.grid = make_grid(GridSpec(2, {N, N, 1}, 1.0 / N));
  I.phi = oracle::random_field(I.grid, 0.2, 0.9, rng);
  I.S_old = oracle::random_field(I.grid, 0.2, 0.8, rng);
  I.M_w = oracle::random_faces(I.grid, 0.05, 1.0, rng, false);
  I.M_n = oracle::random_faces(I.grid, 0.05, 1.0, rng, false);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  I.sw = u(rng);
  I.sn = u(rng);
  I.swn = 0.4 * u(rng);
  return I;
}

// First-order local term: sigma_w ln S - sigma_n ln(1-S) + sigma_wn (1 - 2 S_old) + extra.
SaturationResidual make_residual(const Instance& I, double shift, const CellField* extra = nullptr,
                                 EllipticBackend backend = EllipticBackend::Direct) {
  SaturationResidual::Spec s;
  s.phi = I.phi;
  s.S_old = I.S_old;
  s.shift = shift;
  s.dt = I.dt;
  s.M_w = I.M_w;
  s.M_n = I.M_n;
  s.scale = I.sw + I.sn + I.swn;
  s.backend = backend;
  const CellField Sk = I.S_old;
  const double sw = I.sw, sn = I.sn, swn = I.swn;
  const CellField add = extra ? *extra : CellField(I.grid);
  s.local = [=](const CellField& S, CellField& v, CellField* d) {
    const GridSpec& g = S.grid();
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      if (!g.active(c)) continue;
      v[c] = sw * std::log(S[c]) - sn * std::log(1.0 - S[c]) + swn * (1.0 - 2.0 * Sk[c]) + add[c];
      if (d) (*d)[c] = sw / S[c] + sn / (1.0 - S[c]);
    }
  };
  return SaturationResidual(std::move(s));
}

}  // namespace

TEST_CASE("safeguard step") {
  const GridPtr g = make_grid(GridSpec(2, {2, 2, 1}, 0.5));
  CellField S(g, 0.5), dS(g, 1e-3);
  CHECK(safeguard_step(S, dS, 0.9) == 1.0);
  dS[2] = -10.0;
  CHECK(safeguard_step(S, dS, 0.9) == doctest::Approx(0.045).epsilon(1e-15));

  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const CellField s = oracle::random_field(g, 1e-6, 1.0 - 1e-6, rng);
    const CellField d = oracle::random_field(g, -100.0, 100.0, rng);
    const double a = safeguard_step(s, d, 0.9);
    for (std::size_t c = 0; c < 4; ++c) {
      const double x = s[c] + a * d[c];
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
  }
}

TEST_CASE("constrained initial guess") {
  std::mt19937_64 rng(2);
  const GridPtr g = make_grid(GridSpec(2, {4, 4, 1}, 0.25));
  const CellField phi = oracle::random_field(g, 0.2, 0.9, rng);
  const CellField S0 = oracle::random_field(g, 0.05, 0.95, rng);
  for (double shift : {0.0, 0.2, -0.3}) {
    const CellField S = constrained_initial_guess(S0, phi, shift);
    CHECK(weighted_mean(S - S0, phi) == doctest::Approx(shift).epsilon(1e-13));
    CHECK(min_active(S) > 0.0);
    CHECK(max_active(S) < 1.0);
  }
  CHECK_THROWS_AS(constrained_initial_guess(S0, phi, 1.0), DomainError);
}

TEST_CASE("Jacobian matches finite differences and is SPD on the constraint space") {
  std::mt19937_64 rng(3);
  for (int N : {2, 3, 5, 8, 16}) {
    const Instance I = random_instance(N, rng);
    const SaturationResidual R = make_residual(I, 0.0);
    const CellField S = oracle::random_field(I.grid, 0.2, 0.8, rng);
    for (int t = 0; t < 3; ++t) {
      const CellField v = remove_weighted_mean(oracle::random_field(I.grid, -1.0, 1.0, rng), I.phi);
      const CellField w = remove_weighted_mean(oracle::random_field(I.grid, -1.0, 1.0, rng), I.phi);
      const double e = 1e-6;
      CellField fd = R.value(S + e * v) - R.value(S - e * v);
      fd *= 1.0 / (2 * e);
      const CellField Jv = R.jacobian_apply(S, v);
      // compare after removing the multiplier direction
      const CellField d = remove_weighted_mean(fd - Jv, I.phi);
      CHECK(max_abs_active(d) <= 1e-5 * max_abs_active(Jv));

      const CellField Jw = R.jacobian_apply(S, w);
      const double vJw = inner_product(hadamard(I.phi, v), Jw);
      const double wJv = inner_product(hadamard(I.phi, w), Jv);
      CHECK(std::abs(vJw - wJv) <= 1e-10 * std::max(std::abs(vJw), 1.0));
      CHECK(inner_product(hadamard(I.phi, v), Jv) > 0.0);
    }
  }
}

TEST_CASE("an exact solution is returned without iterating") {
  std::mt19937_64 rng(4);
  const Instance I = random_instance(4, rng);
  const CellField S = oracle::random_field(I.grid, 0.2, 0.8, rng);
  const double shift = weighted_mean(S - I.S_old, I.phi);
  const CellField R0 = make_residual(I, shift).value(S);
  CellField extra = R0;
  extra *= -1.0;
  for (std::size_t c = 0; c < extra.size(); ++c) extra[c] += 0.7;
  const SaturationResidual R = make_residual(I, shift, &extra);
  const NewtonResult r = solve(R, S);
  CHECK(r.stats.iterations == 0);
  CHECK(r.c == doctest::Approx(0.7).epsilon(1e-10));
  for (std::size_t c = 0; c < S.size(); ++c) CHECK(r.S[c] == S[c]);
}

TEST_CASE("single active cell") {
  const GridPtr g = make_grid(GridSpec(2, {2, 2, 1}, 0.5, {0, 0, 0}, {0, 1, 0, 0}));
  Instance I;
  I.grid = g;
  I.phi = CellField(g, 0.4);
  I.S_old = CellField(g, 0.3);
  I.M_w = FaceField(g, 1.0);
  I.M_n = FaceField(g, 1.0);
  const SaturationResidual R = make_residual(I, 0.0);
  const NewtonResult r = solve(R, CellField(g, 0.3));
  CHECK(r.S[1] == 0.3);
  const double local = I.sw * std::log(0.3) - I.sn * std::log(0.7) + I.swn * 0.4;
  CHECK(r.c == doctest::Approx(local).epsilon(1e-14));
}

TEST_CASE("Newton solution minimizes the convex functional") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const Instance I = random_instance(4, rng);
    const double shift = t % 2 ? 0.03 : 0.0;
    const SaturationResidual R = make_residual(I, shift);
    const NewtonResult nr = solve(R, constrained_initial_guess(I.S_old, I.phi, shift));

    const Eigen::MatrixXd B =
        (oracle::pinv_sym(oracle::stiffness(*I.grid, I.M_w)) + oracle::pinv_sym(oracle::stiffness(*I.grid, I.M_n))) /
        I.dt;
    const Eigen::VectorXd phi = oracle::compact(I.phi), Sk = oracle::compact(I.S_old);
    auto grad = [&](const Eigen::VectorXd& S) -> Eigen::VectorXd {
      const Eigen::VectorXd e = (S - Sk).array() - shift;
      Eigen::VectorXd r = B * phi.cwiseProduct(e);
      for (Eigen::Index i = 0; i < S.size(); ++i)
        r[i] += I.sw * std::log(S[i]) - I.sn * std::log(1.0 - S[i]) + I.swn * (1.0 - 2.0 * Sk[i]);
      return phi.cwiseProduct(r);
    };
    const auto m = oracle::minimize_on_slice(grad, Sk.array() + shift, phi, 1e-12);
    CHECK(m.projected_gradient < 1e-12);
    CHECK((m.S - oracle::compact(nr.S)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("Krylov Newton path agrees with the direct path") {
  std::mt19937_64 rng(6);
  const Instance I = random_instance(6, rng);
  const SaturationResidual Rd = make_residual(I, 0.02);
  const SaturationResidual Rk = make_residual(I, 0.02, nullptr, EllipticBackend::Krylov);
  const CellField S0 = constrained_initial_guess(I.S_old, I.phi, 0.02);
  const NewtonResult a = solve(Rd, S0);
  NewtonConfig kc;
  kc.linear = NewtonLinearSolver::Krylov;
  const NewtonResult b = solve(Rk, S0, kc);
  CHECK(max_abs_active(a.S - b.S) <= 1e-9);
  CHECK(b.stats.krylov_iterations > 0);
  CHECK_THROWS_AS(solve(Rk, S0), ConfigError);
}

TEST_CASE("configuration checks") {
  NewtonConfig c;
  CHECK_NOTHROW(c.validate());
  c.theta = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_iter = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
