#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tpf/kernels.hpp"
#include "tpf/operators.hpp"

using namespace tpf;

namespace {

GridPtr square(int N, double L = 1.0) { return make_grid(GridSpec(2, {N, N, 1}, L / N)); }

GridPtr lshape(int N) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(N * N), 1);
  for (int j = N / 2; j < N; ++j)
    for (int i = N / 2; i < N; ++i) mask[static_cast<std::size_t>(i + N * j)] = 0;
  return make_grid(GridSpec(2, {N, N, 1}, 1.0 / N, {0, 0, 0}, mask));
}

}  // namespace

TEST_CASE("grid construction rejects bad layouts") {
  CHECK_THROWS_AS(GridSpec(2, {1, 4, 1}, 0.25), GridError);
  CHECK_THROWS_AS(GridSpec(4, {2, 2, 2}, 0.5), GridError);
  CHECK_THROWS_AS(GridSpec(2, {2, 2, 1}, -1.0), GridError);
  CHECK_THROWS_AS(GridSpec::from_extents(2, {4, 5, 1}, {0, 0, 0}, {1, 1, 0}), GridError);
  CHECK_NOTHROW(GridSpec::from_extents(2, {4, 8, 1}, {0, 0, 0}, {1, 2, 0}));
  // two active cells that only touch at a corner
  CHECK_THROWS_AS(GridSpec(2, {2, 2, 1}, 0.5, {0, 0, 0}, {1, 0, 0, 1}), GridError);
  CHECK_THROWS_AS(GridSpec(2, {2, 2, 1}, 0.5, {0, 0, 0}, {1, 1, 1}), GridError);
}

TEST_CASE("grid indexing and face topology") {
  const GridSpec g(3, {3, 4, 5}, 0.1, {1.0, 2.0, 3.0});
  CHECK(g.num_cells() == 60);
  CHECK(g.num_faces(0) == 4 * 4 * 5);
  CHECK(g.num_faces(1) == 3 * 5 * 5);
  CHECK(g.num_faces(2) == 3 * 4 * 6);
  const std::size_t c = g.cell_index(1, 2, 3);
  CHECK(c == 1 + 3 * (2 + 4 * 3));
  CHECK(g.cell_coords(c) == std::array<int, 3>{1, 2, 3});
  const auto x = g.cell_center(c);
  CHECK(x[0] == doctest::Approx(1.15));
  CHECK(x[1] == doctest::Approx(2.25));
  CHECK(x[2] == doctest::Approx(3.35));
  for (int a = 0; a < 3; ++a) {
    CHECK(g.face_hi(a, g.lower_face(a, c)) == static_cast<std::int64_t>(c));
    CHECK(g.face_lo(a, g.upper_face(a, c)) == static_cast<std::int64_t>(c));
  }
  CHECK_FALSE(g.interior_face(0, g.face_index(0, 0, 0, 0)));
  CHECK(g.interior_face(0, g.face_index(0, 1, 0, 0)));
  CHECK(g.measure() == doctest::Approx(60 * 1e-3));
}

TEST_CASE("gradient of constant and linear fields") {
  const GridPtr g = square(6);
  const FaceField z = gradient(CellField(g, 3.0));
  for (int a = 0; a < 2; ++a)
    for (double v : z.axis(a)) CHECK(v == 0.0);

  CellField x(g);
  for (std::size_t c = 0; c < g->num_cells(); ++c) x[c] = g->cell_center(c)[0];
  const FaceField gx = gradient(x);
  for (std::size_t f = 0; f < g->num_faces(0); ++f)
    CHECK(gx(0, f) == doctest::Approx(g->interior_face(0, f) ? 1.0 : 0.0).epsilon(1e-13));
  for (double v : gx.axis(1)) CHECK(v == 0.0);
}

TEST_CASE("summation by parts on random fields") {
  std::mt19937_64 rng(7);
  for (const GridPtr& g : {square(4), make_grid(GridSpec(2, {5, 3, 1}, 0.2)), lshape(6),
                           make_grid(GridSpec(3, {3, 4, 2}, 0.25))}) {
    for (int trial = 0; trial < 10; ++trial) {
      const CellField c = oracle::random_field(g, -1.0, 1.0, rng);
      const FaceField u = oracle::random_faces(g, -1.0, 1.0, rng, true);
      const double lhs = inner_product(u, gradient(c));
      const double rhs = -inner_product(divergence(u), c);
      CHECK(std::abs(lhs - rhs) <= 1e-13 * std::max(1.0, std::abs(lhs)));
      CHECK(std::abs(inner_product(divergence(u), CellField(g, 1.0))) <= 1e-13);
    }
  }
}

TEST_CASE("summation by parts holds per axis") {
  std::mt19937_64 rng(11);
  const GridPtr g = make_grid(GridSpec(2, {5, 3, 1}, 0.2));
  for (int trial = 0; trial < 10; ++trial) {
    const CellField c = oracle::random_field(g, -1.0, 1.0, rng);
    FaceField u = oracle::random_faces(g, -1.0, 1.0, rng, true);
    for (double& v : u.axis(1)) v = 0.0;
    CHECK(inner_product(u, gradient(c)) == doctest::Approx(-inner_product(divergence(u), c)).epsilon(1e-13));
  }
}

TEST_CASE("divergence of zero and of gradient") {
  const GridPtr g = square(8);
  const CellField d0 = divergence(FaceField(g));
  for (double v : d0.values()) CHECK(v == 0.0);

  std::mt19937_64 rng(3);
  const CellField c = oracle::random_field(g, -1.0, 1.0, rng);
  const Eigen::VectorXd ref = oracle::neumann_laplacian(*g) * oracle::compact(c);
  const Eigen::VectorXd got = oracle::compact(divergence(gradient(c)));
  CHECK((ref - got).cwiseAbs().maxCoeff() <= 1e-13 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("face average") {
  const GridPtr g = square(2);
  CellField c(g);
  c[g->cell_index(0, 0)] = 1.0;
  c[g->cell_index(1, 0)] = 3.0;
  CHECK(face_average(c)(0, g->face_index(0, 1, 0)) == 2.0);

  const FaceField k = face_average(CellField(square(5), 0.7));
  for (int a = 0; a < 2; ++a)
    for (double v : k.axis(a)) CHECK(v == doctest::Approx(0.7));

  std::mt19937_64 rng(5);
  const GridPtr h = lshape(8);
  const CellField r = oracle::random_field(h, 0.0, 1.0, rng);
  const FaceField fa = face_average(r);
  for (int a = 0; a < 2; ++a)
    for (std::size_t f = 0; f < h->num_faces(a); ++f) {
      if (!h->interior_face(a, f)) continue;
      const double lo = r[static_cast<std::size_t>(h->face_lo(a, f))];
      const double hi = r[static_cast<std::size_t>(h->face_hi(a, f))];
      CHECK(fa(a, f) >= std::min(lo, hi));
      CHECK(fa(a, f) <= std::max(lo, hi));
    }
}

TEST_CASE("inner products and means") {
  const GridPtr g = square(4);
  const CellField one(g, 1.0);
  CHECK(inner_product(one, one) == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(9);
  const CellField c = oracle::random_field(g, -1.0, 1.0, rng);
  CHECK(inner_product(c, c) > 0.0);
  CHECK(inner_product(CellField(g), CellField(g)) == 0.0);

  CHECK(weighted_mean(CellField(g, 0.3), oracle::random_field(g, 0.1, 1.0, rng)) == doctest::Approx(0.3));
  CellField chk(g);
  for (std::size_t k = 0; k < g->num_cells(); ++k) {
    const auto ij = g->cell_coords(k);
    chk[k] = (ij[0] + ij[1]) % 2 == 0 ? 1.0 : -1.0;
  }
  CHECK(weighted_mean(chk, one) == 0.0);

  const GridPtr s = square(3);
  const CellField a = oracle::random_field(s, -1.0, 1.0, rng);
  const CellField w = oracle::random_field(s, 0.1, 1.0, rng);
  double num = 0.0, den = 0.0, sum = 0.0;
  for (std::size_t k = 0; k < 9; ++k) {
    num += a[k] * w[k];
    den += w[k];
    sum += a[k];
  }
  CHECK(weighted_mean(a, w) == doctest::Approx(num / den).epsilon(1e-14));
  CHECK(integral(a) == doctest::Approx(sum / 9.0).epsilon(1e-14));
  CHECK(weighted_integral(a, w) == doctest::Approx(num / 9.0).epsilon(1e-14));
}

TEST_CASE("inactive cells are ignored") {
  const GridPtr g = lshape(4);
  CellField c(g, 1.0);
  for (std::size_t k = 0; k < g->num_cells(); ++k)
    if (!g->active(k)) c[k] = 1e300;
  CHECK(max_active(c) == 1.0);
  CHECK(mean(c) == 1.0);
  CHECK(integral(c) == doctest::Approx(0.75));
  const FaceField gr = gradient(c);
  for (int a = 0; a < 2; ++a)
    for (double v : gr.axis(a)) CHECK(v == 0.0);
}

TEST_CASE("OpenMP kernels match serial references") {
  std::mt19937_64 rng(21);
  for (const GridPtr& g : {square(16), lshape(12), make_grid(GridSpec(3, {7, 6, 5}, 0.1))}) {
    const CellField c = oracle::random_field(g, -1.0, 1.0, rng);
    FaceField a(g), b(g);
    kernels::gradient_omp(*g, c.values(), a);
    kernels::gradient_serial(*g, c.values(), b);
    for (int ax = 0; ax < g->dim(); ++ax)
      for (std::size_t f = 0; f < g->num_faces(ax); ++f) CHECK(a(ax, f) == b(ax, f));

    const FaceField u = oracle::random_faces(g, -1.0, 1.0, rng, true);
    std::vector<double> d1(g->num_cells()), d2(g->num_cells());
    kernels::divergence_omp(*g, u, d1);
    kernels::divergence_serial(*g, u, d2);
    CHECK(d1 == d2);

    const FaceField M = oracle::random_faces(g, 0.5, 2.0, rng, false);
    kernels::flux_laplacian_omp(*g, M, c.values(), d1);
    kernels::flux_laplacian_serial(*g, M, c.values(), d2);
    for (std::size_t k = 0; k < d1.size(); ++k) CHECK(d1[k] == doctest::Approx(d2[k]).epsilon(1e-12));

    const Eigen::VectorXd ref = oracle::stiffness(*g, M) * oracle::compact(c);
    const Eigen::VectorXd got = oracle::compact(flux_laplacian(M, c));
    CHECK((ref - got).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
  }
}
