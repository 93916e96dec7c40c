#include "tpf/kernels.hpp"

#include <cstdint>

namespace tpf::kernels {

namespace {

template <bool Parallel>
void gradient_impl(const GridSpec& g, std::span<const double> c, FaceField& out) {
  const double inv_h = 1.0 / g.h();
  for (int a = 0; a < g.dim(); ++a) {
    auto o = out.axis(a);
    const auto nf = static_cast<std::int64_t>(o.size());
#pragma omp parallel for schedule(static) if (Parallel)
    for (std::int64_t f = 0; f < nf; ++f) {
      const auto uf = static_cast<std::size_t>(f);
      const std::int64_t lo = g.face_lo(a, uf);
      const std::int64_t hi = g.face_hi(a, uf);
      o[uf] = (lo >= 0 && hi >= 0)
                  ? (c[static_cast<std::size_t>(hi)] - c[static_cast<std::size_t>(lo)]) * inv_h
                  : 0.0;
    }
  }
}

template <bool Parallel>
void divergence_impl(const GridSpec& g, const FaceField& f, std::span<double> out) {
  const double inv_h = 1.0 / g.h();
  const int nx = g.n(0), ny = g.n(1), nz = g.n(2);
  const int dim = g.dim();
#pragma omp parallel for schedule(static) if (Parallel)
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t c = g.cell_index(i, j, k);
        if (!g.active(c)) {
          out[c] = 0.0;
          continue;
        }
        double s = (f(0, g.face_index(0, i + 1, j, k)) - f(0, g.face_index(0, i, j, k)));
        s += (f(1, g.face_index(1, i, j + 1, k)) - f(1, g.face_index(1, i, j, k)));
        if (dim == 3) s += (f(2, g.face_index(2, i, j, k + 1)) - f(2, g.face_index(2, i, j, k)));
        out[c] = s * inv_h;
      }
    }
  }
}

}  // namespace

void gradient_omp(const GridSpec& g, std::span<const double> c, FaceField& out) {
  gradient_impl<true>(g, c, out);
}
void gradient_serial(const GridSpec& g, std::span<const double> c, FaceField& out) {
  gradient_impl<false>(g, c, out);
}

void divergence_omp(const GridSpec& g, const FaceField& f, std::span<double> out) {
  divergence_impl<true>(g, f, out);
}
void divergence_serial(const GridSpec& g, const FaceField& f, std::span<double> out) {
  divergence_impl<false>(g, f, out);
}

void flux_laplacian_omp(const GridSpec& g, const FaceField& coef, std::span<const double> c,
                        std::span<double> out) {
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const int nx = g.n(0), ny = g.n(1), nz = g.n(2);
  const int dim = g.dim();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t cell = g.cell_index(i, j, k);
        if (!g.active(cell)) {
          out[cell] = 0.0;
          continue;
        }
        const double cc = c[cell];
        double up_minus_down = 0.0;
        for (int a = 0; a < dim; ++a) {
          std::array<int, 3> hi{i, j, k};
          hi[static_cast<std::size_t>(a)] += 1;
          const std::size_t fu = g.face_index(a, hi[0], hi[1], hi[2]);
          const std::size_t fd = g.face_index(a, i, j, k);
          double flux_up = 0.0, flux_down = 0.0;
          if (g.interior_face(a, fu))
            flux_up = coef(a, fu) * (c[static_cast<std::size_t>(g.face_hi(a, fu))] - cc);
          if (g.interior_face(a, fd))
            flux_down = coef(a, fd) * (cc - c[static_cast<std::size_t>(g.face_lo(a, fd))]);
          up_minus_down += flux_up - flux_down;
        }
        out[cell] = -up_minus_down * inv_h2;
      }
    }
  }
}

void flux_laplacian_serial(const GridSpec& g, const FaceField& coef, std::span<const double> c,
                           std::span<double> out) {
  FaceField grad(coef.grid_ptr());
  gradient_serial(g, c, grad);
  FaceField flux = hadamard(coef, grad);
  divergence_serial(g, flux, out);
  for (double& x : out) x = -x;
}

}  // namespace tpf::kernels
