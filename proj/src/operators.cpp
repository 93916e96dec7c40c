#include "tpf/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tpf/kernels.hpp"

namespace tpf {

FaceField gradient(const CellField& c) {
  FaceField out(c.grid_ptr());
  kernels::gradient_omp(c.grid(), c.values(), out);
  return out;
}

CellField divergence(const FaceField& f) {
  CellField out(f.grid_ptr());
  kernels::divergence_omp(f.grid(), f, out.values());
  return out;
}

FaceField face_average(const CellField& c) {
  const GridSpec& g = c.grid();
  FaceField out(c.grid_ptr());
  for (int a = 0; a < g.dim(); ++a) {
    auto o = out.axis(a);
    for (std::size_t f = 0; f < o.size(); ++f) {
      const std::int64_t lo = g.face_lo(a, f);
      const std::int64_t hi = g.face_hi(a, f);
      if (lo >= 0 && hi >= 0)
        o[f] = 0.5 * (c[static_cast<std::size_t>(lo)] + c[static_cast<std::size_t>(hi)]);
      else if (lo >= 0)
        o[f] = c[static_cast<std::size_t>(lo)];
      else if (hi >= 0)
        o[f] = c[static_cast<std::size_t>(hi)];
      else
        o[f] = 0.0;
    }
  }
  return out;
}

CellField flux_laplacian(const FaceField& coef, const CellField& c) {
  require_same_grid(coef.grid(), c.grid(), "flux_laplacian");
  CellField out(c.grid_ptr());
  kernels::flux_laplacian_omp(c.grid(), coef, c.values(), out.values());
  return out;
}

double inner_product(const CellField& a, const CellField& b) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c)
    if (g.active(c)) s += a[c] * b[c];
  return s * g.cell_volume();
}

double inner_product(const FaceField& a, const FaceField& b) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (int ax = 0; ax < g.dim(); ++ax) {
    auto x = a.axis(ax);
    auto y = b.axis(ax);
    for (std::size_t f = 0; f < x.size(); ++f)
      if (g.interior_face(ax, f)) s += x[f] * y[f];
  }
  return s * g.cell_volume();
}

double norm(const CellField& a) { return std::sqrt(inner_product(a, a)); }
double norm(const FaceField& a) { return std::sqrt(inner_product(a, a)); }

double weighted_integral(const CellField& c, const CellField& w) {
  const GridSpec& g = c.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (g.active(i)) s += w[i] * c[i];
  return s * g.cell_volume();
}

double integral(const CellField& c) {
  const GridSpec& g = c.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (g.active(i)) s += c[i];
  return s * g.cell_volume();
}

double weighted_mean(const CellField& c, const CellField& w) {
  const GridSpec& g = c.grid();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!g.active(i)) continue;
    num += w[i] * c[i];
    den += w[i];
  }
  return num / den;
}

double mean(const CellField& c) {
  const GridSpec& g = c.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (g.active(i)) s += c[i];
  return s / static_cast<double>(g.num_active());
}

// The extrema propagate NaN so that a bad entry cannot pass a tolerance test.
double max_active(const CellField& c) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c.grid().active(i)) continue;
    if (std::isnan(c[i])) return c[i];
    m = std::max(m, c[i]);
  }
  return m;
}

double min_active(const CellField& c) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c.grid().active(i)) continue;
    if (std::isnan(c[i])) return c[i];
    m = std::min(m, c[i]);
  }
  return m;
}

double max_abs_active(const CellField& c) {
  double m = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c.grid().active(i)) continue;
    if (std::isnan(c[i])) return c[i];
    m = std::max(m, std::abs(c[i]));
  }
  return m;
}

}  // namespace tpf
