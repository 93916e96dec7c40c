#include "tpf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace tpf {

namespace {

bool face_connected(const GridSpec& g) {
  const std::size_t n = g.num_cells();
  std::size_t start = n;
  for (std::size_t c = 0; c < n; ++c) {
    if (g.active(c)) {
      start = c;
      break;
    }
  }
  if (start == n) return false;

  std::vector<std::uint8_t> seen(n, 0);
  std::queue<std::size_t> q;
  q.push(start);
  seen[start] = 1;
  std::size_t reached = 1;
  while (!q.empty()) {
    const std::size_t c = q.front();
    q.pop();
    for (int a = 0; a < g.dim(); ++a) {
      for (std::size_t f : {g.lower_face(a, c), g.upper_face(a, c)}) {
        if (!g.interior_face(a, f)) continue;
        auto other = static_cast<std::size_t>(g.face_lo(a, f));
        if (other == c) other = static_cast<std::size_t>(g.face_hi(a, f));
        if (!seen[other]) {
          seen[other] = 1;
          ++reached;
          q.push(other);
        }
      }
    }
  }
  return reached == g.num_active();
}

}  // namespace

GridSpec::GridSpec(int dim, std::array<int, 3> cells, double h, std::array<double, 3> origin,
                   std::vector<std::uint8_t> active)
    : dim_(dim), cells_(cells), h_(h), origin_(origin), active_(std::move(active)) {
  if (dim_ != 2 && dim_ != 3) throw GridError("grid dimension must be 2 or 3");
  if (dim_ == 2) cells_[2] = 1;
  for (int a = 0; a < dim_; ++a) {
    if (cells_[static_cast<std::size_t>(a)] < 2)
      throw GridError("each axis needs at least 2 cells");
  }
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw GridError("grid spacing must be positive");
  const std::size_t total = static_cast<std::size_t>(cells_[0]) * static_cast<std::size_t>(cells_[1]) *
                            static_cast<std::size_t>(cells_[2]);
  if (active_.empty()) active_.assign(total, 1);
  if (active_.size() != total) throw GridError("active mask size does not match cell count");
  num_active_ = static_cast<std::size_t>(std::count_if(active_.begin(), active_.end(),
                                                       [](std::uint8_t m) { return m != 0; }));
  cell_volume_ = std::pow(h_, dim_);
  build_topology();
  if (!face_connected(*this)) throw GridError("active region must be a single face-connected set");
}

GridSpec GridSpec::from_extents(int dim, std::array<int, 3> cells, std::array<double, 3> lower,
                                std::array<double, 3> upper, std::vector<std::uint8_t> active) {
  if (dim != 2 && dim != 3) throw GridError("grid dimension must be 2 or 3");
  const double h = (upper[0] - lower[0]) / cells[0];
  for (int a = 1; a < dim; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double ha = (upper[ua] - lower[ua]) / cells[ua];
    if (std::abs(ha - h) > 1e-12 * std::abs(h))
      throw GridError("non-uniform spacing: h differs between axes");
  }
  return GridSpec(dim, cells, h, lower, std::move(active));
}

void GridSpec::build_topology() {
  for (int a = 0; a < 3; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    face_lo_[ua].clear();
    face_hi_[ua].clear();
    if (a >= dim_) continue;
    std::array<int, 3> d = cells_;
    d[ua] += 1;
    const std::size_t nf = static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) *
                           static_cast<std::size_t>(d[2]);
    face_lo_[ua].assign(nf, -1);
    face_hi_[ua].assign(nf, -1);
    std::size_t f = 0;
    for (int k = 0; k < d[2]; ++k) {
      for (int j = 0; j < d[1]; ++j) {
        for (int i = 0; i < d[0]; ++i, ++f) {
          std::array<int, 3> hi{i, j, k};
          std::array<int, 3> lo = hi;
          lo[ua] -= 1;
          if (lo[ua] >= 0) {
            const std::size_t c = cell_index(lo[0], lo[1], lo[2]);
            if (active_[c]) face_lo_[ua][f] = static_cast<std::int64_t>(c);
          }
          if (hi[ua] < cells_[ua]) {
            const std::size_t c = cell_index(hi[0], hi[1], hi[2]);
            if (active_[c]) face_hi_[ua][f] = static_cast<std::int64_t>(c);
          }
        }
      }
    }
  }
}

std::array<int, 3> GridSpec::cell_coords(std::size_t c) const {
  const auto nx = static_cast<std::size_t>(cells_[0]);
  const auto ny = static_cast<std::size_t>(cells_[1]);
  return {static_cast<int>(c % nx), static_cast<int>((c / nx) % ny), static_cast<int>(c / (nx * ny))};
}

std::array<double, 3> GridSpec::cell_center(std::size_t c) const {
  const auto ijk = cell_coords(c);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    x[ua] = origin_[ua] + (ijk[ua] + 0.5) * h_;
  }
  return x;
}

std::size_t GridSpec::face_index(int axis, int i, int j, int k) const {
  std::array<int, 3> d = cells_;
  d[static_cast<std::size_t>(axis)] += 1;
  return static_cast<std::size_t>(i) +
         static_cast<std::size_t>(d[0]) *
             (static_cast<std::size_t>(j) + static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(k));
}

std::size_t GridSpec::lower_face(int axis, std::size_t c) const {
  const auto ijk = cell_coords(c);
  return face_index(axis, ijk[0], ijk[1], ijk[2]);
}

std::size_t GridSpec::upper_face(int axis, std::size_t c) const {
  auto ijk = cell_coords(c);
  ijk[static_cast<std::size_t>(axis)] += 1;
  return face_index(axis, ijk[0], ijk[1], ijk[2]);
}

bool GridSpec::same_layout(const GridSpec& o) const {
  return dim_ == o.dim_ && cells_ == o.cells_ && h_ == o.h_ && active_ == o.active_;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (&a != &b && !a.same_layout(b)) throw GridError(std::string("grid mismatch in ") + what);
}

CellField::CellField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), v_(std::move(values)) {
  if (v_.size() != grid_->num_cells()) throw GridError("cell field size does not match grid");
}

bool CellField::all_finite() const {
  for (std::size_t c = 0; c < v_.size(); ++c)
    if (grid_->active(c) && !std::isfinite(v_[c])) return false;
  return true;
}

CellField& CellField::operator+=(const CellField& o) {
  for (std::size_t c = 0; c < v_.size(); ++c) v_[c] += o.v_[c];
  return *this;
}

CellField& CellField::operator-=(const CellField& o) {
  for (std::size_t c = 0; c < v_.size(); ++c) v_[c] -= o.v_[c];
  return *this;
}

CellField& CellField::operator*=(double s) {
  for (double& x : v_) x *= s;
  return *this;
}

CellField& CellField::axpy(double a, const CellField& x) {
  for (std::size_t c = 0; c < v_.size(); ++c) v_[c] += a * x.v_[c];
  return *this;
}

CellField& CellField::mask_inactive() {
  for (std::size_t c = 0; c < v_.size(); ++c)
    if (!grid_->active(c)) v_[c] = 0.0;
  return *this;
}

CellField operator+(CellField a, const CellField& b) { return a += b; }
CellField operator-(CellField a, const CellField& b) { return a -= b; }
CellField operator*(double s, CellField a) { return a *= s; }

FaceField::FaceField(GridPtr grid, double fill) : grid_(std::move(grid)) {
  for (int a = 0; a < grid_->dim(); ++a)
    v_[static_cast<std::size_t>(a)].assign(grid_->num_faces(a), fill);
}

bool FaceField::all_finite() const {
  for (const auto& ax : v_)
    for (double x : ax)
      if (!std::isfinite(x)) return false;
  return true;
}

FaceField& FaceField::operator*=(double s) {
  for (auto& ax : v_)
    for (double& x : ax) x *= s;
  return *this;
}

FaceField& FaceField::operator+=(const FaceField& o) {
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t f = 0; f < v_[a].size(); ++f) v_[a][f] += o.v_[a][f];
  return *this;
}

double FaceField::interior_min() const {
  double m = std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid_->dim(); ++a)
    for (std::size_t f = 0; f < v_[static_cast<std::size_t>(a)].size(); ++f)
      if (grid_->interior_face(a, f)) m = std::min(m, v_[static_cast<std::size_t>(a)][f]);
  return m;
}

FaceField hadamard(const FaceField& a, const FaceField& b) {
  FaceField out(a.grid_ptr());
  for (int ax = 0; ax < a.grid().dim(); ++ax) {
    auto o = out.axis(ax);
    auto x = a.axis(ax);
    auto y = b.axis(ax);
    for (std::size_t f = 0; f < o.size(); ++f) o[f] = x[f] * y[f];
  }
  return out;
}

CellField hadamard(const CellField& a, const CellField& b) {
  require_same_grid(a.grid(), b.grid(), "hadamard");
  CellField out(a.grid_ptr());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = a[c] * b[c];
  return out;
}

}  // namespace tpf
