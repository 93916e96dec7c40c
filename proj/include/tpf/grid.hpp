#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tpf {

/// Raised when a grid or field violates a structural invariant.
class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform Cartesian grid of cell-centred unknowns in 2D or 3D.
///
/// Storage order is x-fastest: cell (i, j, k) lives at i + N*(j + M*k).
/// Faces normal to axis `a` use the same order on a lattice with one extra
/// entry along `a`, so the x-face (i, j, k) sits between cells (i-1, j, k)
/// and (i, j, k).  In 2D the third axis has extent 1 and carries no faces.
///
/// Cells can be switched off with the active mask.  Faces touching an
/// inactive cell, or the outer boundary, are boundary faces.
class GridSpec {
 public:
  GridSpec(int dim, std::array<int, 3> cells, double h,
           std::array<double, 3> origin = {0.0, 0.0, 0.0},
           std::vector<std::uint8_t> active = {});

  /// Builds a grid from box extents, rejecting non-uniform spacing.
  static GridSpec from_extents(int dim, std::array<int, 3> cells,
                               std::array<double, 3> lower,
                               std::array<double, 3> upper,
                               std::vector<std::uint8_t> active = {});

  int dim() const { return dim_; }
  int n(int axis) const { return cells_[static_cast<std::size_t>(axis)]; }
  const std::array<int, 3>& cells() const { return cells_; }
  double h() const { return h_; }
  double origin(int axis) const { return origin_[static_cast<std::size_t>(axis)]; }
  double cell_volume() const { return cell_volume_; }

  std::size_t num_cells() const { return active_.size(); }
  std::size_t num_active() const { return num_active_; }
  bool active(std::size_t c) const { return active_[c] != 0; }
  const std::vector<std::uint8_t>& mask() const { return active_; }

  std::size_t cell_index(int i, int j, int k = 0) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(cells_[0]) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(cells_[1]) * static_cast<std::size_t>(k));
  }
  std::array<int, 3> cell_coords(std::size_t c) const;
  std::array<double, 3> cell_center(std::size_t c) const;

  std::size_t num_faces(int axis) const { return face_lo_[static_cast<std::size_t>(axis)].size(); }
  std::size_t face_index(int axis, int i, int j, int k = 0) const;

  /// Cell below / above a face along its normal, or -1 when outside or inactive.
  std::int64_t face_lo(int axis, std::size_t f) const {
    return face_lo_[static_cast<std::size_t>(axis)][f];
  }
  std::int64_t face_hi(int axis, std::size_t f) const {
    return face_hi_[static_cast<std::size_t>(axis)][f];
  }
  bool interior_face(int axis, std::size_t f) const {
    return face_lo(axis, f) >= 0 && face_hi(axis, f) >= 0;
  }

  /// Index of the lower / upper face of cell c along `axis`.
  std::size_t lower_face(int axis, std::size_t c) const;
  std::size_t upper_face(int axis, std::size_t c) const;

  /// Domain measure (active cells only).
  double measure() const { return cell_volume_ * static_cast<double>(num_active_); }

  bool same_layout(const GridSpec& other) const;

 private:
  void build_topology();

  int dim_;
  std::array<int, 3> cells_;
  double h_;
  double cell_volume_ = 0.0;
  std::array<double, 3> origin_;
  std::vector<std::uint8_t> active_;
  std::size_t num_active_ = 0;
  std::array<std::vector<std::int64_t>, 3> face_lo_;
  std::array<std::vector<std::int64_t>, 3> face_hi_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

inline GridPtr make_grid(GridSpec g) { return std::make_shared<const GridSpec>(std::move(g)); }

/// Scalar values at cell centres.
class CellField {
 public:
  CellField() = default;
  explicit CellField(GridPtr grid, double fill = 0.0)
      : grid_(std::move(grid)), v_(grid_->num_cells(), fill) {}
  CellField(GridPtr grid, std::vector<double> values);

  const GridSpec& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return v_.size(); }

  double& operator[](std::size_t c) { return v_[c]; }
  double operator[](std::size_t c) const { return v_[c]; }
  std::span<double> values() { return v_; }
  std::span<const double> values() const { return v_; }

  bool all_finite() const;

  CellField& operator+=(const CellField& o);
  CellField& operator-=(const CellField& o);
  CellField& operator*=(double s);
  /// this += a * x
  CellField& axpy(double a, const CellField& x);

  /// Zeroes inactive cells.
  CellField& mask_inactive();

 private:
  GridPtr grid_;
  std::vector<double> v_;
};

CellField operator+(CellField a, const CellField& b);
CellField operator-(CellField a, const CellField& b);
CellField operator*(double s, CellField a);

/// Per-axis values on cell faces.
class FaceField {
 public:
  FaceField() = default;
  explicit FaceField(GridPtr grid, double fill = 0.0);

  const GridSpec& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }

  std::span<double> axis(int a) { return v_[static_cast<std::size_t>(a)]; }
  std::span<const double> axis(int a) const { return v_[static_cast<std::size_t>(a)]; }
  double& operator()(int a, std::size_t f) { return v_[static_cast<std::size_t>(a)][f]; }
  double operator()(int a, std::size_t f) const { return v_[static_cast<std::size_t>(a)][f]; }

  bool all_finite() const;

  FaceField& operator*=(double s);
  FaceField& operator+=(const FaceField& o);

  /// Minimum over interior faces; +inf when there are none.
  double interior_min() const;

 private:
  GridPtr grid_;
  std::array<std::vector<double>, 3> v_;
};

/// Elementwise products.
FaceField hadamard(const FaceField& a, const FaceField& b);
CellField hadamard(const CellField& a, const CellField& b);

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

}  // namespace tpf
