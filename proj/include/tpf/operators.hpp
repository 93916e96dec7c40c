#pragma once

// Discrete calculus on the staggered grid: cell-to-face gradient, face-to-cell
// divergence, face averaging and the weighted inner products.  Boundary faces
// (outer boundary or next to an inactive cell) are no-flow faces: gradients
// vanish there and face inner products skip them.

#include "tpf/grid.hpp"

namespace tpf {

FaceField gradient(const CellField& c);
CellField divergence(const FaceField& f);

/// Arithmetic mean of the two neighbours; boundary faces copy the one active
/// neighbour (0 when there is none).
FaceField face_average(const CellField& c);

/// -div(coef * grad c), the no-flux variable-coefficient operator.
CellField flux_laplacian(const FaceField& coef, const CellField& c);

/// h^dim * sum over active cells of a*b.
double inner_product(const CellField& a, const CellField& b);
/// h^dim * sum over interior faces of a*b.
double inner_product(const FaceField& a, const FaceField& b);
double norm(const CellField& a);
double norm(const FaceField& a);

/// (w*c, 1)_h / (w, 1)_h.
double weighted_mean(const CellField& c, const CellField& w);
/// Plain mean over the active region.
double mean(const CellField& c);
/// (c, 1)_h
double integral(const CellField& c);
/// (w*c, 1)_h
double weighted_integral(const CellField& c, const CellField& w);

/// Max / min over active cells.
double max_active(const CellField& c);
double min_active(const CellField& c);
double max_abs_active(const CellField& c);

}  // namespace tpf
