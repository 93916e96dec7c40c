#pragma once

// Stencil kernels behind the discrete operators.
//
// Every kernel has an OpenMP version (used by the library) and a serial
// reference kept for tests and the benchmark.  The kernels are pure maps, one
// output entry per loop iteration, so results do not depend on the thread
// count.  Gradient and divergence match their references bitwise; the fused
// flux Laplacian rounds differently from the composed reference.  Reductions
// never live here.

#include <span>

#include "tpf/grid.hpp"

namespace tpf::kernels {

/// Face gradient: interior faces get (c_hi - c_lo)/h, boundary faces 0.
void gradient_omp(const GridSpec& g, std::span<const double> c, FaceField& out);
void gradient_serial(const GridSpec& g, std::span<const double> c, FaceField& out);

/// Cell divergence of face values; inactive cells get 0.
void divergence_omp(const GridSpec& g, const FaceField& f, std::span<double> out);
void divergence_serial(const GridSpec& g, const FaceField& f, std::span<double> out);

/// out = -div(coef * grad c) with no flux through boundary faces.
/// The OpenMP kernel is fused; the serial reference composes the three
/// separate operators.
void flux_laplacian_omp(const GridSpec& g, const FaceField& coef, std::span<const double> c,
                        std::span<double> out);
void flux_laplacian_serial(const GridSpec& g, const FaceField& coef, std::span<const double> c,
                           std::span<double> out);

}  // namespace tpf::kernels
