#pragma once

#include <stdexcept>
#include <string>

#include "tpf/grid.hpp"

namespace tpf {

#define TPF_ERROR(Name)                    \
  class Name : public std::runtime_error { \
   public:                                 \
    using std::runtime_error::runtime_error; \
  }

/// Saturation or parameter outside the domain of a nonlinear function.
TPF_ERROR(DomainError);
/// Right-hand side violates the solvability condition of a singular solve.
TPF_ERROR(IncompatibleRhs);
/// Energy/mobility parameters violate a structural requirement.
TPF_ERROR(ParamError);
/// Sources inconsistent with closed no-flow boundaries.
TPF_ERROR(CompatibilityError);
/// Safeguarded Newton could not find a damped step reducing the residual.
TPF_ERROR(DampingStall);
/// Malformed or inconsistent configuration.
TPF_ERROR(ConfigError);

#undef TPF_ERROR

/// Iteration budget exhausted; carries the final residual.
class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace tpf
