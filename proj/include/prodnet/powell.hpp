#pragma once

// Powell's conjugate-direction minimizer with box bounds enforced by clamping
// each line search to the feasible segment.

#include <functional>

#include "prodnet/economy.hpp"

namespace prodnet {

struct PowellOptions {
  double rel_tolerance = 1e-10;  ///< stop when a full sweep improves f by less than this (relative)
  double abs_tolerance = 1e-30;
  int max_evaluations = 200000;
  double initial_step = 0.5;  ///< half-width of the first line-search bracket
};

struct PowellResult {
  Vector x;
  double f = 0.0;
  int evaluations = 0;
  int sweeps = 0;
  bool converged = false;
};

/// Minimizes f over lower <= x <= upper (infinite bounds allowed). x0 is
/// clamped into the box first. Throws DomainError when f(x0) is not finite.
PowellResult powell_minimize(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const Vector& lower, const Vector& upper, const PowellOptions& options = {});

}  // namespace prodnet
