#ifndef TESBO_OPTIMIZE_HPP
#define TESBO_OPTIMIZE_HPP

#include "tesbo/types.hpp"

#include <functional>

namespace tesbo {

// Objective returning f(x); fills *gradient when it is non-null.
using SmoothObjective = std::function<double(const Vector& x, Vector* gradient)>;

struct AscentOptions {
  int max_iterations = 200;
  // Stop when the projected-gradient step is below this in every coordinate.
  double tolerance = 1e-9;
  // Initial step length in units of the box width.
  double initial_step = 0.1;
};

struct AscentResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
};

// Spectral projected gradient ascent (Barzilai–Borwein steps with Armijo
// backtracking) on the box [lower, upper].
AscentResult projected_gradient_ascent(const SmoothObjective& objective, const Vector& start,
                                       const Vector& lower, const Vector& upper,
                                       const AscentOptions& options = {});

// Screens `pool` uniform points, then ascends from the best `restarts`.
// Returns the best point found.
AscentResult multistart_maximize(const SmoothObjective& objective, const Domain& domain,
                                 int restarts, int pool, Rng& rng,
                                 const AscentOptions& options = {});

}  // namespace tesbo

#endif  // TESBO_OPTIMIZE_HPP
