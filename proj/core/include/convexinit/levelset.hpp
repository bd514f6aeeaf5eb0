#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "convexinit/network.hpp"
#include "convexinit/numerics.hpp"

namespace convexinit {

/// Scalar objective evaluated at a point.
using ScalarFunction = std::function<double(std::span<const double>)>;
/// Returns f(x) and writes grad f(x) into `grad` (same size as x).
using GradientFunction = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct MinimizeOptions {
  /// Initial step; backtracking halves it, successful steps let it grow again.
  double learning_rate = 0.1;
  std::size_t max_iters = 10000;
  double grad_tol = 1e-8;
};

struct MinimumResult {
  Vector x;
  double f = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

/// Gradient descent with Armijo backtracking. Returns the best iterate seen.
MinimumResult find_minimum(const GradientFunction& f, Vector x0, const MinimizeOptions& options = {});

/// Minimises output `output_index` of an ICNN over its input.
MinimumResult find_minimum(const Network& net, std::size_t output_index, Vector x0,
                           const MinimizeOptions& options = {});

/// Value and input gradient of one network output at a single point.
double network_output(const Network& net, std::size_t output_index, std::span<const double> x);
GradientFunction network_objective(const Network& net, std::size_t output_index);

/// Residual tolerance used by level_cross: 1e-6 * (1 + |c|).
double level_tolerance(double c) noexcept;

/// Smallest t >= 0 with f(center + t * direction) = c, found by bisection
/// after doubling t_max until the bracket closes (at most 60 doublings).
double level_cross(const ScalarFunction& f, std::span<const double> center,
                   std::span<const double> direction, double c, double t_max = 1.0);

struct LevelTrajectory {
  std::size_t output_index = 0;
  double level = 0.0;
  std::vector<Vector> points;
  Vector residuals;
  double tolerance = 0.0;
};

/// Walks the level set {f = f(x_ref)} from x_ref towards the direction of
/// x_tgt, as seen from the minimiser found by descending from x_ref.
LevelTrajectory level_trajectory(const Network& net, std::size_t output_index, const Vector& x_ref,
                                 const Vector& x_tgt, std::size_t n_points,
                                 const MinimizeOptions& options = {});

}  // namespace convexinit
