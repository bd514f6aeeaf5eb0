#pragma once

#include <cstddef>

#include "convexinit/numerics.hpp"

// Gaussian expectations of the leaky-ReLU family.
//
// Every kernel assumes centred bivariate Gaussian inputs
//   (s1, s2) ~ N(0, var * [[1, rho], [rho, 1]])
// and phi(s) = s for s >= 0, alpha * s otherwise (alpha = 0 is ReLU).
// Arguments are validated: |rho| <= 1, var >= 0, 0 <= alpha <= 1.

namespace convexinit {

/// E[relu(s1) relu(s2)] = var/(2 pi) (sqrt(1 - rho^2) + rho acos(-rho)).
double relu_kernel(double rho, double var);

/// E[phi(s1) phi(s2)] for leaky ReLU with slope alpha.
double lrelu_kernel(double rho, double var, double alpha);

/// E[phi(s)] = (1 - alpha) sqrt(var / (2 pi)).
double lrelu_mean(double var, double alpha);

/// E[phi(s)^2] = (1 + alpha^2) var / 2.
double lrelu_sqmean(double var, double alpha);

/// E[phi'(s1) phi'(s2)] = (1 - alpha)^2 acos(-rho)/(2 pi) + alpha.
double lrelu_deriv_kernel(double rho, double alpha);

/// E[phi'(s)] = (1 + alpha) / 2.
double lrelu_deriv_mean(double alpha);

/// Correlation-propagation function: the off-diagonal covariance of the next
/// layer is mu_w^2 * var * f_c(rho) for a layer with fan-in `fan_in`.
double f_c(double rho, std::size_t fan_in, double alpha);

/// d f_c / d rho.
double f_c_derivative(double rho, std::size_t fan_in, double alpha);

enum class KernelMode { value, derivative, mean };

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of the kernel selected by `mode`:
///   value      -> E[phi(s1) phi(s2)]
///   derivative -> E[phi'(s1) phi'(s2)]
///   mean       -> E[phi(s1)]
/// Uses no closed form, so it can check the functions above. Requires
/// n_samples >= 1000.
McEstimate kernel_mc_oracle(Rng& rng, double rho, double var, double alpha,
                            std::size_t n_samples, KernelMode mode);

/// leaky ReLU and its derivative (derivative at 0 taken as 1).
inline double lrelu(double s, double alpha) noexcept { return s >= 0.0 ? s : alpha * s; }
inline double lrelu_grad(double s, double alpha) noexcept { return s >= 0.0 ? 1.0 : alpha; }

}  // namespace convexinit
