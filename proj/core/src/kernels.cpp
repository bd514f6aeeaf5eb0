#include "convexinit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "convexinit/errors.hpp"

namespace convexinit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Slack for correlations computed in floating point that land just past +-1.
constexpr double kRhoSlack = 1e-12;

void check_rho(double rho) {
  if (!(std::abs(rho) <= 1.0 + kRhoSlack)) {
    throw ParameterError("correlation must lie in [-1, 1], got " + std::to_string(rho));
  }
}

void check_var(double var) {
  if (!(var >= 0.0) || !std::isfinite(var)) {
    throw ParameterError("variance must be finite and >= 0, got " + std::to_string(var));
  }
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ParameterError("leaky-relu slope must lie in [0, 1], got " + std::to_string(alpha));
  }
}

// sqrt(1 - rho^2) + rho * acos(-rho), with rho clamped against rounding drift.
double arc_term(double rho) {
  const double r = std::clamp(rho, -1.0, 1.0);
  return std::sqrt(std::max(0.0, 1.0 - r * r)) + r * std::acos(-r);
}

}  // namespace

double relu_kernel(double rho, double var) {
  check_rho(rho);
  check_var(var);
  return var / kTwoPi * arc_term(rho);
}

double lrelu_kernel(double rho, double var, double alpha) {
  check_rho(rho);
  check_var(var);
  check_alpha(alpha);
  const double gain = (1.0 - alpha) * (1.0 - alpha);
  return gain * var / kTwoPi * arc_term(rho) + alpha * var * rho;
}

double lrelu_mean(double var, double alpha) {
  check_var(var);
  check_alpha(alpha);
  return (1.0 - alpha) * std::sqrt(var / kTwoPi);
}

double lrelu_sqmean(double var, double alpha) {
  check_var(var);
  check_alpha(alpha);
  return 0.5 * (1.0 + alpha * alpha) * var;
}

double lrelu_deriv_kernel(double rho, double alpha) {
  check_rho(rho);
  check_alpha(alpha);
  const double gain = (1.0 - alpha) * (1.0 - alpha);
  return gain * std::acos(-std::clamp(rho, -1.0, 1.0)) / kTwoPi + alpha;
}

double lrelu_deriv_mean(double alpha) {
  check_alpha(alpha);
  return 0.5 * (1.0 + alpha);
}

double f_c(double rho, std::size_t fan_in, double alpha) {
  check_rho(rho);
  check_alpha(alpha);
  if (fan_in < 1) throw ParameterError("f_c: fan-in must be >= 1");
  const double n = double(fan_in);
  const double gain = (1.0 - alpha) * (1.0 - alpha);
  const double bracket = (1.0 + alpha * alpha) * std::numbers::pi - n * gain +
                         (n - 1.0) * (gain * arc_term(rho) + kTwoPi * alpha * rho);
  return n / kTwoPi * bracket;
}

double f_c_derivative(double rho, std::size_t fan_in, double alpha) {
  check_rho(rho);
  check_alpha(alpha);
  if (fan_in < 1) throw ParameterError("f_c_derivative: fan-in must be >= 1");
  const double n = double(fan_in);
  const double gain = (1.0 - alpha) * (1.0 - alpha);
  return n / kTwoPi * (n - 1.0) * gain * std::acos(-std::clamp(rho, -1.0, 1.0)) +
         n * (n - 1.0) * alpha;
}

McEstimate kernel_mc_oracle(Rng& rng, double rho, double var, double alpha,
                            std::size_t n_samples, KernelMode mode) {
  check_rho(rho);
  check_var(var);
  check_alpha(alpha);
  if (n_samples < 1000) {
    throw ParameterError("kernel_mc_oracle: need at least 1000 samples, got " +
                         std::to_string(n_samples));
  }
  const double sd = std::sqrt(var);
  const double orth = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  CompensatedSum sum;
  CompensatedSum sum_sq;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double s1 = sd * z1;
    const double s2 = sd * (rho * z1 + orth * z2);
    double x = 0.0;
    switch (mode) {
      case KernelMode::value:
        x = lrelu(s1, alpha) * lrelu(s2, alpha);
        break;
      case KernelMode::derivative:
        x = lrelu_grad(s1, alpha) * lrelu_grad(s2, alpha);
        break;
      case KernelMode::mean:
        x = lrelu(s1, alpha);
        break;
    }
    sum.add(x);
    sum_sq.add(x * x);
  }
  const double n = double(n_samples);
  const double mean = sum.value() / n;
  const double second = sum_sq.value() / n;
  const double sample_var = std::max(0.0, (second - mean * mean) * n / (n - 1.0));
  return {mean, std::sqrt(sample_var / n)};
}

}  // namespace convexinit
