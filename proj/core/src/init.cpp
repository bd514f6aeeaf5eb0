#include "convexinit/init.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "convexinit/errors.hpp"
#include "convexinit/kernels.hpp"

namespace convexinit {

namespace {

void check_common(std::size_t fan_in, double alpha) {
  if (fan_in < 1) throw ParameterError("fan-in must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ParameterError("leaky-relu slope must lie in [0, 1], got " + std::to_string(alpha));
  }
}

}  // namespace

InitParams convex_init_params(std::size_t fan_in, double alpha, double rho_star, double var_star,
                              double beta) {
  check_common(fan_in, alpha);
  if (!(rho_star >= 0.0 && rho_star < 1.0)) {
    throw ParameterError("rho* must lie in [0, 1), got " + std::to_string(rho_star));
  }
  if (!(var_star > 0.0) || !std::isfinite(var_star)) {
    throw ParameterError("var* must be > 0, got " + std::to_string(var_star));
  }
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw ParameterError("beta must lie in [0, 1), got " + std::to_string(beta));
  }

  const double fc = f_c(rho_star, fan_in, alpha);
  if (!(fc > 0.0)) {
    throw InfeasibleError("f_c(rho*) = " + std::to_string(fc) + " <= 0 for rho* = " +
                          std::to_string(rho_star) + ", N = " + std::to_string(fan_in));
  }

  const double n = double(fan_in);
  InitParams p;
  p.fan_in = fan_in;
  p.alpha = alpha;
  p.rho_star = rho_star;
  p.var_star = var_star;
  p.beta = beta;
  p.mu_w = std::sqrt(rho_star / fc);
  p.var_w = 2.0 / (1.0 + alpha * alpha) / n * (1.0 - rho_star) * (1.0 - beta);
  p.mu_b = -n * p.mu_w * (1.0 - alpha) * std::sqrt(var_star / (2.0 * std::numbers::pi));
  p.var_b = beta * (1.0 - rho_star) * var_star;
  if (p.mu_w > 0.0) p.lognormal = lognormal_params(p.mu_w, p.var_w);
  return p;
}

InitParams baseline_init_params(BaselineScheme scheme, std::size_t fan_in, double alpha) {
  check_common(fan_in, alpha);
  InitParams p;
  p.fan_in = fan_in;
  p.alpha = alpha;
  const double n = double(fan_in);
  switch (scheme) {
    case BaselineScheme::lecun:
      p.var_w = 1.0 / n;
      break;
    case BaselineScheme::he:
      p.var_w = 2.0 / ((1.0 + alpha * alpha) * n);
      break;
  }
  return p;
}

FixedPoint fixed_point_map(const FixedPoint& state, const InitParams& params) {
  if (!(state.var > 0.0) || !(std::abs(state.rho) <= 1.0)) {
    throw ParameterError("fixed_point_map: need var > 0 and |rho| <= 1");
  }
  const double n = double(params.fan_in);
  const double cov =
      params.mu_w * params.mu_w * state.var * f_c(state.rho, params.fan_in, params.alpha);
  const double var = params.var_b +
                     params.var_w * n * (1.0 + params.alpha * params.alpha) * 0.5 * state.var +
                     cov;
  if (!(var > 0.0)) {
    throw DegenerateError("fixed_point_map: propagated variance " + std::to_string(var) +
                          " is not positive");
  }
  return {var, cov / state.var};
}

Eigenvalues jacobian_eigenvalues(double rho_star, std::size_t fan_in, double alpha) {
  const double fc = f_c(rho_star, fan_in, alpha);
  if (!(fc > 0.0)) {
    throw InfeasibleError("jacobian_eigenvalues: f_c(rho*) = " + std::to_string(fc) + " <= 0");
  }
  return {rho_star, rho_star * f_c_derivative(rho_star, fan_in, alpha) / fc};
}

double stability_threshold() {
  return 1.0 + (2.0 * std::numbers::pi - 2.0) / (2.0 - std::numbers::sqrt3);
}

}  // namespace convexinit
