#pragma once

#include <cstddef>
#include <optional>

#include "convexinit/numerics.hpp"

namespace convexinit {

/// Distribution parameters for one layer's weights and biases.
///
/// `rho_star`, `var_star` and `beta` record the fixed point the parameters were
/// derived for; baseline schemes leave them at their defaults.
struct InitParams {
  double mu_w = 0.0;
  double var_w = 0.0;
  double mu_b = 0.0;
  double var_b = 0.0;
  std::size_t fan_in = 1;
  double alpha = 0.0;
  double rho_star = 0.0;
  double var_star = 1.0;
  double beta = 0.0;
  /// Log-normal parameters producing weights with mean mu_w and variance var_w.
  /// Present whenever mu_w > 0.
  std::optional<LogNormalParams> lognormal;
};

/// Per-layer (variance, feature correlation) pair.
struct FixedPoint {
  double var = 1.0;
  double rho = 0.0;
};

struct Eigenvalues {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

enum class BaselineScheme { lecun, he };

/// Initialisation that makes (var_star, rho_star) a fixed point of the
/// forward moment map for a layer with non-negative weights:
///
///   mu_w  = sqrt(rho* / f_c(rho*))
///   var_w = 2/(1 + alpha^2) * (1 - rho*) * (1 - beta) / N
///   mu_b  = -N mu_w (1 - alpha) sqrt(var* / 2 pi)
///   var_b = beta (1 - rho*) var*
///
/// The bias mean centres the pre-activations, so it is negative whenever
/// mu_w > 0. Throws InfeasibleError when f_c(rho*) <= 0 and ParameterError for
/// arguments outside their domain.
InitParams convex_init_params(std::size_t fan_in, double alpha = 0.0, double rho_star = 0.5,
                              double var_star = 1.0, double beta = 0.0);

/// Zero-mean LeCun (var_w = 1/N) or He (var_w = 2/((1 + alpha^2) N)) parameters.
InitParams baseline_init_params(BaselineScheme scheme, std::size_t fan_in, double alpha = 0.0);

/// One application of the layer moment map used for the stability analysis:
///   cov'  = mu_w^2 var f_c(rho)
///   var'  = var_b + var_w N (1 + alpha^2) var / 2 + cov'
///   rho'  = cov' / var
/// The correlation is measured against the incoming variance, so that at the
/// fixed point it equals cov'/var'. Throws DegenerateError if var' <= 0.
FixedPoint fixed_point_map(const FixedPoint& state, const InitParams& params);

/// Jacobian eigenvalues of the moment map at its fixed point:
/// lambda1 = rho*, lambda2 = rho* f_c'(rho*) / f_c(rho*).
Eigenvalues jacobian_eigenvalues(double rho_star, std::size_t fan_in, double alpha = 0.0);

/// Fan-in below which lambda2 < 1 for rho* = 1/2 and ReLU:
/// 1 + (2 pi - 2) / (2 - sqrt 3), roughly 17.
double stability_threshold();

}  // namespace convexinit
