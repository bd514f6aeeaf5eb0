#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "convexinit/init.hpp"
#include "convexinit/network.hpp"
#include "convexinit/numerics.hpp"

namespace convexinit {

/// Moments of one layer's pre-activations under the exchangeable-feature
/// assumption: every feature has the same mean and variance and every pair of
/// distinct features the same correlation.
struct MomentState {
  double mean = 0.0;
  double var = 1.0;
  double rho = 0.0;
};

/// Moments of the back-propagated deltas of one layer.
struct DeltaMomentState {
  double mean = 0.0;
  double sqmean = 0.0;
  /// E[delta_i delta_j] for i != j.
  double mixed = 0.0;
};

/// Fixed-range histogram; counts[0] and counts.back() are the under/overflow bins.
struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;

  std::size_t total() const;
};

struct LayerStats {
  std::size_t layer = 0;
  double mean = 0.0;
  double var = 0.0;
  /// Mean off-diagonal entry of the feature correlation matrix (per-pair
  /// Pearson correlation across the batch).
  double mean_corr = 0.0;
  /// Mean off-diagonal covariance about the pooled mean, over the pooled
  /// variance. Unlike mean_corr it keeps the spread of the feature means, so
  /// it estimates the correlation tracked by analytic_forward_stats.
  double pooled_corr = 0.0;
  /// Number of constant features; their correlations are reported as 0.
  std::size_t degenerate_features = 0;
  Histogram histogram;
  /// Full feature correlation matrix, kept only for width <= 64.
  std::optional<Matrix> correlation;
};

struct ForwardStats {
  std::vector<MomentState> states;
  /// Set for a layer whose input mean exceeded 0.1 sqrt(var), where the
  /// centred-Gaussian closed forms stop being trustworthy.
  std::vector<bool> non_gaussian;
};

inline constexpr std::size_t kDefaultHistogramBins = 61;
inline constexpr std::size_t kFullCorrelationMaxWidth = 64;

/// Propagates moments through layers whose inputs are phi(pre-activations):
///   mean' = mu_b + N mu_w E[phi(s)]
///   cov'  = mu_w^2 N (Var[phi(s)] + (N - 1) Cov[phi(s1), phi(s2)])
///   var'  = var_b + var_w N E[phi(s)^2] + cov'
///   rho'  = cov' / var'
/// `input` describes the pre-activations feeding the first entry of `layers`.
ForwardStats analytic_forward_stats(std::span<const InitParams> layers, const MomentState& input);

/// Analytic statistics of every layer of a freshly initialised network fed
/// i.i.d. inputs with second moment `input_sqmean`.
ForwardStats analytic_network_stats(const NetworkConfig& config, double input_sqmean = 1.0);

/// Propagates delta moments from the output layer back to the first layer.
/// `params` and `forward` hold one entry per layer; the result is indexed by
/// layer with the last entry equal to `output`.
std::vector<DeltaMomentState> analytic_backward_stats(const NetworkConfig& config,
                                                      std::span<const InitParams> params,
                                                      std::span<const MomentState> forward,
                                                      const DeltaMomentState& output);

/// Statistics of one pre-activation matrix (batch x width).
LayerStats preactivation_stats(const Matrix& preacts, std::size_t layer,
                               std::size_t n_bins = kDefaultHistogramBins);

/// Runs the network on `batch` (at least 100 rows) and measures every layer.
std::vector<LayerStats> empirical_layer_stats(const Network& net, const Matrix& batch,
                                              std::size_t n_bins = kDefaultHistogramBins);

/// Moments of explicit delta matrices (batch x width).
DeltaMomentState delta_moments(const Matrix& deltas);

/// Injects i.i.d. unit-variance deltas at the output, back-propagates and
/// measures the delta moments of every layer.
std::vector<DeltaMomentState> empirical_backward_stats(const Network& net, const Matrix& batch,
                                                       Rng& rng);

/// Same, with caller-supplied output deltas.
std::vector<DeltaMomentState> empirical_backward_stats(const Network& net, const Matrix& batch,
                                                       const Matrix& output_deltas);

/// Gaussian rows with the given per-feature mean and variance and a common
/// pairwise correlation rho in [0, 1].
Matrix correlated_gaussian_batch(Rng& rng, std::size_t rows, std::size_t width,
                                 const MomentState& state);

/// Feeds synthetic pre-activations with moments `input` through phi and one
/// freshly sampled layer (`params.fan_in` inputs, `out_width` outputs,
/// log-normal weights whenever mu_w > 0) and measures the result.
LayerStats empirical_one_step(Rng& rng, const MomentState& input, const InitParams& params,
                              std::size_t out_width, std::size_t batch,
                              std::size_t n_bins = kDefaultHistogramBins);

}  // namespace convexinit
