#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convexinit/init.hpp"
#include "convexinit/numerics.hpp"

namespace convexinit {

enum class Variant { nonconvex, icnn_projection, icnn_exp_reparam };

enum class InitKind { default_he, convex_init, lecun };

struct InitScheme {
  InitKind kind = InitKind::default_he;
  double rho_star = 0.5;
  double var_star = 1.0;
  double beta = 0.0;

  bool operator==(const InitScheme&) const = default;
};

struct NetworkConfig {
  /// Input width, hidden widths..., output width.
  std::vector<std::size_t> layer_widths;
  double alpha = 0.0;
  Variant variant = Variant::nonconvex;
  bool skip_connections = false;
  InitScheme init;

  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
  std::size_t num_layers() const { return layer_widths.size() - 1; }

  /// Throws ParameterError if the configuration is not buildable.
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

std::string_view to_string(Variant v);
std::string_view to_string(InitKind k);
Variant parse_variant(std::string_view s);
InitKind parse_init_kind(std::string_view s);

inline bool is_icnn(Variant v) { return v != Variant::nonconvex; }

/// One affine layer s = W phi(s_prev) + D x + b.
struct Layer {
  /// Stored weights (out x in). For constrained exp-reparam layers these are
  /// the log-weights; the effective weights are exp(weight).
  Matrix weight;
  Vector bias;
  /// Unconstrained input passthrough (out x input width), when enabled.
  std::optional<Matrix> skip;
  /// Weights must stay non-negative (every layer after the first in an ICNN).
  bool constrained = false;

  bool operator==(const Layer&) const = default;
};

class Network {
 public:
  Network(NetworkConfig config, std::vector<Layer> layers);

  const NetworkConfig& config() const noexcept { return config_; }
  Variant variant() const noexcept { return config_.variant; }
  double alpha() const noexcept { return config_.alpha; }

  std::size_t num_layers() const noexcept { return layers_.size(); }
  const Layer& layer(std::size_t l) const { return layers_.at(l); }
  Layer& layer(std::size_t l) { return layers_.at(l); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  /// Weights used in the forward pass (exp of the stored log-weights for
  /// constrained exp-reparam layers, the stored weights otherwise).
  Matrix effective_weight(std::size_t l) const;

  bool operator==(const Network&) const = default;

 private:
  NetworkConfig config_;
  std::vector<Layer> layers_;
};

/// Pre-activations of every layer for one batch (batch x width each).
struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> preacts;

  const Matrix& output() const { return preacts.back(); }
};

struct LayerGradients {
  Matrix weight;
  Vector bias;
  std::optional<Matrix> skip;
};

struct Gradients {
  std::vector<LayerGradients> layers;
  /// dL/dx for every row of the batch.
  Matrix input;
  /// dL/ds_l for every layer (batch x width), the back-propagated deltas.
  std::vector<Matrix> deltas;
};

/// Initialisation parameters used for each layer (first layer LeCun).
std::vector<InitParams> layer_init_params(const NetworkConfig& config);

/// Samples a network. Layer 1 and skip matrices use LeCun. Later layers follow
/// config.init: convex_init draws log-normal weights (or Gaussian log-weights
/// for exp-reparam) with bias mean mu_b plus Normal(0, var_b) noise;
/// default_he/lecun draw Gaussian weights, clamped at zero for the projection
/// variant and used directly as log-weights for exp-reparam.
Network build_network(const NetworkConfig& config, Rng& rng);

/// s_1 = W_1 x + b_1, s_l = W_l phi(s_{l-1}) + [D_l x] + b_l.
ForwardTrace forward(const Network& net, const Matrix& batch);

/// Back-propagates grad_out = dL/ds_L through the trace. Weight gradients of
/// constrained exp-reparam layers are taken w.r.t. the stored log-weights.
Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& grad_out);

/// Clamps negative constrained weights to zero; returns how many were clamped.
/// Only valid for the projection variant.
std::size_t project_nonneg(Network& net);

struct ConvexityReport {
  std::size_t checks = 0;
  std::size_t violations = 0;
  /// Largest f(mix) - mix(f) - tolerance over all checks (<= 0 when convex).
  double worst_violation = 0.0;
};

/// Samples `n_trials` random chords (x, y ~ N(0, I)) and for each output checks
/// f(l x + (1-l) y) <= l f(x) + (1-l) f(y) + 1e-9 * scale on a grid of
/// `n_lambdas` interior mixing weights.
ConvexityReport convexity_check(const Network& net, Rng& rng, std::size_t n_trials,
                                std::size_t n_lambdas);

}  // namespace convexinit
