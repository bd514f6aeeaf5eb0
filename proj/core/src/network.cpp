#include "convexinit/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "convexinit/errors.hpp"
#include "convexinit/kernels.hpp"

namespace convexinit {

namespace {

Matrix activate(const Matrix& s, double alpha) {
  Matrix out = s;
  for (double& v : out.values()) v = lrelu(v, alpha);
  return out;
}

Matrix exp_entries(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.values()) v = std::exp(v);
  ensure_finite(out.values(), "exp-reparameterised weights");
  return out;
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

void NetworkConfig::validate() const {
  if (layer_widths.size() < 3) {
    throw ParameterError("network needs an input, at least one hidden layer and an output");
  }
  for (std::size_t w : layer_widths) {
    if (w == 0) throw ParameterError("layer widths must be positive");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ParameterError("leaky-relu slope must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (skip_connections && !is_icnn(variant)) {
    throw ParameterError("skip connections are only defined for ICNN variants");
  }
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::nonconvex:
      return "nonconvex";
    case Variant::icnn_projection:
      return "icnn_projection";
    case Variant::icnn_exp_reparam:
      return "icnn_exp_reparam";
  }
  return "?";
}

std::string_view to_string(InitKind k) {
  switch (k) {
    case InitKind::default_he:
      return "default_he";
    case InitKind::convex_init:
      return "convex_init";
    case InitKind::lecun:
      return "lecun";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "nonconvex") return Variant::nonconvex;
  if (s == "icnn_projection" || s == "projection") return Variant::icnn_projection;
  if (s == "icnn_exp_reparam" || s == "exp_reparam") return Variant::icnn_exp_reparam;
  throw ParameterError("unknown network variant '" + std::string(s) + "'");
}

InitKind parse_init_kind(std::string_view s) {
  if (s == "default_he" || s == "he") return InitKind::default_he;
  if (s == "convex_init" || s == "convex") return InitKind::convex_init;
  if (s == "lecun") return InitKind::lecun;
  throw ParameterError("unknown init scheme '" + std::string(s) + "'");
}

Network::Network(NetworkConfig config, std::vector<Layer> layers)
    : config_(std::move(config)), layers_(std::move(layers)) {
  config_.validate();
  if (layers_.size() != config_.num_layers()) {
    throw ShapeError("network config has " + std::to_string(config_.num_layers()) +
                     " layers, got " + std::to_string(layers_.size()));
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const std::size_t in = config_.layer_widths[l];
    const std::size_t out = config_.layer_widths[l + 1];
    if (layer.weight.rows() != out || layer.weight.cols() != in || layer.bias.size() != out) {
      throw ShapeError("layer " + std::to_string(l) + " has weight " + shape(layer.weight) +
                       ", expected " + std::to_string(out) + "x" + std::to_string(in));
    }
    if (layer.skip && (layer.skip->rows() != out || layer.skip->cols() != config_.input_width())) {
      throw ShapeError("layer " + std::to_string(l) + " has skip " + shape(*layer.skip));
    }
  }
}

Matrix Network::effective_weight(std::size_t l) const {
  const Layer& layer = layers_.at(l);
  if (layer.constrained && config_.variant == Variant::icnn_exp_reparam) {
    return exp_entries(layer.weight);
  }
  return layer.weight;
}

std::vector<InitParams> layer_init_params(const NetworkConfig& config) {
  config.validate();
  std::vector<InitParams> params;
  params.reserve(config.num_layers());
  params.push_back(baseline_init_params(BaselineScheme::lecun, config.layer_widths[0], config.alpha));
  for (std::size_t l = 1; l < config.num_layers(); ++l) {
    const std::size_t fan_in = config.layer_widths[l];
    switch (config.init.kind) {
      case InitKind::default_he:
        params.push_back(baseline_init_params(BaselineScheme::he, fan_in, config.alpha));
        break;
      case InitKind::lecun:
        params.push_back(baseline_init_params(BaselineScheme::lecun, fan_in, config.alpha));
        break;
      case InitKind::convex_init:
        params.push_back(convex_init_params(fan_in, config.alpha, config.init.rho_star,
                                            config.init.var_star, config.init.beta));
        break;
    }
  }
  return params;
}

Network build_network(const NetworkConfig& config, Rng& rng) {
  const std::vector<InitParams> params = layer_init_params(config);
  const bool icnn = is_icnn(config.variant);
  std::vector<Layer> layers;
  layers.reserve(params.size());

  for (std::size_t l = 0; l < params.size(); ++l) {
    Rng layer_rng = rng.fork(l);
    const InitParams& p = params[l];
    const std::size_t in = config.layer_widths[l];
    const std::size_t out = config.layer_widths[l + 1];
    Layer layer;
    layer.constrained = icnn && l > 0;

    if (l > 0 && config.init.kind == InitKind::convex_init) {
      if (layer.constrained && !p.lognormal) {
        throw InfeasibleError("log-normal weights need mu_w > 0; rho* = " +
                              std::to_string(p.rho_star) + " gives mu_w = 0");
      }
      if (config.variant == Variant::icnn_exp_reparam) {
        layer.weight = gaussian_sample(layer_rng, p.lognormal->mu_tilde, p.lognormal->var_tilde, out, in);
      } else if (p.lognormal) {
        layer.weight = lognormal_sample(layer_rng, p.lognormal->mu_tilde, p.lognormal->var_tilde, out, in);
      } else {
        layer.weight = gaussian_sample(layer_rng, p.mu_w, p.var_w, out, in);
      }
      Matrix bias = gaussian_sample(layer_rng, p.mu_b, p.var_b, 1, out);
      layer.bias.assign(bias.values().begin(), bias.values().end());
    } else {
      layer.weight = gaussian_sample(layer_rng, 0.0, p.var_w, out, in);
      if (layer.constrained && config.variant == Variant::icnn_projection) {
        for (double& w : layer.weight.values()) w = std::max(w, 0.0);
      }
      layer.bias.assign(out, 0.0);
    }

    if (config.skip_connections && l > 0) {
      layer.skip = gaussian_sample(layer_rng, 0.0, 1.0 / double(config.input_width()), out,
                                   config.input_width());
    }
    layers.push_back(std::move(layer));
  }
  return Network(config, std::move(layers));
}

ForwardTrace forward(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.config().input_width()) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                     " columns, network expects " + std::to_string(net.config().input_width()));
  }
  ForwardTrace trace;
  trace.input = batch;
  trace.preacts.reserve(net.num_layers());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Layer& layer = net.layer(l);
    const Matrix weight = net.effective_weight(l);
    Matrix s = l == 0 ? affine(weight, batch, layer.bias)
                      : affine(weight, activate(trace.preacts.back(), net.alpha()), layer.bias);
    if (layer.skip) add_matmul_nt(s, batch, *layer.skip);
    trace.preacts.push_back(std::move(s));
  }
  return trace;
}

Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& grad_out) {
  const std::size_t num_layers = net.num_layers();
  if (trace.preacts.size() != num_layers || trace.input.cols() != net.config().input_width()) {
    throw ShapeError("backward: trace does not belong to this network");
  }
  for (std::size_t l = 0; l < num_layers; ++l) {
    if (trace.preacts[l].rows() != trace.input.rows() ||
        trace.preacts[l].cols() != net.config().layer_widths[l + 1]) {
      throw ShapeError("backward: stale trace at layer " + std::to_string(l));
    }
  }
  if (grad_out.rows() != trace.input.rows() || grad_out.cols() != net.config().output_width()) {
    throw ShapeError("backward: output gradient is " + shape(grad_out) + ", expected " +
                     shape(trace.output()));
  }

  const double alpha = net.alpha();
  Gradients grads;
  grads.layers.resize(num_layers);
  grads.input = Matrix(trace.input.rows(), trace.input.cols());
  grads.deltas.resize(num_layers);

  Matrix delta = grad_out;
  for (std::size_t l = num_layers; l-- > 0;) {
    const Layer& layer = net.layer(l);
    LayerGradients& g = grads.layers[l];
    const Matrix weight = net.effective_weight(l);

    g.weight = l == 0 ? matmul_tn(delta, trace.input)
                      : matmul_tn(delta, activate(trace.preacts[l - 1], alpha));
    if (layer.constrained && net.variant() == Variant::icnn_exp_reparam) {
      auto gw = g.weight.values();
      auto w = weight.values();
      for (std::size_t i = 0; i < gw.size(); ++i) gw[i] *= w[i];
    }
    g.bias = column_sums(delta);
    grads.deltas[l] = delta;
    if (layer.skip) {
      g.skip = matmul_tn(delta, trace.input);
      Matrix through_skip = matmul(delta, *layer.skip);
      auto acc = grads.input.values();
      auto add = through_skip.values();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add[i];
    }

    Matrix upstream = matmul(delta, weight);
    if (l == 0) {
      auto acc = grads.input.values();
      auto add = upstream.values();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add[i];
    } else {
      const auto s = trace.preacts[l - 1].values();
      auto u = upstream.values();
      for (std::size_t i = 0; i < u.size(); ++i) u[i] *= lrelu_grad(s[i], alpha);
      delta = std::move(upstream);
    }
  }
  return grads;
}

std::size_t project_nonneg(Network& net) {
  if (net.variant() != Variant::icnn_projection) {
    throw VariantError("project_nonneg is only defined for the projection variant, not " +
                       std::string(to_string(net.variant())));
  }
  std::size_t clamped = 0;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Layer& layer = net.layer(l);
    if (!layer.constrained) continue;
    for (double& w : layer.weight.values()) {
      if (w < 0.0) {
        w = 0.0;
        ++clamped;
      }
    }
  }
  return clamped;
}

ConvexityReport convexity_check(const Network& net, Rng& rng, std::size_t n_trials,
                                std::size_t n_lambdas) {
  ConvexityReport report;
  if (n_trials == 0 || n_lambdas == 0) return report;
  const std::size_t dim = net.config().input_width();
  const std::size_t per_trial = n_lambdas + 2;
  Matrix batch(n_trials * per_trial, dim);
  for (std::size_t t = 0; t < n_trials; ++t) {
    auto x = batch.row(t * per_trial);
    auto y = batch.row(t * per_trial + 1);
    for (std::size_t i = 0; i < dim; ++i) {
      x[i] = rng.normal();
      y[i] = rng.normal();
    }
    for (std::size_t k = 1; k <= n_lambdas; ++k) {
      const double lambda = double(k) / double(n_lambdas + 1);
      auto mix = batch.row(t * per_trial + 1 + k);
      for (std::size_t i = 0; i < dim; ++i) mix[i] = lambda * x[i] + (1.0 - lambda) * y[i];
    }
  }

  const Matrix out = forward(net, batch).output();
  report.worst_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n_trials; ++t) {
    const auto fx = out.row(t * per_trial);
    const auto fy = out.row(t * per_trial + 1);
    for (std::size_t k = 1; k <= n_lambdas; ++k) {
      const double lambda = double(k) / double(n_lambdas + 1);
      const auto fm = out.row(t * per_trial + 1 + k);
      for (std::size_t o = 0; o < out.cols(); ++o) {
        const double chord = lambda * fx[o] + (1.0 - lambda) * fy[o];
        const double scale =
            std::max({1.0, std::abs(fx[o]), std::abs(fy[o]), std::abs(fm[o])});
        const double excess = fm[o] - chord - 1e-9 * scale;
        ++report.checks;
        if (excess > 0.0) ++report.violations;
        report.worst_violation = std::max(report.worst_violation, excess);
      }
    }
  }
  return report;
}

}  // namespace convexinit
