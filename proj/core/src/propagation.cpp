#include "convexinit/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "convexinit/errors.hpp"
#include "convexinit/kernels.hpp"

namespace convexinit {

std::size_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

ForwardStats analytic_forward_stats(std::span<const InitParams> layers, const MomentState& input) {
  if (!(input.var >= 0.0) || !(std::abs(input.rho) <= 1.0)) {
    throw ParameterError("analytic_forward_stats: need var >= 0 and |rho| <= 1");
  }
  ForwardStats result;
  MomentState state = input;
  for (const InitParams& p : layers) {
    result.non_gaussian.push_back(std::abs(state.mean) > 0.1 * std::sqrt(state.var));

    const double n = double(p.fan_in);
    const double e_phi = lrelu_mean(state.var, p.alpha);
    const double e_phi_sq = lrelu_sqmean(state.var, p.alpha);
    const double var_phi = e_phi_sq - e_phi * e_phi;
    const double cov_phi = lrelu_kernel(state.rho, state.var, p.alpha) - e_phi * e_phi;

    MomentState next;
    next.mean = p.mu_b + n * p.mu_w * e_phi;
    const double cov = p.mu_w * p.mu_w * n * (var_phi + (n - 1.0) * cov_phi);
    next.var = p.var_b + p.var_w * n * e_phi_sq + cov;
    next.rho = next.var > 0.0 ? std::clamp(cov / next.var, -1.0, 1.0) : 0.0;
    result.states.push_back(next);
    state = next;
  }
  return result;
}

ForwardStats analytic_network_stats(const NetworkConfig& config, double input_sqmean) {
  const std::vector<InitParams> params = layer_init_params(config);
  // First layer acts on the raw (i.i.d.) inputs, so its features are uncorrelated.
  const InitParams& first = params.front();
  MomentState s1;
  s1.mean = first.mu_b;
  s1.var = first.var_b + double(first.fan_in) * first.var_w * input_sqmean;
  s1.rho = 0.0;
  ForwardStats rest = analytic_forward_stats(std::span(params).subspan(1), s1);
  rest.states.insert(rest.states.begin(), s1);
  rest.non_gaussian.insert(rest.non_gaussian.begin(), false);
  return rest;
}

std::vector<DeltaMomentState> analytic_backward_stats(const NetworkConfig& config,
                                                      std::span<const InitParams> params,
                                                      std::span<const MomentState> forward,
                                                      const DeltaMomentState& output) {
  const std::size_t num_layers = config.num_layers();
  if (params.size() != num_layers || forward.size() != num_layers) {
    throw ShapeError("analytic_backward_stats: need one parameter set and one forward state per layer");
  }
  const double alpha = config.alpha;
  const double e_dphi = lrelu_deriv_mean(alpha);
  const double e_dphi_sq = lrelu_deriv_kernel(1.0, alpha);

  std::vector<DeltaMomentState> deltas(num_layers);
  deltas.back() = output;
  for (std::size_t l = num_layers - 1; l > 0; --l) {
    const InitParams& p = params[l];
    const DeltaMomentState& d = deltas[l];
    const double m = double(config.layer_widths[l + 1]);
    const double total = m * d.sqmean + m * (m - 1.0) * d.mixed;
    const double mu_sq = p.mu_w * p.mu_w;

    DeltaMomentState prev;
    prev.mean = m * p.mu_w * e_dphi * d.mean;
    prev.sqmean = m * p.var_w * e_dphi_sq * d.sqmean + mu_sq * e_dphi_sq * total;
    prev.mixed = mu_sq * lrelu_deriv_kernel(forward[l - 1].rho, alpha) * total;
    deltas[l - 1] = prev;
  }
  return deltas;
}

LayerStats preactivation_stats(const Matrix& preacts, std::size_t layer, std::size_t n_bins) {
  const std::size_t rows = preacts.rows();
  const std::size_t width = preacts.cols();
  if (rows < 2 || width == 0) throw ParameterError("preactivation_stats: need at least 2 rows");

  LayerStats stats;
  stats.layer = layer;

  CompensatedSum total;
  for (double v : preacts.values()) total.add(v);
  stats.mean = total.value() / double(preacts.size());
  CompensatedSum dev;
  for (double v : preacts.values()) dev.add((v - stats.mean) * (v - stats.mean));
  stats.var = dev.value() / double(preacts.size());

  if (width > 1 && stats.var > 0.0) {
    CompensatedSum cross;
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      double sq = 0.0;
      for (double v : preacts.row(r)) {
        s += v - stats.mean;
        sq += (v - stats.mean) * (v - stats.mean);
      }
      cross.add(s * s - sq);
    }
    stats.pooled_corr =
        cross.value() / (double(rows) * double(width) * double(width - 1)) / stats.var;
  }

  // Per-feature standardisation across the batch.
  Vector feat_mean(width, 0.0);
  Vector feat_sd(width, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = preacts.row(r);
    for (std::size_t c = 0; c < width; ++c) feat_mean[c] += row[c];
  }
  for (double& m : feat_mean) m /= double(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = preacts.row(r);
    for (std::size_t c = 0; c < width; ++c) {
      const double d = row[c] - feat_mean[c];
      feat_sd[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < width; ++c) {
    feat_sd[c] = std::sqrt(feat_sd[c] / double(rows));
    // Constant up to rounding relative to the feature's magnitude.
    if (feat_sd[c] <= 1e-12 * (1.0 + std::abs(feat_mean[c]))) {
      feat_sd[c] = 0.0;
      ++stats.degenerate_features;
    }
  }

  Matrix z(rows, width);
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = preacts.row(r);
    auto out = z.row(r);
    for (std::size_t c = 0; c < width; ++c) {
      out[c] = feat_sd[c] > 0.0 ? (in[c] - feat_mean[c]) / feat_sd[c] : 0.0;
    }
  }

  if (width > 1) {
    CompensatedSum off_diag;
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      double sq = 0.0;
      for (double v : z.row(r)) {
        s += v;
        sq += v * v;
      }
      off_diag.add(s * s - sq);
    }
    stats.mean_corr = off_diag.value() / (double(rows) * double(width) * double(width - 1));
  }

  if (width <= kFullCorrelationMaxWidth) {
    Matrix corr = matmul_tn(z, z);
    for (double& v : corr.values()) v /= double(rows);
    stats.correlation = std::move(corr);
  }

  const double sd = std::sqrt(stats.var);
  stats.histogram.lo = stats.mean - 3.0 * sd;
  stats.histogram.hi = stats.mean + 3.0 * sd;
  stats.histogram.counts.assign(n_bins + 2, 0);
  const double span = stats.histogram.hi - stats.histogram.lo;
  for (double v : preacts.values()) {
    std::size_t bin;
    if (!(span > 0.0)) {
      bin = 1 + n_bins / 2;
    } else if (v < stats.histogram.lo) {
      bin = 0;
    } else if (v >= stats.histogram.hi) {
      bin = n_bins + 1;
    } else {
      bin = 1 + std::min(n_bins - 1, std::size_t((v - stats.histogram.lo) / span * double(n_bins)));
    }
    ++stats.histogram.counts[bin];
  }
  return stats;
}

std::vector<LayerStats> empirical_layer_stats(const Network& net, const Matrix& batch,
                                              std::size_t n_bins) {
  if (batch.rows() < 100) {
    throw ParameterError("empirical_layer_stats: need at least 100 rows, got " +
                         std::to_string(batch.rows()));
  }
  const ForwardTrace trace = forward(net, batch);
  std::vector<LayerStats> stats;
  stats.reserve(trace.preacts.size());
  for (std::size_t l = 0; l < trace.preacts.size(); ++l) {
    stats.push_back(preactivation_stats(trace.preacts[l], l, n_bins));
  }
  return stats;
}

DeltaMomentState delta_moments(const Matrix& deltas) {
  DeltaMomentState m;
  if (deltas.empty()) return m;
  CompensatedSum sum;
  CompensatedSum sum_sq;
  CompensatedSum mixed;
  const std::size_t width = deltas.cols();
  for (std::size_t r = 0; r < deltas.rows(); ++r) {
    double s = 0.0;
    double sq = 0.0;
    for (double v : deltas.row(r)) {
      s += v;
      sq += v * v;
    }
    sum.add(s);
    sum_sq.add(sq);
    mixed.add(s * s - sq);
  }
  const double n = double(deltas.size());
  m.mean = sum.value() / n;
  m.sqmean = sum_sq.value() / n;
  if (width > 1) {
    m.mixed = mixed.value() / (double(deltas.rows()) * double(width) * double(width - 1));
  }
  return m;
}

std::vector<DeltaMomentState> empirical_backward_stats(const Network& net, const Matrix& batch,
                                                       const Matrix& output_deltas) {
  const ForwardTrace trace = forward(net, batch);
  const Gradients grads = backward(net, trace, output_deltas);
  std::vector<DeltaMomentState> result;
  result.reserve(grads.deltas.size());
  for (const Matrix& d : grads.deltas) result.push_back(delta_moments(d));
  return result;
}

std::vector<DeltaMomentState> empirical_backward_stats(const Network& net, const Matrix& batch,
                                                       Rng& rng) {
  const Matrix deltas = gaussian_sample(rng, 0.0, 1.0, batch.rows(), net.config().output_width());
  return empirical_backward_stats(net, batch, deltas);
}

Matrix correlated_gaussian_batch(Rng& rng, std::size_t rows, std::size_t width,
                                 const MomentState& state) {
  if (!(state.rho >= 0.0 && state.rho <= 1.0) || !(state.var >= 0.0)) {
    throw ParameterError("correlated_gaussian_batch: need rho in [0, 1] and var >= 0");
  }
  const double sd = std::sqrt(state.var);
  const double shared = std::sqrt(state.rho);
  const double own = std::sqrt(1.0 - state.rho);
  Matrix out(rows, width);
  for (std::size_t r = 0; r < rows; ++r) {
    const double common = rng.normal();
    for (double& v : out.row(r)) v = state.mean + sd * (shared * common + own * rng.normal());
  }
  return out;
}

LayerStats empirical_one_step(Rng& rng, const MomentState& input, const InitParams& params,
                              std::size_t out_width, std::size_t batch, std::size_t n_bins) {
  Rng data_rng = rng.fork(0);
  Rng weight_rng = rng.fork(1);
  Matrix act = correlated_gaussian_batch(data_rng, batch, params.fan_in, input);
  for (double& v : act.values()) v = lrelu(v, params.alpha);

  const Matrix weight =
      params.lognormal ? lognormal_sample(weight_rng, params.lognormal->mu_tilde,
                                          params.lognormal->var_tilde, out_width, params.fan_in)
                       : gaussian_sample(weight_rng, params.mu_w, params.var_w, out_width,
                                         params.fan_in);
  const Matrix bias = gaussian_sample(weight_rng, params.mu_b, params.var_b, 1, out_width);
  return preactivation_stats(affine(weight, act, bias.values()), 1, n_bins);
}

}  // namespace convexinit
