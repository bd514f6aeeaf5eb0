#include "convexinit/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "convexinit/checkpoint.hpp"
#include "convexinit/errors.hpp"
#include "convexinit/idx.hpp"

namespace convexinit {

Normalization parse_normalization(std::string_view s) {
  if (s == "none") return Normalization::none;
  if (s == "global") return Normalization::global;
  if (s == "per_feature" || s == "feature") return Normalization::per_feature;
  throw ParameterError("unknown normalization '" + std::string(s) + "'");
}

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::none:
      return "none";
    case Normalization::global:
      return "global";
    case Normalization::per_feature:
      return "per_feature";
  }
  return "?";
}

void normalize(Dataset& data, Normalization mode) {
  Matrix& x = data.inputs;
  if (x.empty() || mode == Normalization::none) return;
  if (mode == Normalization::global) {
    CompensatedSum sum;
    for (double v : x.values()) sum.add(v);
    const double mean = sum.value() / double(x.size());
    CompensatedSum dev;
    for (double v : x.values()) dev.add((v - mean) * (v - mean));
    const double sd = std::sqrt(dev.value() / double(x.size()));
    const double inv = sd > 0.0 ? 1.0 / sd : 0.0;
    for (double& v : x.values()) v = (v - mean) * inv;
    return;
  }
  for (std::size_t c = 0; c < x.cols(); ++c) {
    CompensatedSum sum;
    for (std::size_t r = 0; r < x.rows(); ++r) sum.add(x(r, c));
    const double mean = sum.value() / double(x.rows());
    CompensatedSum dev;
    for (std::size_t r = 0; r < x.rows(); ++r) dev.add((x(r, c) - mean) * (x(r, c) - mean));
    const double sd = std::sqrt(dev.value() / double(x.rows()));
    for (std::size_t r = 0; r < x.rows(); ++r) x(r, c) = sd > 0.0 ? (x(r, c) - mean) / sd : 0.0;
  }
}

void truncate(Dataset& data, std::size_t n) {
  if (n == 0 || n >= data.size()) return;
  std::vector<double> head(data.inputs.data(), data.inputs.data() + n * data.inputs.cols());
  data.inputs = Matrix(n, data.inputs.cols(), std::move(head));
  data.labels.resize(n);
}

Dataset synthetic_dataset(Rng& rng, std::size_t n_classes, std::size_t dim,
                          std::size_t n_per_class, double separation) {
  if (n_classes == 0 || dim == 0 || n_per_class == 0 || !(separation >= 0.0)) {
    throw ParameterError("synthetic_dataset: sizes must be positive and separation >= 0");
  }
  Rng noise_rng = rng.fork(1);
  // Class means at pairwise distance `separation`: scaled axis vectors when
  // they fit, otherwise a regular polygon in the first two coordinates whose
  // neighbouring vertices are `separation` apart.
  Matrix means(n_classes, dim);
  if (n_classes <= dim) {
    for (std::size_t c = 0; c < n_classes; ++c) means(c, c) = separation / std::sqrt(2.0);
  } else if (dim == 1) {
    for (std::size_t c = 0; c < n_classes; ++c) means(c, 0) = separation * double(c);
  } else {
    const double step = 2.0 * std::numbers::pi / double(n_classes);
    const double radius = separation / (2.0 * std::sin(step / 2.0));
    for (std::size_t c = 0; c < n_classes; ++c) {
      means(c, 0) = radius * std::cos(step * double(c));
      means(c, 1) = radius * std::sin(step * double(c));
    }
  }

  Dataset data;
  data.n_classes = n_classes;
  data.inputs = Matrix(n_classes * n_per_class, dim);
  data.labels.resize(n_classes * n_per_class);
  for (std::size_t i = 0; i < n_classes * n_per_class; ++i) {
    const std::size_t c = i % n_classes;
    data.labels[i] = int(c);
    auto row = data.inputs.row(i);
    const auto m = means.row(c);
    for (std::size_t d = 0; d < dim; ++d) row[d] = m[d] + noise_rng.normal();
  }
  normalize(data, Normalization::per_feature);
  return data;
}

LossResult cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) {
    throw ShapeError("cross_entropy: " + std::to_string(logits.rows()) + " logit rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t classes = logits.cols();
  LossResult result;
  result.grad = Matrix(logits.rows(), classes);
  if (logits.rows() == 0) return result;
  const double inv_batch = 1.0 / double(logits.rows());
  CompensatedSum loss;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int label = labels[r];
    if (label < 0 || std::size_t(label) >= classes) {
      throw ParameterError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                           std::to_string(classes) + ")");
    }
    const auto z = logits.row(r);
    const auto top = std::max_element(z.begin(), z.end());
    const double max_z = *top;
    if (std::size_t(top - z.begin()) == std::size_t(label)) ++correct;
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - max_z);
    const double log_denom = std::log(denom);
    loss.add(log_denom + max_z - z[std::size_t(label)]);
    auto g = result.grad.row(r);
    for (std::size_t c = 0; c < classes; ++c) {
      g[c] = std::exp(z[c] - max_z - log_denom) * inv_batch;
    }
    g[std::size_t(label)] -= inv_batch;
  }
  result.loss = loss.value() * inv_batch;
  result.accuracy = double(correct) * inv_batch;
  return result;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               std::size_t t, const AdamConfig& config, bool apply_l2) {
  if (t < 1) throw ParameterError("adam_step: step counter starts at 1");
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient size mismatch");
  if (moments.m.size() != params.size()) {
    moments.m.assign(params.size(), 0.0);
    moments.v.assign(params.size(), 0.0);
  }
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double correction1 = 1.0 - std::pow(b1, double(t));
  const double correction2 = 1.0 - std::pow(b2, double(t));
  const double l2 = apply_l2 ? config.l2 : 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + l2 * params[i];
    moments.m[i] = b1 * moments.m[i] + (1.0 - b1) * g;
    moments.v[i] = b2 * moments.v[i] + (1.0 - b2) * g * g;
    const double m_hat = moments.m[i] / correction1;
    const double v_hat = moments.v[i] / correction2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void NetworkOptimizer::step(Network& net, const Gradients& grads) {
  if (grads.layers.size() != net.num_layers()) throw ShapeError("optimizer: gradient layer count");
  moments_.resize(net.num_layers());
  ++t_;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Layer& layer = net.layer(l);
    const LayerGradients& g = grads.layers[l];
    adam_step(layer.weight.values(), g.weight.values(), moments_[l].weight, t_, config_, true);
    adam_step(layer.bias, g.bias, moments_[l].bias, t_, config_, false);
    if (layer.skip) {
      if (!g.skip) throw ShapeError("optimizer: missing skip gradient");
      adam_step(layer.skip->values(), g.skip->values(), moments_[l].skip, t_, config_, true);
    }
  }
}

Dataset load_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Dataset data;
  if (spec.kind == DatasetSpec::Kind::idx) {
    data = load_idx(spec.images, spec.labels);
    truncate(data, spec.subset);
    normalize(data, spec.normalization);
  } else {
    Rng rng = Rng(seed).fork(2);
    data = synthetic_dataset(rng, spec.n_classes, spec.dim, spec.n_per_class, spec.separation);
    truncate(data, spec.subset);
  }
  return data;
}

TrainResult train(const TrainConfig& config, const Dataset& data) {
  if (config.batch_size == 0) throw ParameterError("train: batch size must be positive");
  if (!(config.learning_rate > 0.0) || !(config.l2 >= 0.0)) {
    throw ParameterError("train: need learning_rate > 0 and l2 >= 0");
  }
  if (config.batch_size > data.size()) {
    throw ParameterError("train: batch size " + std::to_string(config.batch_size) +
                         " exceeds dataset size " + std::to_string(data.size()));
  }
  if (data.inputs.cols() != config.network.input_width()) {
    throw ShapeError("train: dataset has " + std::to_string(data.inputs.cols()) +
                     " features, network expects " + std::to_string(config.network.input_width()));
  }
  if (data.n_classes > config.network.output_width()) {
    throw ShapeError("train: dataset has " + std::to_string(data.n_classes) +
                     " classes, network has " + std::to_string(config.network.output_width()) +
                     " outputs");
  }

  const Rng root(config.seed);
  Rng init_rng = root.fork(0);
  TrainResult result{build_network(config.network, init_rng), {}};
  Network& net = result.network;

  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  adam.l2 = config.l2;
  NetworkOptimizer optimizer(adam);

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    if (!config.record_timing) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  const std::size_t n = data.size();
  const std::size_t dim = data.inputs.cols();
  std::vector<std::size_t> order(n);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = root.fork(1).fork(epoch);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.below(i + 1)]);

    CompensatedSum epoch_loss;
    CompensatedSum epoch_acc;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t rows = std::min(config.batch_size, n - begin);
      Matrix batch(rows, dim);
      std::vector<int> labels(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto src = data.inputs.row(order[begin + r]);
        std::copy(src.begin(), src.end(), batch.row(r).begin());
        labels[r] = data.labels[order[begin + r]];
      }

      LossResult loss;
      Gradients grads;
      try {
        const ForwardTrace trace = forward(net, batch);
        loss = cross_entropy(trace.output(), labels);
        if (!std::isfinite(loss.loss)) throw NumericError("loss");
        grads = backward(net, trace, loss.grad);
      } catch (const NumericError&) {
        throw DivergenceError("training diverged at step " + std::to_string(step + 1) +
                              ": loss is not finite");
      }
      optimizer.step(net, grads);
      if (net.variant() == Variant::icnn_projection) project_nonneg(net);
      if (config.check_invariants && is_icnn(net.variant())) {
        for (std::size_t l = 1; l < net.num_layers(); ++l) {
          const Matrix w = net.effective_weight(l);
          for (double v : w.values()) {
            if (v < 0.0) throw Error("invariant violated: negative constrained weight after step " +
                                     std::to_string(step + 1));
          }
        }
      }

      ++step;
      result.curve.steps.push_back({step, epoch, loss.loss, loss.accuracy, elapsed_ms()});
      epoch_loss.add(loss.loss * double(rows));
      epoch_acc.add(loss.accuracy * double(rows));
    }
    result.curve.epochs.push_back(
        {epoch, epoch_loss.value() / double(n), epoch_acc.value() / double(n), elapsed_ms()});
  }
  return result;
}

TrainResult train(const TrainConfig& config) {
  const Dataset data = load_dataset(config.dataset, config.seed);
  return train(config, data);
}

void write_curve_csv(const LearningCurve& curve, std::ostream& out) {
  out << "step,epoch,loss,accuracy,wall_ms\n";
  for (const StepRecord& r : curve.steps) {
    out << r.step << ',' << r.epoch << ',' << format_double(r.loss) << ','
        << format_double(r.accuracy) << ',' << format_double(r.wall_ms) << '\n';
  }
}

void write_epoch_csv(const LearningCurve& curve, std::ostream& out) {
  out << "epoch,loss,accuracy,wall_ms\n";
  for (const EpochRecord& r : curve.epochs) {
    out << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.accuracy) << ','
        << format_double(r.wall_ms) << '\n';
  }
}

}  // namespace convexinit
