#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "convexinit/network.hpp"
#include "convexinit/numerics.hpp"

namespace convexinit {

/// Flattened inputs (one sample per row) with integer class labels.
struct Dataset {
  Matrix inputs;
  std::vector<int> labels;
  std::size_t n_classes = 0;

  std::size_t size() const { return labels.size(); }
};

enum class Normalization { none, global, per_feature };

Normalization parse_normalization(std::string_view s);
std::string_view to_string(Normalization n);

/// Rescales inputs in place. `global` shifts and scales all entries by one mean
/// and standard deviation; `per_feature` standardises every column (constant
/// columns become 0).
void normalize(Dataset& data, Normalization mode);

/// Keeps the first `n` samples (no-op if n == 0 or n >= size).
void truncate(Dataset& data, std::size_t n);

/// Gaussian blobs with unit-variance noise. Class c has mean
/// (separation / sqrt 2) e_c when n_classes <= dim, so all means are
/// `separation` apart; otherwise the means form a regular polygon in the first
/// two coordinates with neighbouring vertices `separation` apart.
/// Features are standardised to zero mean and unit variance afterwards.
Dataset synthetic_dataset(Rng& rng, std::size_t n_classes, std::size_t dim,
                          std::size_t n_per_class, double separation);

struct LossResult {
  double loss = 0.0;
  /// dLoss/dlogits = (softmax - onehot) / batch.
  Matrix grad;
  /// Fraction of rows whose arg-max logit equals the label.
  double accuracy = 0.0;
};

/// Mean softmax cross-entropy with log-sum-exp stabilisation.
LossResult cross_entropy(const Matrix& logits, std::span<const int> labels);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// L2 penalty coefficient; adds l2 * w to the gradient.
  double l2 = 0.0;
};

struct AdamMoments {
  Vector m;
  Vector v;
};

/// One bias-corrected Adam update at step t >= 1. Moments are sized lazily.
void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               std::size_t t, const AdamConfig& config, bool apply_l2);

/// Adam over every tensor of a network. L2 applies to weights and skip
/// matrices, never to biases.
class NetworkOptimizer {
 public:
  explicit NetworkOptimizer(AdamConfig config) : config_(config) {}

  void step(Network& net, const Gradients& grads);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  struct LayerMoments {
    AdamMoments weight;
    AdamMoments bias;
    AdamMoments skip;
  };
  AdamConfig config_;
  std::vector<LayerMoments> moments_;
  std::size_t t_ = 0;
};

struct DatasetSpec {
  enum class Kind { idx, synthetic };
  Kind kind = Kind::synthetic;
  std::filesystem::path images;
  std::filesystem::path labels;
  /// Use only the first `subset` samples (0 keeps everything).
  std::size_t subset = 0;
  Normalization normalization = Normalization::global;
  std::size_t n_classes = 3;
  std::size_t dim = 2;
  std::size_t n_per_class = 100;
  double separation = 4.0;
};

struct TrainConfig {
  NetworkConfig network;
  double learning_rate = 1e-3;
  double l2 = 0.0;
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  /// Fill wall_ms in the learning curve; off keeps curves byte-reproducible.
  bool record_timing = false;
  /// Assert non-negativity of constrained weights after every step.
  bool check_invariants = false;
};

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double wall_ms = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double wall_ms = 0.0;
};

struct LearningCurve {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  Network network;
  LearningCurve curve;
};

/// Loads (or generates) the dataset described by `spec`.
Dataset load_dataset(const DatasetSpec& spec, std::uint64_t seed);

/// Mini-batch training: forward, cross-entropy, backward, Adam, then
/// projection for the projection variant. Shuffles with a per-epoch stream
/// forked from the seed. Throws DivergenceError once the loss is not finite.
TrainResult train(const TrainConfig& config, const Dataset& data);
TrainResult train(const TrainConfig& config);

/// Header: step,epoch,loss,accuracy,wall_ms
void write_curve_csv(const LearningCurve& curve, std::ostream& out);
/// Header: epoch,loss,accuracy,wall_ms
void write_epoch_csv(const LearningCurve& curve, std::ostream& out);

}  // namespace convexinit
