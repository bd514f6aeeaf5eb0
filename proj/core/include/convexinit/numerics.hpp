#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace convexinit {

/// Splittable deterministic generator (xoshiro256** seeded through SplitMix64).
///
/// Identical seeds and identical call sequences yield bit-identical streams.
/// Work that runs per layer or per repetition should use `fork` rather than
/// sharing one generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal variate (Box-Muller, second value of each pair cached).
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Child stream identified by `stream`. Depends only on this generator's
  /// seed and `stream`, never on how many values were already drawn.
  Rng fork(std::uint64_t stream) const noexcept;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Parameters (mu~, var~) of the Gaussian whose exponential has a given mean and variance.
struct LogNormalParams {
  double mu_tilde = 0.0;
  double var_tilde = 0.0;
};

/// i.i.d. Normal(mean, var) entries. Throws ParameterError for var < 0.
Matrix gaussian_sample(Rng& rng, double mean, double var, std::size_t rows, std::size_t cols);

/// mu~ = ln(mu^2) - ln(var + mu^2)/2, var~ = ln(var + mu^2) - ln(mu^2).
/// Throws ParameterError unless mu_w > 0 and var_w >= 0.
LogNormalParams lognormal_params(double mu_w, double var_w);

/// Analytic (mean, variance) of exp(Normal(mu~, var~)).
std::array<double, 2> lognormal_moments(const LogNormalParams& p) noexcept;

/// exp of i.i.d. Normal(mu~, var~) entries; strictly positive.
Matrix lognormal_sample(Rng& rng, double mu_tilde, double var_tilde, std::size_t rows,
                        std::size_t cols);

/// W x
Vector matvec(const Matrix& w, std::span<const double> x);
/// W x + b
Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b);
/// A B
Matrix matmul(const Matrix& a, const Matrix& b);
/// A^T B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// A B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// out += A B^T
void add_matmul_nt(Matrix& out, const Matrix& a, const Matrix& b);
/// Batched affine map: each row x of `batch` becomes W x + b, i.e. batch W^T + 1 b^T.
Matrix affine(const Matrix& w, const Matrix& batch, std::span<const double> b);

/// Column sums of a matrix.
Vector column_sums(const Matrix& m);

/// Throws NumericError naming `what` if any entry is NaN or infinite.
void ensure_finite(std::span<const double> values, const char* what);

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  void merge(const CompensatedSum& other) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace convexinit
