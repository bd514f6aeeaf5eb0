#include "convexinit/numerics.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "convexinit/errors.hpp"

namespace convexinit {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) { return ConstMap(m.data(), Eigen::Index(m.rows()), Eigen::Index(m.cols())); }
MutMap view(Matrix& m) { return MutMap(m.data(), Eigen::Index(m.rows()), Eigen::Index(m.cols())); }

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept {
  // 53 random bits, shifted by half an ulp so 0 is never returned.
  return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  // Lemire's nearly-divisionless method.
  __extension__ using u128 = unsigned __int128;
  u128 m = static_cast<u128>(next_u64()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<u128>(next_u64()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

Rng Rng::fork(std::uint64_t stream) const noexcept {
  std::uint64_t x = seed_ ^ 0xd1b54a32d192ed03ULL;
  std::uint64_t mixed = splitmix64(x);
  x = mixed + stream * 0x9e3779b97f4a7c15ULL;
  return Rng(splitmix64(x));
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
                     std::to_string(data_.size()) + " values");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix gaussian_sample(Rng& rng, double mean, double var, std::size_t rows, std::size_t cols) {
  if (!(var >= 0.0) || !std::isfinite(var) || !std::isfinite(mean)) {
    throw ParameterError("gaussian_sample: variance must be finite and >= 0, got " +
                         std::to_string(var));
  }
  Matrix out(rows, cols, mean);
  if (var == 0.0) return out;
  const double sd = std::sqrt(var);
  for (double& v : out.values()) v = mean + sd * rng.normal();
  return out;
}

LogNormalParams lognormal_params(double mu_w, double var_w) {
  if (!(mu_w > 0.0) || !std::isfinite(mu_w)) {
    throw ParameterError("lognormal_params: mean must be > 0, got " + std::to_string(mu_w));
  }
  if (!(var_w >= 0.0) || !std::isfinite(var_w)) {
    throw ParameterError("lognormal_params: variance must be >= 0, got " + std::to_string(var_w));
  }
  const double log_mean_sq = 2.0 * std::log(mu_w);
  const double log_second = std::log(var_w + mu_w * mu_w);
  return {log_mean_sq - 0.5 * log_second, log_second - log_mean_sq};
}

std::array<double, 2> lognormal_moments(const LogNormalParams& p) noexcept {
  const double mean = std::exp(p.mu_tilde + 0.5 * p.var_tilde);
  return {mean, std::expm1(p.var_tilde) * mean * mean};
}

Matrix lognormal_sample(Rng& rng, double mu_tilde, double var_tilde, std::size_t rows,
                        std::size_t cols) {
  if (!(var_tilde >= 0.0) || !std::isfinite(var_tilde)) {
    throw ParameterError("lognormal_sample: variance must be finite and >= 0, got " +
                         std::to_string(var_tilde));
  }
  Matrix out = gaussian_sample(rng, mu_tilde, var_tilde, rows, cols);
  for (double& v : out.values()) v = std::exp(v);
  ensure_finite(out.values(), "lognormal_sample");
  return out;
}

Vector matvec(const Matrix& w, std::span<const double> x) {
  if (w.cols() != x.size()) {
    throw ShapeError("matvec: " + dims(w) + " times vector of length " + std::to_string(x.size()));
  }
  Vector out(w.rows());
  Eigen::Map<Eigen::VectorXd>(out.data(), Eigen::Index(out.size())) =
      view(w) * Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(x.size()));
  ensure_finite(out, "matvec");
  return out;
}

Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b) {
  if (b.size() != w.rows()) {
    throw ShapeError("affine: bias of length " + std::to_string(b.size()) + " for " + dims(w));
  }
  Vector out = matvec(w, x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  ensure_finite(out, "affine");
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: " + dims(a) + " times " + dims(b));
  Matrix out(a.rows(), b.cols());
  view(out).noalias() = view(a) * view(b);
  ensure_finite(out.values(), "matmul");
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: " + dims(a) + "^T times " + dims(b));
  Matrix out(a.cols(), b.cols());
  view(out).noalias() = view(a).transpose() * view(b);
  ensure_finite(out.values(), "matmul_tn");
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: " + dims(a) + " times " + dims(b) + "^T");
  Matrix out(a.rows(), b.rows());
  view(out).noalias() = view(a) * view(b).transpose();
  ensure_finite(out.values(), "matmul_nt");
  return out;
}

void add_matmul_nt(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows()) {
    throw ShapeError("add_matmul_nt: " + dims(out) + " += " + dims(a) + " times " + dims(b) + "^T");
  }
  view(out).noalias() += view(a) * view(b).transpose();
  ensure_finite(out.values(), "add_matmul_nt");
}

Matrix affine(const Matrix& w, const Matrix& batch, std::span<const double> b) {
  if (b.size() != w.rows()) {
    throw ShapeError("affine: bias of length " + std::to_string(b.size()) + " for " + dims(w));
  }
  Matrix out = matmul_nt(batch, w);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
  ensure_finite(out.values(), "affine");
  return out;
}

Vector column_sums(const Matrix& m) {
  Vector out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c];
  }
  return out;
}

void ensure_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value produced");
  }
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

void CompensatedSum::merge(const CompensatedSum& other) noexcept {
  add(other.sum_);
  add(other.compensation_);
}

}  // namespace convexinit
