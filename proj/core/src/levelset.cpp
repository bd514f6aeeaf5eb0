#include "convexinit/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "convexinit/errors.hpp"
#include "convexinit/numerics.hpp"

namespace convexinit {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + " is not finite");
}

Vector ray_point(std::span<const double> center, std::span<const double> direction, double t) {
  Vector x(center.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = center[i] + t * direction[i];
  return x;
}

// Minimum-norm element of the convex hull of `g` (Frank-Wolfe with exact
// line search).
Vector min_norm_hull(const std::vector<Vector>& g) {
  Vector p = g.front();
  for (int it = 0; it < 500; ++it) {
    std::size_t best = 0;
    double best_dot = dot(p, g[0]);
    for (std::size_t i = 1; i < g.size(); ++i) {
      const double d = dot(p, g[i]);
      if (d < best_dot) {
        best_dot = d;
        best = i;
      }
    }
    const double gap = dot(p, p) - best_dot;
    if (gap <= 1e-14 * std::max(1.0, dot(p, p))) break;
    double den = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) den += (p[k] - g[best][k]) * (p[k] - g[best][k]);
    const double gamma = std::clamp(gap / den, 0.0, 1.0);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] += gamma * (g[best][k] - p[k]);
  }
  return p;
}

}  // namespace

MinimumResult find_minimum(const GradientFunction& f, Vector x0, const MinimizeOptions& options) {
  if (x0.empty()) throw ParameterError("find_minimum: empty starting point");
  if (!(options.learning_rate > 0.0) || !(options.grad_tol > 0.0)) {
    throw ParameterError("find_minimum: learning_rate and grad_tol must be positive");
  }
  constexpr double armijo = 1e-4;
  constexpr int max_halvings = 60;
  const std::size_t n = x0.size();

  Vector x = std::move(x0);
  Vector grad(n);
  Vector trial(n);
  Vector trial_grad(n);
  double fx = f(x, grad);
  require_finite(fx, "find_minimum objective");
  double gnorm = norm(grad);

  // Backtracking along -direction; updates x on success.
  double step = options.learning_rate;
  auto line_search = [&](const Vector& direction) {
    const double dsq = dot(direction, direction);
    double t = step;
    for (int h = 0; h < max_halvings; ++h) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - t * direction[i];
      const double ft = f(trial, trial_grad);
      if (std::isfinite(ft) && ft <= fx - armijo * t * dsq) {
        std::swap(x, trial);
        std::swap(grad, trial_grad);
        fx = ft;
        step = std::min(t * 2.0, options.learning_rate * 1e6);
        return true;
      }
      t *= 0.5;
    }
    return false;
  };

  // At a kink the gradient need not be a descent direction. The fallback
  // samples gradients in a ball around x and descends along the
  // minimum-norm element of their hull, shrinking the ball when stuck.
  Rng sampler(0x9e3779b97f4a7c15ULL);
  double radius = 1e-2 * (1.0 + norm(x));
  std::vector<Vector> sample(2 * n + 1, Vector(n));
  Vector probe(n);

  MinimumResult best{x, fx, gnorm, 0};
  std::size_t iter = 0;
  for (; iter < options.max_iters && gnorm >= options.grad_tol; ++iter) {
    const Vector x_prev = x;
    bool moved = line_search(grad);
    double dist = 0.0;
    for (std::size_t i = 0; moved && i < n; ++i) dist += (x[i] - x_prev[i]) * (x[i] - x_prev[i]);
    dist = std::sqrt(dist);
    // Tiny or failed gradient steps signal a kink.
    while (dist < radius && radius > 1e-12 * (1.0 + norm(x))) {
      sample[0] = grad;
      for (std::size_t s = 1; s < sample.size(); ++s) {
        for (std::size_t i = 0; i < n; ++i) probe[i] = x[i] + radius * sampler.normal() / std::sqrt(double(n));
        const double fp = f(probe, sample[s]);
        require_finite(fp, "find_minimum objective");
      }
      const Vector d = min_norm_hull(sample);
      if (norm(d) >= options.grad_tol) {
        step = std::max(step, radius);
        if (line_search(d)) {
          moved = true;
          break;
        }
      }
      radius *= 0.1;
    }
    if (!moved) break;
    gnorm = norm(grad);
    if (fx < best.f || (fx == best.f && gnorm < best.grad_norm)) best = {x, fx, gnorm, iter + 1};
  }
  best.iterations = iter;
  return best;
}

double network_output(const Network& net, std::size_t output_index, std::span<const double> x) {
  if (output_index >= net.config().output_width()) {
    throw ParameterError("output index " + std::to_string(output_index) + " out of range");
  }
  const ForwardTrace trace = forward(net, Matrix(1, x.size(), Vector(x.begin(), x.end())));
  return trace.output()(0, output_index);
}

GradientFunction network_objective(const Network& net, std::size_t output_index) {
  if (output_index >= net.config().output_width()) {
    throw ParameterError("output index " + std::to_string(output_index) + " out of range");
  }
  return [&net, output_index](std::span<const double> x, std::span<double> grad) {
    const ForwardTrace trace = forward(net, Matrix(1, x.size(), Vector(x.begin(), x.end())));
    Matrix seed(1, net.config().output_width(), 0.0);
    seed(0, output_index) = 1.0;
    const Gradients g = backward(net, trace, seed);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = g.input(0, i);
    return trace.output()(0, output_index);
  };
}

MinimumResult find_minimum(const Network& net, std::size_t output_index, Vector x0,
                           const MinimizeOptions& options) {
  if (!is_icnn(net.variant())) {
    throw VariantError("find_minimum needs an input-convex network, got " +
                       std::string(to_string(net.variant())));
  }
  if (x0.size() != net.config().input_width()) {
    throw ShapeError("find_minimum: starting point has the wrong width");
  }
  return find_minimum(network_objective(net, output_index), std::move(x0), options);
}

double level_tolerance(double c) noexcept { return 1e-6 * (1.0 + std::abs(c)); }

double level_cross(const ScalarFunction& f, std::span<const double> center,
                   std::span<const double> direction, double c, double t_max) {
  if (center.size() != direction.size()) throw ShapeError("level_cross: size mismatch");
  if (!(t_max > 0.0)) throw ParameterError("level_cross: t_max must be positive");
  const double dnorm = norm(direction);
  if (std::abs(dnorm - 1.0) > 1e-9) throw ParameterError("level_cross: direction must be a unit vector");

  const double tol = level_tolerance(c);
  const double f0 = f(center);
  require_finite(f0, "level_cross objective");
  if (std::abs(f0 - c) <= tol) return 0.0;
  if (f0 > c) throw UnreachableLevelError("level_cross: centre already lies above the level");

  double lo = 0.0;
  double hi = t_max;
  double fhi = f(ray_point(center, direction, hi));
  require_finite(fhi, "level_cross objective");
  for (int k = 0; fhi < c; ++k) {
    if (k == 60) {
      throw UnreachableLevelError("level_cross: level not reached along the ray");
    }
    lo = hi;
    hi *= 2.0;
    fhi = f(ray_point(center, direction, hi));
    require_finite(fhi, "level_cross objective");
  }
  if (fhi == c) return hi;

  // Bisection keeps f(lo) <= c < f(hi); the answer is taken from the
  // sub-level side when possible so that chords between points stay below c.
  double best_t = hi;
  double best_r = fhi - c;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(ray_point(center, direction, mid));
    require_finite(fm, "level_cross objective");
    if (fm <= c) {
      if (c - fm <= tol) return mid;
      lo = mid;
    } else {
      if (fm - c < best_r) {
        best_r = fm - c;
        best_t = mid;
      }
      hi = mid;
    }
  }
  const double flo = f(ray_point(center, direction, lo));
  return c - flo <= tol || c - flo <= best_r ? lo : best_t;
}

LevelTrajectory level_trajectory(const Network& net, std::size_t output_index, const Vector& x_ref,
                                 const Vector& x_tgt, std::size_t n_points,
                                 const MinimizeOptions& options) {
  if (!is_icnn(net.variant())) {
    throw VariantError("level_trajectory needs an input-convex network");
  }
  const std::size_t d = net.config().input_width();
  if (x_ref.size() != d || x_tgt.size() != d) throw ShapeError("level_trajectory: wrong input width");
  if (n_points == 0) throw ParameterError("level_trajectory: n_points must be positive");
  if (x_ref == x_tgt) throw ParameterError("level_trajectory: reference and target coincide");

  LevelTrajectory traj;
  traj.output_index = output_index;
  traj.level = network_output(net, output_index, x_ref);
  require_finite(traj.level, "level_trajectory level");
  traj.tolerance = level_tolerance(traj.level);
  traj.points.push_back(x_ref);
  traj.residuals.push_back(0.0);
  if (n_points == 1) return traj;

  const MinimumResult minimum = find_minimum(net, output_index, x_ref, options);
  if (traj.level <= minimum.f + traj.tolerance) {
    throw DegenerateError("level_trajectory: level set at c = " + std::to_string(traj.level) +
                          " is empty or a single point");
  }
  const Vector& center = minimum.x;

  Vector u(d), v(d);
  for (std::size_t i = 0; i < d; ++i) {
    u[i] = x_ref[i] - center[i];
    v[i] = x_tgt[i] - center[i];
  }
  const double un = norm(u);
  const double vn = norm(v);
  if (vn == 0.0) throw DegenerateError("level_trajectory: target coincides with the minimiser");
  for (std::size_t i = 0; i < d; ++i) {
    u[i] /= un;
    v[i] /= vn;
  }
  const double omega = std::acos(std::clamp(dot(u, v), -1.0, 1.0));
  const bool antipodal = std::numbers::pi - omega < 1e-6;
  if (antipodal) {
    // Any unit vector orthogonal to u gives a valid half great circle.
    std::size_t axis = 0;
    for (std::size_t i = 1; i < d; ++i) {
      if (std::abs(u[i]) < std::abs(u[axis])) axis = i;
    }
    std::fill(v.begin(), v.end(), 0.0);
    v[axis] = 1.0;
    const double proj = u[axis];
    for (std::size_t i = 0; i < d; ++i) v[i] -= proj * u[i];
    const double n = norm(v);
    if (n == 0.0) throw DegenerateError("level_trajectory: cannot interpolate in one dimension");
    for (double& x : v) x /= n;
  }

  const ScalarFunction f = [&net, output_index](std::span<const double> x) {
    return network_output(net, output_index, x);
  };
  Vector dir(d);
  for (std::size_t k = 1; k < n_points; ++k) {
    const double s = double(k) / double(n_points - 1);
    if (antipodal) {
      for (std::size_t i = 0; i < d; ++i) {
        dir[i] = std::cos(s * std::numbers::pi) * u[i] + std::sin(s * std::numbers::pi) * v[i];
      }
    } else if (omega < 1e-9) {
      for (std::size_t i = 0; i < d; ++i) dir[i] = (1.0 - s) * u[i] + s * v[i];
    } else {
      const double a = std::sin((1.0 - s) * omega) / std::sin(omega);
      const double b = std::sin(s * omega) / std::sin(omega);
      for (std::size_t i = 0; i < d; ++i) dir[i] = a * u[i] + b * v[i];
    }
    const double dn = norm(dir);
    for (double& x : dir) x /= dn;
    const double t = level_cross(f, center, dir, traj.level, un);
    Vector x = ray_point(center, dir, t);
    traj.residuals.push_back(std::abs(f(x) - traj.level));
    traj.points.push_back(std::move(x));
  }
  return traj;
}

}  // namespace convexinit
