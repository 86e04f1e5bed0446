#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twosys/common.hpp"
#include "twosys/linalg.hpp"

namespace twosys {

/// Scalar summary with known expectation and variance under the target,
/// used by the bias metric and table reports.
struct MomentSpec {
  std::string name;
  std::function<double(const Vector&)> fn;
  double mean = 0.0;
  double variance = 1.0;  // must stay > 0
};

/// Exact reference moments, when the target has them in closed form.
struct ReferenceMoments {
  Vector mean;
  Matrix covariance;
  std::vector<MomentSpec> bias_moments;
};

/// Unnormalized log-density with gradient. Evaluation is stateless, so one
/// instance may be called from many workers at once.
class TargetDensity {
 public:
  using LogpFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;

  TargetDensity() = default;
  TargetDensity(std::string name, Eigen::Index dim, LogpFn logp, GradFn grad,
                std::optional<ReferenceMoments> moments = std::nullopt)
      : name_(std::move(name)),
        dim_(dim),
        logp_(std::move(logp)),
        grad_(std::move(grad)),
        moments_(std::move(moments)) {}

  const std::string& name() const { return name_; }
  Eigen::Index dim() const { return dim_; }
  double log_density(const Vector& x) const { return logp_(x); }
  Vector grad_log_density(const Vector& x) const { return grad_(x); }
  const std::optional<ReferenceMoments>& reference_moments() const { return moments_; }

 private:
  std::string name_;
  Eigen::Index dim_ = 0;
  LogpFn logp_;
  GradFn grad_;
  std::optional<ReferenceMoments> moments_;
};

/// Gaussian with density exp(-x' A x / 2); mean 0, covariance inverse(A).
inline TargetDensity gaussian_target(const SpdMatrix& a) {
  auto a_mat = std::make_shared<Matrix>(a.mat());
  ReferenceMoments moments;
  moments.mean = Vector::Zero(a.dim());
  moments.covariance = a_mat->inverse();
  return TargetDensity(
      "gaussian", a.dim(),
      [a_mat](const Vector& x) { return -0.5 * x.dot(*a_mat * x); },
      [a_mat](const Vector& x) -> Vector { return -(*a_mat * x); },
      std::move(moments));
}

/// Multivariate Student-t with scale matrix inverse(A) and nu > 2 degrees of
/// freedom; covariance nu/(nu-2) * inverse(A).
inline TargetDensity student_t_target(const SpdMatrix& a, double nu) {
  if (!(nu > 2.0)) throw DataError("student_t_target: need nu > 2 for finite covariance");
  auto a_mat = std::make_shared<Matrix>(a.mat());
  const double d = static_cast<double>(a.dim());
  ReferenceMoments moments;
  moments.mean = Vector::Zero(a.dim());
  moments.covariance = nu / (nu - 2.0) * a_mat->inverse();
  return TargetDensity(
      "student_t", a.dim(),
      [a_mat, d, nu](const Vector& x) {
        return -0.5 * (d + nu) * std::log1p(x.dot(*a_mat * x) / nu);
      },
      [a_mat, d, nu](const Vector& x) -> Vector {
        return -(d + nu) / (nu + x.dot(*a_mat * x)) * (*a_mat * x);
      },
      std::move(moments));
}

/// E[y_i^(2k)] for the funnel's non-scale coordinates: 2^k (2k)! / (4^k k!) *
/// exp(k^2 sigma^2 / 2). Equals the standard-normal even moment at sigma = 0.
inline double funnel_moment(int k, double sigma) {
  if (k < 1) throw DataError("funnel_moment: k must be >= 1");
  double coef = 1.0;  // 2^k (2k)! / (4^k k!) = (2k - 1)!!
  for (int j = 1; j <= k; ++j) coef *= static_cast<double>(2 * j - 1);
  return coef * std::exp(0.5 * static_cast<double>(k) * static_cast<double>(k) * sigma * sigma);
}

/// Raw moment E[y_i^n]; odd moments vanish by symmetry.
inline double funnel_raw_moment(int n, double sigma) {
  if (n < 1) throw DataError("funnel_raw_moment: n must be >= 1");
  if (n % 2 == 1) return 0.0;
  return funnel_moment(n / 2, sigma);
}

/// Funnel target on (x, y_1..y_{d-1}): x ~ N(0, sigma^2), y_i | x ~ N(0, e^x).
inline TargetDensity neals_funnel(Eigen::Index d, double sigma) {
  if (d < 2) throw DataError("neals_funnel: need dim >= 2");
  if (!(sigma > 0.0)) throw DataError("neals_funnel: sigma must be positive");
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double half_dm1 = 0.5 * static_cast<double>(d - 1);
  ReferenceMoments moments;
  moments.mean = Vector::Zero(d);
  Vector var(d);
  var[0] = sigma * sigma;
  const double y_var = funnel_moment(1, sigma);
  for (Eigen::Index i = 1; i < d; ++i) var[i] = y_var;
  moments.covariance = var.asDiagonal();
  for (Eigen::Index i = 0; i < d; ++i) {
    MomentSpec ms;
    ms.name = "x" + std::to_string(i);
    ms.fn = [i](const Vector& x) { return x[i]; };
    ms.mean = 0.0;
    ms.variance = var[i];
    moments.bias_moments.push_back(std::move(ms));
  }
  return TargetDensity(
      "funnel", d,
      [inv_s2, half_dm1](const Vector& x) {
        const double sum_sq = x.tail(x.size() - 1).squaredNorm();
        return -0.5 * x[0] * x[0] * inv_s2 - half_dm1 * x[0] -
               0.5 * std::exp(-x[0]) * sum_sq;
      },
      [inv_s2, half_dm1](const Vector& x) -> Vector {
        Vector g(x.size());
        const double e = std::exp(-x[0]);
        const double sum_sq = x.tail(x.size() - 1).squaredNorm();
        g[0] = -x[0] * inv_s2 - half_dm1 + 0.5 * e * sum_sq;
        g.tail(x.size() - 1) = -e * x.tail(x.size() - 1);
        return g;
      },
      std::move(moments));
}

struct ModeResult {
  Vector mode;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  long gradient_evals = 0;
};

struct ModeOptions {
  int max_iterations = 2000;
  double tolerance = 1e-6;  // on ||grad|| relative to max(1, ||grad(x0)||)
  int divergence_window = 25;
  double divergence_factor = 1e8;
};

/// Ascend log-density by gradient steps with a Barzilai-Borwein step length
/// and Armijo backtracking. A monotonically exploding gradient norm raises
/// ImproperPosteriorError, mirroring how improper posteriors betray
/// themselves under mode search.
inline ModeResult find_mode(const TargetDensity& target, const Vector& x0,
                            const ModeOptions& opts = {}) {
  Vector x = x0;
  Vector g = target.grad_log_density(x);
  long evals = 1;
  if (!g.allFinite()) throw DataError("find_mode: gradient not finite at start");
  const double g0_norm = g.norm();
  const double tol = opts.tolerance * std::max(1.0, g0_norm);
  double f = target.log_density(x);
  double step = 1.0 / std::max(1.0, g0_norm);
  double prev_norm = g0_norm;
  int rising = 0;

  ModeResult res;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double gnorm = g.norm();
    if (gnorm <= tol) {
      res = {x, true, it, gnorm, evals};
      return res;
    }
    if (gnorm > prev_norm) {
      if (++rising >= opts.divergence_window && gnorm > opts.divergence_factor * std::max(1.0, g0_norm)) {
        throw ImproperPosteriorError(
            "find_mode: gradient norm diverges; possibly improper posterior");
      }
    } else {
      rising = 0;
    }
    prev_norm = gnorm;

    // Backtracking ascent along +g.
    double t = step;
    Vector x_new;
    double f_new = -std::numeric_limits<double>::infinity();
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      x_new = x + t * g;
      f_new = target.log_density(x_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * t * gnorm * gnorm) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      res = {x, gnorm <= tol, it, gnorm, evals};
      return res;
    }
    Vector g_new = target.grad_log_density(x_new);
    ++evals;
    if (!g_new.allFinite()) {
      res = {x, false, it, gnorm, evals};
      return res;
    }
    // Barzilai-Borwein curvature estimate for the next trial step.
    Vector dx = x_new - x;
    Vector dg = g_new - g;
    const double denom = -dx.dot(dg);  // positive near a maximum
    step = (denom > 1e-30) ? dx.squaredNorm() / denom : 2.0 * t;
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
  }
  res = {x, g.norm() <= tol, opts.max_iterations, g.norm(), evals};
  return res;
}

/// Central-difference diagonal of H = -hessian(log density) along each axis,
/// with a per-coordinate scale-aware step when fd_step <= 0.
inline Vector hessian_diag(const TargetDensity& target, const Vector& x, double fd_step = 0.0) {
  if (!x.allFinite()) throw DataError("hessian_diag: point not finite");
  const Eigen::Index d = x.size();
  Vector h(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double step = fd_step > 0.0 ? fd_step : 1e-4 * std::max(1.0, std::abs(x[i]));
    Vector xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    h[i] = (target.grad_log_density(xm)[i] - target.grad_log_density(xp)[i]) / (2.0 * step);
  }
  return h;
}

/// Coordinate-rescaled view of a base target: log g(z) = log rho(a .* z).
/// The scales a are constant, so no Jacobian term enters unnormalized
/// densities, and the chain rule gives grad_i(z) = a_i * base_grad(a .* z)_i.
class RescaledTarget {
 public:
  RescaledTarget(TargetDensity base, Vector scales)
      : base_(std::move(base)), scales_(std::move(scales)) {
    if (scales_.size() != base_.dim()) throw DataError("RescaledTarget: scale dimension mismatch");
    if ((scales_.array() <= 0.0).any()) throw DataError("RescaledTarget: scales must be positive");
  }

  const TargetDensity& base() const { return base_; }
  const Vector& scales() const { return scales_; }

  Vector pull_back(const Vector& z) const { return scales_.cwiseProduct(z); }
  Vector push_forward(const Vector& x) const { return x.cwiseQuotient(scales_); }

  /// The rescaled density as a TargetDensity usable by any sampler.
  TargetDensity as_target() const {
    auto base = std::make_shared<TargetDensity>(base_);
    auto a = std::make_shared<Vector>(scales_);
    return TargetDensity(
        base_.name() + "_rescaled", base_.dim(),
        [base, a](const Vector& z) { return base->log_density(a->cwiseProduct(z)); },
        [base, a](const Vector& z) -> Vector {
          return a->cwiseProduct(base->grad_log_density(a->cwiseProduct(z)));
        });
  }

 private:
  TargetDensity base_;
  Vector scales_;
};

/// Curvature rescaling from the mode: a_i = 1 / sqrt(max(H_ii, 0) + eps) with
/// H the finite-difference diagonal of -hessian(log density) at the mode.
inline RescaledTarget rescale(const TargetDensity& target, const Vector& mode, double eps,
                              double fd_step = 0.0) {
  Vector h = hessian_diag(target, mode, fd_step);
  Vector a(h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double hi = std::max(h[i], 0.0) + eps;
    if (!(hi > 0.0)) {
      throw DataError("rescale: zero curvature with eps = 0 at coordinate " + std::to_string(i));
    }
    a[i] = 1.0 / std::sqrt(hi);
  }
  return RescaledTarget(target, std::move(a));
}

}  // namespace twosys
