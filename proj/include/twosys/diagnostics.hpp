#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "twosys/common.hpp"
#include "twosys/targets.hpp"

namespace twosys {

/// Post-burn-in draws arranged as runs x chains x steps x dim;
/// data[r][c] is a (steps x dim) matrix.
struct SampleTensor {
  std::vector<std::vector<Matrix>> data;

  int runs() const { return static_cast<int>(data.size()); }
  int chains() const { return data.empty() ? 0 : static_cast<int>(data[0].size()); }
  Eigen::Index steps() const {
    return (data.empty() || data[0].empty()) ? 0 : data[0][0].rows();
  }
  Eigen::Index dim() const {
    return (data.empty() || data[0].empty()) ? 0 : data[0][0].cols();
  }

  void validate() const {
    if (runs() < 1 || chains() < 1) throw DataError("SampleTensor: need runs >= 1, chains >= 1");
    if (steps() < 2) throw DataError("SampleTensor: need steps >= 2");
    for (const auto& run : data) {
      if (static_cast<int>(run.size()) != chains())
        throw DataError("SampleTensor: ragged chain count");
      for (const Matrix& m : run) {
        if (m.rows() != steps() || m.cols() != dim())
          throw DataError("SampleTensor: ragged shapes");
        if (!m.allFinite()) throw DataError("SampleTensor: non-finite draw");
      }
    }
  }

  /// Keep only the final `window` steps of every chain (0 keeps everything).
  SampleTensor tail_window(Eigen::Index window) const {
    if (window <= 0 || window >= steps()) return *this;
    SampleTensor out;
    out.data.resize(runs());
    for (int r = 0; r < runs(); ++r) {
      out.data[r].reserve(chains());
      for (int c = 0; c < chains(); ++c) {
        out.data[r].push_back(data[r][c].bottomRows(window));
      }
    }
    return out;
  }
};

namespace detail {
inline double variance(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / (n - 1.0);
}
}  // namespace detail

/// Between-run ESS for one coordinate: R N T Var(pooled draws) divided by the
/// between-run variance scaled to per-draw units, N T Var(run means). The
/// scaling calibrates the estimator so i.i.d. draws score close to the raw
/// sample count. Zero between-run variance of nonconstant draws reports +inf
/// with the degeneracy flag set.
struct EssResult {
  double ess = 0.0;
  bool degenerate = false;
};

inline EssResult ess_between_run(const SampleTensor& samples, Eigen::Index coord) {
  if (samples.runs() < 2) throw DataError("ess_between_run: need at least two runs");
  const auto r = samples.runs();
  const auto c = samples.chains();
  const auto t = samples.steps();

  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(r) * c * t);
  std::vector<double> run_means(r, 0.0);
  for (int ri = 0; ri < r; ++ri) {
    double acc = 0.0;
    for (int ci = 0; ci < c; ++ci) {
      const auto col = samples.data[ri][ci].col(coord);
      acc += col.sum();
      for (Eigen::Index k = 0; k < t; ++k) pooled.push_back(col[k]);
    }
    run_means[ri] = acc / static_cast<double>(c * t);
  }
  const double pooled_var = detail::variance(pooled);
  const double mean_var = detail::variance(run_means);
  if (mean_var <= 0.0) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  const double per_run = static_cast<double>(c) * static_cast<double>(t);
  const double total = static_cast<double>(r) * per_run;
  return {total * pooled_var / (per_run * mean_var), false};
}

/// Autocorrelation-based ESS for one scalar chain: T over the integrated
/// autocorrelation time, truncated at the first non-positive pair of
/// autocovariances (lag pairs are summed, Geyer-style). Lags are evaluated
/// lazily, so well-mixed chains touch only a handful of them.
inline EssResult ess_autocorrelation(const Eigen::Ref<const Vector>& chain) {
  const Eigen::Index t = chain.size();
  if (t < 10) throw DataError("ess_autocorrelation: need at least 10 samples");
  const double mean = chain.mean();
  Vector centered = chain.array() - mean;
  const double gamma0 = centered.squaredNorm() / static_cast<double>(t);
  if (gamma0 <= 0.0) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  auto gamma = [&](Eigen::Index lag) {
    return centered.head(t - lag).dot(centered.tail(t - lag)) / static_cast<double>(t);
  };
  // IACT = -rho_0 + 2 * sum of lag pairs (0,1), (2,3), ... while the pair
  // sums stay positive (initial positive sequence truncation).
  double pair_sum = 0.0;
  for (Eigen::Index lag = 0; lag + 1 < t; lag += 2) {
    const double pair = (gamma(lag) + gamma(lag + 1)) / gamma0;
    if (pair <= 0.0) break;
    pair_sum += pair;
  }
  double iact = 2.0 * pair_sum - 1.0;
  iact = std::max(iact, 1.0 / static_cast<double>(t));
  return {static_cast<double>(t) / iact, false};
}

/// Gelman-Rubin R-hat over equal-length scalar chains:
/// sqrt(((n-1)/n W + B/n) / W).
struct RhatResult {
  double rhat = 1.0;
  bool degenerate = false;
};

inline RhatResult gelman_rubin(const std::vector<Vector>& chains) {
  if (chains.size() < 2) throw DataError("gelman_rubin: need at least two chains");
  const Eigen::Index n = chains[0].size();
  if (n < 2) throw DataError("gelman_rubin: chains must have length >= 2");
  std::vector<double> means;
  means.reserve(chains.size());
  double w = 0.0;
  for (const Vector& ch : chains) {
    if (ch.size() != n) throw DataError("gelman_rubin: chains must have equal length");
    const double m = ch.mean();
    means.push_back(m);
    w += (ch.array() - m).square().sum() / static_cast<double>(n - 1);
  }
  w /= static_cast<double>(chains.size());
  const double b = static_cast<double>(n) * detail::variance(means);
  if (w <= 0.0) return {std::numeric_limits<double>::infinity(), true};
  const double nn = static_cast<double>(n);
  return {std::sqrt(((nn - 1.0) / nn * w + b / nn) / w), false};
}

/// Normalized worst-coordinate bias of cumulative estimates, and the gradient
/// cost of first dropping below 0.01 (strictly).
struct BiasTraceResult {
  Vector series;                       // L_t per sweep
  std::optional<long> crossing_sweep;  // first t with L_t < 0.01 (1-based)
  std::optional<long> crossing_gradients;
};

inline BiasTraceResult bias_trace(const Matrix& estimates, const std::vector<long>& grads_at_sweep,
                                  const std::vector<MomentSpec>& moments) {
  const Eigen::Index t_max = estimates.rows();
  const auto k = static_cast<Eigen::Index>(moments.size());
  if (estimates.cols() != k) throw DataError("bias_trace: estimate/moment count mismatch");
  if (static_cast<Eigen::Index>(grads_at_sweep.size()) != t_max)
    throw DataError("bias_trace: gradient trace length mismatch");
  for (const MomentSpec& m : moments) {
    if (!(m.variance > 0.0)) throw DataError("bias_trace: moment variance must be positive");
  }
  BiasTraceResult out;
  out.series.resize(t_max);
  Vector cum = Vector::Zero(k);
  for (Eigen::Index t = 0; t < t_max; ++t) {
    cum += estimates.row(t).transpose();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double est = cum[i] / static_cast<double>(t + 1);
      const double dev = est - moments[i].mean;
      worst = std::max(worst, dev * dev / moments[i].variance);
    }
    out.series[t] = worst;
    if (!out.crossing_sweep && worst < 0.01) {
      out.crossing_sweep = t + 1;
      out.crossing_gradients = grads_at_sweep[t];
    }
  }
  return out;
}

/// Maximum coordinate-wise absolute relative error of mean estimates.
inline double mcare(const Vector& estimated, const Vector& reference, const Vector& reference_std) {
  if (estimated.size() != reference.size() || estimated.size() != reference_std.size())
    throw DataError("mcare: dimension mismatch");
  if ((reference_std.array() <= 0.0).any())
    throw DataError("mcare: reference stds must be positive");
  return ((estimated - reference).cwiseQuotient(reference_std)).cwiseAbs().maxCoeff();
}

/// Median and minimum over coordinates of ESS / total fresh gradients.
struct EssPerGrad {
  double median = 0.0;
  double min = 0.0;
};

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw DataError("median_of: empty input");
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

inline EssPerGrad ess_per_grad(const std::vector<double>& ess_by_coord, long gradient_total) {
  if (gradient_total <= 0) throw DataError("ess_per_grad: gradient total must be positive");
  if (ess_by_coord.empty()) throw DataError("ess_per_grad: no coordinates");
  const double g = static_cast<double>(gradient_total);
  EssPerGrad out;
  out.median = median_of(ess_by_coord) / g;
  out.min = *std::min_element(ess_by_coord.begin(), ess_by_coord.end()) / g;
  return out;
}

}  // namespace twosys
