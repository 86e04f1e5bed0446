#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "twosys/common.hpp"
#include "twosys/sweeps.hpp"

namespace twosys {

/// Everything one sampling run produces: thinned draws per particle,
/// acceptance and gradient counters by phase, and the per-sweep traces the
/// diagnostics consume.
struct RunRecord {
  Eigen::Index dim = 0;
  int particles_per_system = 0;
  long burn_in = 0;
  long sweeps = 0;
  long thin = 1;

  // samples[chain] is a (kept x dim) matrix; chain = system * N + particle.
  std::vector<Matrix> samples;
  long kept = 0;

  long grads_warmup = 0;
  long grads_burnin = 0;
  long grads_sampling = 0;
  long proposals_burnin = 0;
  long accepts_burnin = 0;
  long proposals_sampling = 0;
  long accepts_sampling = 0;
  long covariance_evals = 0;
  int restarts_fired = 0;

  // Cross-chain mean of each tracked moment after every sweep (burn-in
  // included), with the cumulative fresh-gradient count at that sweep.
  Matrix moment_trace;
  std::vector<long> grads_at_sweep;

  std::vector<AdaptationEvent> adapt_trace;

  long gradient_total() const { return grads_warmup + grads_burnin + grads_sampling; }
  double acceptance_rate_sampling() const {
    return proposals_sampling > 0
               ? static_cast<double>(accepts_sampling) / static_cast<double>(proposals_sampling)
               : 0.0;
  }
  double acceptance_rate_burnin() const {
    return proposals_burnin > 0
               ? static_cast<double>(accepts_burnin) / static_cast<double>(proposals_burnin)
               : 0.0;
  }
};

struct RunOptions {
  /// Starting positions for all 2N particles (system 0 first). When absent,
  /// every particle starts at the mode located from the origin.
  std::optional<std::vector<Vector>> init_positions;
  /// Scalar summaries traced per sweep for the bias diagnostic.
  std::vector<std::function<double(const Vector&)>> moment_fns;
  /// Keep the covariance adaptation trace (tests and debugging).
  bool record_adaptation = false;
};

/// Burn-in with restarts, then thinned sampling, per the configured mode and
/// kernel. Deterministic in (target, cfg, seed, N): every random draw comes
/// from a stream keyed by (seed, sweep, system, particle).
inline RunRecord run_sampler(const TargetDensity& target, const SamplerConfig& cfg,
                             std::uint64_t seed, int particles_per_system,
                             const RunOptions& opts = {}) {
  cfg.validate();
  if (particles_per_system < 1) throw ConfigError("run_sampler: need at least one particle");
  const Eigen::Index d = target.dim();
  const int n = particles_per_system;

  RunRecord rec;
  rec.dim = d;
  rec.particles_per_system = n;
  rec.burn_in = cfg.burn_in;
  rec.sweeps = cfg.sweeps;
  rec.thin = cfg.thin;

  RunStreams streams = run_streams(seed, 0);

  std::vector<Vector> starts;
  if (opts.init_positions) {
    starts = *opts.init_positions;
    if (static_cast<int>(starts.size()) != 2 * n) {
      throw ConfigError("run_sampler: init_positions must hold 2N particles");
    }
  } else {
    ModeResult mr = find_mode(target, Vector::Zero(d));
    starts.assign(2 * n, mr.mode);
  }

  EnsembleState sys0 = init_system(
      target, cfg, 0, {starts.begin(), starts.begin() + n}, streams, &rec.grads_warmup);
  EnsembleState sys1 = init_system(
      target, cfg, 1, {starts.begin() + n, starts.end()}, streams, &rec.grads_warmup);

  std::optional<SpdFactorization> fixed_pre;
  if (cfg.mode == Mode::vanilla) {
    SpdFactorization id;
    id.source = SpdMatrix::identity(d);
    id.cholesky = Matrix::Identity(d, d);
    id.sym_sqrt = Matrix::Identity(d, d);
    id.log_det = 0.0;
    fixed_pre = std::move(id);
  }

  std::array<AdaptiveStat, 2> stats;
  const bool adaptive = cfg.mode == Mode::adaptive_1sys || cfg.mode == Mode::adaptive_2sys;
  if (adaptive) {
    if (cfg.mode == Mode::adaptive_2sys) {
      stats[0] = AdaptiveStat{ensemble_covariance(sys0.positions, 0.0), 1, cfg.cov_cap};
      stats[1] = AdaptiveStat{ensemble_covariance(sys1.positions, 0.0), 1, cfg.cov_cap};
    } else {
      std::vector<Vector> pooled = sys0.positions;
      pooled.insert(pooled.end(), sys1.positions.begin(), sys1.positions.end());
      stats[0] = AdaptiveStat{ensemble_covariance(pooled, 0.0), 1, cfg.cov_cap};
      stats[1] = stats[0];
    }
  }

  const long total_sweeps = cfg.burn_in + cfg.sweeps;
  const auto k_moments = static_cast<Eigen::Index>(opts.moment_fns.size());
  rec.moment_trace.resize(k_moments > 0 ? total_sweeps : 0, k_moments);
  rec.grads_at_sweep.reserve(total_sweeps);
  rec.kept = cfg.thin > 0 ? cfg.sweeps / cfg.thin : 0;
  rec.samples.assign(2 * static_cast<std::size_t>(n), Matrix(rec.kept, d));
  long kept_row = 0;

  std::vector<AdaptationEvent>* trace = opts.record_adaptation ? &rec.adapt_trace : nullptr;

  for (long t = 1; t <= total_sweeps; ++t) {
    SweepCounters c;
    switch (cfg.mode) {
      case Mode::vanilla:
        c = vanilla_sweep(target, sys0, sys1, *fixed_pre, cfg, streams, t);
        break;
      case Mode::coupled:
        c = coupled_sweep(target, sys0, sys1, cfg, streams, t);
        break;
      case Mode::adaptive_1sys:
      case Mode::adaptive_2sys:
        c = adaptive_sweep(target, sys0, sys1, stats, cfg, streams, t, trace);
        break;
    }
    const bool in_burn = t <= cfg.burn_in;
    if (in_burn) {
      rec.grads_burnin += c.gradient_evals;
      rec.proposals_burnin += c.proposals;
      rec.accepts_burnin += c.accepts;
    } else {
      rec.grads_sampling += c.gradient_evals;
      rec.proposals_sampling += c.proposals;
      rec.accepts_sampling += c.accepts;
    }
    rec.covariance_evals += c.covariance_evals;

    if (adaptive && in_burn && cfg.restart_period > 0 && t % cfg.restart_period == 0 &&
        t <= cfg.restart_last) {
      stats[0] = apply_restart(stats[0], cfg.restart_kind);
      stats[1] = apply_restart(stats[1], cfg.restart_kind);
      ++rec.restarts_fired;
    }

    for (const EnsembleState* sys : {&sys0, &sys1}) {
      for (const Vector& p : sys->positions) {
        if (!p.allFinite()) {
          throw SamplingError("run_sampler: non-finite state after sweep " + std::to_string(t));
        }
      }
    }

    if (k_moments > 0) {
      for (Eigen::Index m = 0; m < k_moments; ++m) {
        double acc = 0.0;
        for (const Vector& p : sys0.positions) acc += opts.moment_fns[m](p);
        for (const Vector& p : sys1.positions) acc += opts.moment_fns[m](p);
        rec.moment_trace(t - 1, m) = acc / static_cast<double>(2 * n);
      }
    }
    rec.grads_at_sweep.push_back(rec.gradient_total());

    if (!in_burn) {
      const long m = t - cfg.burn_in;
      if (m % cfg.thin == 0) {
        for (int j = 0; j < n; ++j) rec.samples[j].row(kept_row) = sys0.positions[j];
        for (int j = 0; j < n; ++j) rec.samples[n + j].row(kept_row) = sys1.positions[j];
        ++kept_row;
      }
    }
  }
  return rec;
}

}  // namespace twosys
