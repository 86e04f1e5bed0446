#pragma once

#include <array>
#include <optional>
#include <vector>

#include "twosys/common.hpp"
#include "twosys/kernels.hpp"
#include "twosys/linalg.hpp"
#include "twosys/rng.hpp"
#include "twosys/targets.hpp"

namespace twosys {

enum class Kernel { mala, truncated_mala, makla };
enum class Mode { vanilla, coupled, adaptive_1sys, adaptive_2sys };
enum class RestartKind { hard, soft };
enum class StepDraw { per_particle, per_sweep };

struct SamplerConfig {
  Kernel kernel = Kernel::mala;
  Mode mode = Mode::coupled;
  double h_max = 0.5;
  double beta = 1.0;        // P(h = h_max); 1 disables step randomization
  int leapfrog_steps = 1;   // L (kinetic kernel only)
  double eta = 0.5;         // velocity refresh weight (kinetic kernel only)
  double jitter = 1e-6;     // epsilon added to every consumed covariance
  double drift_delta = 1e6; // drift truncation radius (truncated kernel)
  double cov_cap = 1e6;     // operator-norm bound on adapted covariances
  long burn_in = 1000;
  long sweeps = 5000;
  long thin = 1;
  long restart_period = 0;  // tau; 0 disables adaptation restarts
  long restart_last = 0;    // tau_max
  RestartKind restart_kind = RestartKind::hard;
  StepDraw step_draw = StepDraw::per_particle;

  bool kinetic() const { return kernel == Kernel::makla; }

  void validate() const {
    if (!(h_max > 0.0)) throw ConfigError("sampler.h_max must be positive");
    if (!(beta > 0.0) || beta > 1.0) throw ConfigError("sampler.beta must lie in (0, 1]");
    if (leapfrog_steps < 1) throw ConfigError("sampler.leapfrog_steps must be >= 1");
    if (kinetic() && !(eta > 0.0 && eta < 1.0))
      throw ConfigError("sampler.eta must lie in (0, 1)");
    if (!(jitter > 0.0)) throw ConfigError("sampler.jitter must be positive");
    if (!(drift_delta > 0.0)) throw ConfigError("sampler.drift_delta must be positive");
    if (!(cov_cap > 0.0)) throw ConfigError("sampler.cov_cap must be positive");
    if (burn_in < 0) throw ConfigError("sampler.burn_in must be >= 0");
    if (sweeps < 0) throw ConfigError("sampler.sweeps must be >= 0");
    if (thin < 1) throw ConfigError("sampler.thin must be >= 1");
    if (restart_period < 0) throw ConfigError("sampler.restart_period must be >= 0");
    if (restart_period > 0 && restart_last > burn_in)
      throw ConfigError("sampler.restart_last must be <= sampler.burn_in");
  }
};

/// Positions (and velocities, for kinetic kernels) of the N particles of one
/// system, with the cached density/gradient values the kernels reuse.
struct EnsembleState {
  int system_tag = 0;
  std::vector<Vector> positions;
  std::vector<Vector> velocities;  // empty unless kinetic
  std::vector<double> logp;
  std::vector<Vector> grads;       // overdamped kernels only

  bool kinetic() const { return !velocities.empty(); }
  int size() const { return static_cast<int>(positions.size()); }
};

/// Build one system from starting positions, warming the per-particle caches.
/// Overdamped kernels spend one gradient per particle here (the warm-up term
/// in the gradient budget); kinetic kernels spend none.
inline EnsembleState init_system(const TargetDensity& target, const SamplerConfig& cfg,
                                 int system_tag, std::vector<Vector> positions,
                                 const RunStreams& streams, long* warmup_gradients) {
  EnsembleState sys;
  sys.system_tag = system_tag;
  sys.positions = std::move(positions);
  const int n = sys.size();
  sys.logp.resize(n);
  for (int j = 0; j < n; ++j) {
    if (!sys.positions[j].allFinite()) throw DataError("init_system: non-finite start position");
    sys.logp[j] = target.log_density(sys.positions[j]);
  }
  if (cfg.kinetic()) {
    sys.velocities.resize(n);
    for (int j = 0; j < n; ++j) {
      CounterRng rng = streams.init_velocity(system_tag, j);
      sys.velocities[j] = rng.normal_vector(target.dim());
    }
  } else {
    sys.grads.resize(n);
    for (int j = 0; j < n; ++j) {
      sys.grads[j] = target.grad_log_density(sys.positions[j]);
      if (!sys.grads[j].allFinite()) throw DataError("init_system: non-finite start gradient");
      if (warmup_gradients) ++*warmup_gradients;
    }
  }
  return sys;
}

struct SweepCounters {
  long proposals = 0;
  long accepts = 0;
  long gradient_evals = 0;
  long covariance_evals = 0;

  SweepCounters& operator+=(const SweepCounters& o) {
    proposals += o.proposals;
    accepts += o.accepts;
    gradient_evals += o.gradient_evals;
    covariance_evals += o.covariance_evals;
    return *this;
  }
};

/// Propose and accept/reject every particle of `active` against a frozen
/// preconditioner. Particles are independent given the preconditioner; each
/// draws from its own (sweep, system, particle) stream, so the result does not
/// depend on iteration order.
inline void propose_system(const TargetDensity& target, EnsembleState& active,
                           const SpdFactorization& pre, const SamplerConfig& cfg,
                           const RunStreams& streams, long sweep_index,
                           SweepCounters& counters) {
  const StepSizeDist step_dist{cfg.h_max, cfg.beta};
  double sweep_h = cfg.h_max;
  if (cfg.step_draw == StepDraw::per_sweep && cfg.beta < 1.0) {
    CounterRng shared = streams.sweep_shared(sweep_index, active.system_tag);
    sweep_h = sample_step_size(step_dist, shared);
  }
  const std::optional<double> delta =
      cfg.kernel == Kernel::truncated_mala ? std::optional<double>(cfg.drift_delta)
                                           : std::nullopt;
  for (int j = 0; j < active.size(); ++j) {
    CounterRng rng = streams.particle(sweep_index, active.system_tag, j);
    double h = sweep_h;
    if (cfg.step_draw == StepDraw::per_particle && cfg.beta < 1.0) {
      h = sample_step_size(step_dist, rng);
    }
    ProposalOutcome out;
    if (cfg.kernel == Kernel::makla) {
      out = makla_propose(target, active.positions[j], active.velocities[j], active.logp[j],
                          pre.sym_sqrt, h, cfg.eta, cfg.leapfrog_steps, rng);
      active.velocities[j] = out.v;
    } else {
      out = mala_step(target, active.positions[j], active.logp[j], active.grads[j], pre, h,
                      delta, rng);
      active.grads[j] = out.grad;
    }
    active.positions[j] = out.x;
    active.logp[j] = out.logp;
    ++counters.proposals;
    counters.accepts += out.accepted ? 1 : 0;
    counters.gradient_evals += out.gradients_used;
  }
}

/// Both systems advanced once with a fixed preconditioner (baseline sampler).
inline SweepCounters vanilla_sweep(const TargetDensity& target, EnsembleState& sys0,
                                   EnsembleState& sys1, const SpdFactorization& pre,
                                   const SamplerConfig& cfg, const RunStreams& streams,
                                   long sweep_index) {
  SweepCounters counters;
  propose_system(target, sys0, pre, cfg, streams, sweep_index, counters);
  propose_system(target, sys1, pre, cfg, streams, sweep_index, counters);
  return counters;
}

/// One coupled sweep: each half-sweep freezes the other system, preconditions
/// with its ensemble covariance plus jitter, and updates the active system's
/// particles; exactly two covariance evaluations per sweep.
inline SweepCounters coupled_sweep(const TargetDensity& target, EnsembleState& sys0,
                                   EnsembleState& sys1, const SamplerConfig& cfg,
                                   const RunStreams& streams, long sweep_index) {
  SweepCounters counters;
  std::array<EnsembleState*, 2> systems{&sys0, &sys1};
  for (int s = 0; s < 2; ++s) {
    const EnsembleState& frozen = *systems[1 - s];
    SpdMatrix c = ensemble_covariance(frozen.positions, cfg.jitter);
    ++counters.covariance_evals;
    SpdFactorization pre = factorize(c);
    propose_system(target, *systems[s], pre, cfg, streams, sweep_index, counters);
  }
  return counters;
}

/// Reset the adaptation schedule. Hard forgets history (the next update
/// overwrites the estimate); soft keeps the value but upweights recency.
/// The stored covariance is untouched either way.
inline AdaptiveStat apply_restart(AdaptiveStat stat, RestartKind kind) {
  stat.counter = kind == RestartKind::hard ? 1 : 2;
  return stat;
}

/// Record of one covariance adaptation, for diagnostics and tests.
struct AdaptationEvent {
  long sweep = 0;
  int source_system = -1;  // -1 when the batch pools both systems
  long counter_used = 0;
  Matrix batch;
  Matrix stat_after;
};

/// One adaptive sweep. In two-system mode each half-sweep folds the frozen
/// system's ensemble covariance into that system's running statistic, caps it,
/// adds jitter, and proposes the active system with it; the shared counter
/// advances after each system's turn (two increments per sweep). In one-system
/// mode a single statistic is updated once per sweep from the pooled ensemble
/// and used for both halves.
inline SweepCounters adaptive_sweep(const TargetDensity& target, EnsembleState& sys0,
                                    EnsembleState& sys1, std::array<AdaptiveStat, 2>& stats,
                                    const SamplerConfig& cfg, const RunStreams& streams,
                                    long sweep_index,
                                    std::vector<AdaptationEvent>* trace = nullptr) {
  SweepCounters counters;
  std::array<EnsembleState*, 2> systems{&sys0, &sys1};

  if (cfg.mode == Mode::adaptive_1sys) {
    std::vector<Vector> pooled;
    pooled.reserve(sys0.positions.size() + sys1.positions.size());
    pooled.insert(pooled.end(), sys0.positions.begin(), sys0.positions.end());
    pooled.insert(pooled.end(), sys1.positions.begin(), sys1.positions.end());
    SpdMatrix batch = ensemble_covariance(pooled, 0.0);
    ++counters.covariance_evals;
    const long k_used = stats[0].counter;
    stats[0] = running_update(stats[0], batch);
    stats[0].counter = k_used + 1;
    if (trace) trace->push_back({sweep_index, -1, k_used, batch.mat(), stats[0].cov.mat()});
    SpdMatrix consumed(stats[0].cov.mat() +
                       cfg.jitter * Matrix::Identity(target.dim(), target.dim()));
    SpdFactorization pre = factorize(consumed);
    propose_system(target, sys0, pre, cfg, streams, sweep_index, counters);
    propose_system(target, sys1, pre, cfg, streams, sweep_index, counters);
    return counters;
  }

  for (int s = 0; s < 2; ++s) {
    const int source = 1 - s;
    const EnsembleState& frozen = *systems[source];
    SpdMatrix batch = ensemble_covariance(frozen.positions, 0.0);
    ++counters.covariance_evals;
    const long k_used = stats[source].counter;
    stats[source] = running_update(stats[source], batch);
    if (trace) trace->push_back({sweep_index, source, k_used, batch.mat(), stats[source].cov.mat()});
    SpdMatrix consumed(stats[source].cov.mat() +
                       cfg.jitter * Matrix::Identity(target.dim(), target.dim()));
    SpdFactorization pre = factorize(consumed);
    propose_system(target, *systems[s], pre, cfg, streams, sweep_index, counters);
    // The adaptation counter is shared across the pair and ticks once per
    // system turn, so successive updates of one statistic see K, K+2, ...
    stats[0].counter += 1;
    stats[1].counter += 1;
  }
  return counters;
}

}  // namespace twosys
