#include <catch2/catch_amalgamated.hpp>

#include "twosys/run.hpp"

using namespace twosys;

namespace {
TargetDensity gauss2() {
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  return gaussian_target(SpdMatrix(a));
}
}  // namespace

TEST_CASE("zero sampling sweeps produce an empty record") {
  SamplerConfig cfg;
  cfg.kernel = Kernel::mala;
  cfg.mode = Mode::coupled;
  cfg.burn_in = 10;
  cfg.sweeps = 0;
  RunRecord rec = run_sampler(gauss2(), cfg, 1, 3);
  REQUIRE(rec.kept == 0);
  REQUIRE(rec.grads_sampling == 0);
  REQUIRE(rec.proposals_sampling == 0);
  for (const Matrix& chain : rec.samples) REQUIRE(chain.rows() == 0);
}

TEST_CASE("gradient accounting matches the closed-form counts") {
  SECTION("MALA spends 2 M N sampling gradients plus 2 N warm-up") {
    SamplerConfig cfg;
    cfg.kernel = Kernel::mala;
    cfg.mode = Mode::coupled;
    cfg.burn_in = 50;
    cfg.sweeps = 200;
    const int n = 5;
    RunRecord rec = run_sampler(gauss2(), cfg, 22, n);
    REQUIRE(rec.grads_warmup == 2 * n);
    REQUIRE(rec.grads_burnin == 2 * cfg.burn_in * n);
    REQUIRE(rec.grads_sampling == 2 * cfg.sweeps * n);
  }
  SECTION("truncated MALA counts identically") {
    SamplerConfig cfg;
    cfg.kernel = Kernel::truncated_mala;
    cfg.mode = Mode::adaptive_2sys;
    cfg.drift_delta = 100.0;
    cfg.burn_in = 40;
    cfg.sweeps = 100;
    const int n = 4;
    RunRecord rec = run_sampler(gauss2(), cfg, 23, n);
    REQUIRE(rec.grads_warmup == 2 * n);
    REQUIRE(rec.grads_sampling == 2 * cfg.sweeps * n);
  }
  SECTION("MAKLA spends 2 M N L with no warm-up gradients") {
    SamplerConfig cfg;
    cfg.kernel = Kernel::makla;
    cfg.mode = Mode::coupled;
    cfg.eta = 0.6;
    cfg.leapfrog_steps = 3;
    cfg.burn_in = 30;
    cfg.sweeps = 120;
    const int n = 4;
    RunRecord rec = run_sampler(gauss2(), cfg, 24, n);
    REQUIRE(rec.grads_warmup == 0);
    REQUIRE(rec.grads_burnin == 2 * cfg.burn_in * n * cfg.leapfrog_steps);
    REQUIRE(rec.grads_sampling == 2 * cfg.sweeps * n * cfg.leapfrog_steps);
  }
}

TEST_CASE("identical seed and config reproduce the record bit for bit") {
  SamplerConfig cfg;
  cfg.kernel = Kernel::makla;
  cfg.mode = Mode::adaptive_2sys;
  cfg.eta = 0.7;
  cfg.h_max = 0.4;
  cfg.beta = 0.5;
  cfg.burn_in = 100;
  cfg.sweeps = 300;
  cfg.thin = 3;
  cfg.restart_period = 20;
  cfg.restart_last = 60;
  RunRecord a = run_sampler(gauss2(), cfg, 77, 4);
  RunRecord b = run_sampler(gauss2(), cfg, 77, 4);
  REQUIRE(a.kept == b.kept);
  REQUIRE(a.kept == cfg.sweeps / cfg.thin);
  for (std::size_t c = 0; c < a.samples.size(); ++c) {
    REQUIRE(a.samples[c] == b.samples[c]);
  }
  REQUIRE(a.grads_sampling == b.grads_sampling);
  REQUIRE(a.accepts_sampling == b.accepts_sampling);

  RunRecord c = run_sampler(gauss2(), cfg, 78, 4);
  bool any_diff = false;
  for (std::size_t ch = 0; ch < a.samples.size(); ++ch) {
    any_diff = any_diff || a.samples[ch] != c.samples[ch];
  }
  REQUIRE(any_diff);
}

TEST_CASE("restart schedule fires floor(tau_max / tau) times") {
  SamplerConfig cfg;
  cfg.kernel = Kernel::truncated_mala;
  cfg.mode = Mode::adaptive_2sys;
  cfg.drift_delta = 50.0;
  cfg.h_max = 0.3;
  cfg.burn_in = 1000;
  cfg.sweeps = 50;
  cfg.restart_period = 100;
  cfg.restart_last = 500;
  RunOptions opts;
  opts.record_adaptation = true;
  RunRecord rec = run_sampler(gauss2(), cfg, 31, 4, opts);
  REQUIRE(rec.restarts_fired == 5);

  // The first adaptation after each reset sees K = 1 and equals its batch
  // covariance bit for bit (hard reset semantics).
  int post_reset_updates = 0;
  for (const AdaptationEvent& ev : rec.adapt_trace) {
    if (ev.sweep >= 101 && ev.counter_used == 1) {
      REQUIRE(ev.stat_after == ev.batch);
      ++post_reset_updates;
    }
  }
  REQUIRE(post_reset_updates == 5);
}

TEST_CASE("moment trace covers every sweep with cumulative gradient counts") {
  SamplerConfig cfg;
  cfg.kernel = Kernel::mala;
  cfg.mode = Mode::coupled;
  cfg.burn_in = 20;
  cfg.sweeps = 60;
  RunOptions opts;
  opts.moment_fns.push_back([](const Vector& x) { return x[0]; });
  opts.moment_fns.push_back([](const Vector& x) { return x.squaredNorm(); });
  RunRecord rec = run_sampler(gauss2(), cfg, 5, 3, opts);
  REQUIRE(rec.moment_trace.rows() == cfg.burn_in + cfg.sweeps);
  REQUIRE(rec.moment_trace.cols() == 2);
  REQUIRE(static_cast<long>(rec.grads_at_sweep.size()) == cfg.burn_in + cfg.sweeps);
  REQUIRE(std::is_sorted(rec.grads_at_sweep.begin(), rec.grads_at_sweep.end()));
  REQUIRE(rec.grads_at_sweep.back() == rec.gradient_total());
}

TEST_CASE("invalid configurations are rejected up front") {
  SamplerConfig cfg;
  cfg.restart_period = 10;
  cfg.restart_last = 2000;
  cfg.burn_in = 100;
  REQUIRE_THROWS_AS(run_sampler(gauss2(), cfg, 1, 2), ConfigError);
  cfg.restart_last = 50;
  cfg.thin = 0;
  REQUIRE_THROWS_AS(run_sampler(gauss2(), cfg, 1, 2), ConfigError);
  cfg.thin = 1;
  cfg.beta = 0.0;
  REQUIRE_THROWS_AS(run_sampler(gauss2(), cfg, 1, 2), ConfigError);
}
