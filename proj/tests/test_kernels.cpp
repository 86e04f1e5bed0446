#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "twosys/kernels.hpp"
#include "twosys/linalg.hpp"
#include "twosys/targets.hpp"

using namespace twosys;

namespace {
Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

TargetDensity flat_target(Eigen::Index d) {
  return TargetDensity(
      "flat", d, [](const Vector&) { return 0.0; },
      [d](const Vector&) -> Vector { return Vector::Zero(d); });
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}
}  // namespace

TEST_CASE("truncated_drift clips to the requested radius") {
  REQUIRE(truncated_drift(Vector::Zero(3), 2.0).norm() == 0.0);
  REQUIRE(truncated_drift(vec2(3.0, 4.0), 5.0) == vec2(3.0, 4.0));
  REQUIRE(truncated_drift(vec2(3.0, 4.0), 1.0).isApprox(vec2(0.6, 0.8), 1e-14));
  CounterRng rng(derive_key(4, 4));
  for (int i = 0; i < 100; ++i) {
    Vector g = rng.normal_vector(4) * 10.0;
    REQUIRE(truncated_drift(g, 2.5).norm() <= 2.5 + 1e-12);
  }
}

TEST_CASE("sample_step_size implements the mixture inverse CDF") {
  SECTION("beta = 1 always returns h_max") {
    StepSizeDist d{0.7, 1.0};
    CounterRng rng(derive_key(5, 5));
    for (int i = 0; i < 50; ++i) REQUIRE(sample_step_size(d, rng) == 0.7);
  }
  SECTION("exact cube root on the continuous branch") {
    StepSizeDist d{0.5, 0.25};
    REQUIRE(sample_step_size(d, 0.9, 0.875) == Catch::Approx(0.25).epsilon(1e-12));
  }
  SECTION("empirical mean within 1% of h_max (beta + (1 - beta)/4)") {
    StepSizeDist d{2.0, 0.4};
    CounterRng rng(derive_key(6, 6));
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += sample_step_size(d, rng);
    REQUIRE(sum / n == Catch::Approx(expected_step_size(d)).epsilon(0.01));
  }
  SECTION("continuous branch matches F(x) = 1 - (1-x)^3") {
    StepSizeDist d{1.0, 0.5};
    CounterRng rng(derive_key(7, 7));
    std::vector<double> xs;
    for (int i = 0; i < 200000; ++i) {
      const double h = sample_step_size(d, rng);
      if (h < 1.0) xs.push_back(h);
    }
    const double dist =
        ks_distance(std::move(xs), [](double x) { return 1.0 - std::pow(1.0 - x, 3.0); });
    REQUIRE(dist < 0.01);
  }
}

TEST_CASE("eta_from_gamma supports both conventions") {
  REQUIRE(eta_from_gamma(1.0 / 16.0, 0.25) == Catch::Approx(std::exp(-1.0 / 64.0)).epsilon(1e-14));
  REQUIRE(eta_from_gamma(1.0 / 16.0, 0.25, EtaConvention::persistence) ==
          Catch::Approx(1.0 - std::exp(-1.0 / 64.0)).epsilon(1e-12));
  REQUIRE(eta_from_gamma(1e-9, 1e-3) == Catch::Approx(1.0).margin(1e-9));
  REQUIRE_THROWS_AS(eta_from_gamma(0.0, 1.0), DataError);
}

TEST_CASE("mala_propose mean and spread") {
  SECTION("zero drift and zero noise is a fixed point") {
    SpdFactorization pre = factorize(SpdMatrix::identity(2));
    Vector x = vec2(1.0, -2.0);
    REQUIRE(mala_propose(x, Vector::Zero(2), pre, 0.3, Vector::Zero(2)) == x);
  }
  SECTION("1-D drift arithmetic") {
    SpdFactorization pre = factorize(SpdMatrix::identity(1));
    Vector x = Vector::Constant(1, 2.0);
    Vector drift = Vector::Constant(1, -2.0);  // grad of std normal at 2
    Vector y = mala_propose(x, drift, pre, 0.5, Vector::Zero(1));
    REQUIRE(y[0] == Catch::Approx(1.0).margin(1e-14));
  }
  SECTION("proposal covariance is 2hC") {
    Matrix c(2, 2);
    c << 2.0, 0.5, 0.5, 1.0;
    SpdFactorization pre = factorize(SpdMatrix(c));
    const double h = 0.3;
    Vector x = vec2(0.4, -0.2);
    CounterRng rng(derive_key(8, 8));
    const int n = 100000;
    Vector mean = Vector::Zero(2);
    Matrix second = Matrix::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
      Vector y = mala_propose(x, Vector::Zero(2), pre, h, rng.normal_vector(2));
      mean += y;
      second += y * y.transpose();
    }
    mean /= n;
    second = second / n - mean * mean.transpose();
    Matrix target_cov = 2.0 * h * c;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double se = std::sqrt(
            (target_cov(i, i) * target_cov(j, j) + target_cov(i, j) * target_cov(i, j)) / n);
        REQUIRE(std::abs(second(i, j) - target_cov(i, j)) < 3.0 * se);
      }
    }
  }
}

TEST_CASE("mala_accept_log_ratio closed forms") {
  TargetDensity std1 = gaussian_target(SpdMatrix::identity(1));
  SpdFactorization pre = factorize(SpdMatrix::identity(1));
  SECTION("y = x gives log ratio 0") {
    Vector x = Vector::Constant(1, 0.8);
    REQUIRE(mala_accept_log_ratio(std1, x, x, pre, 0.5) == Catch::Approx(0.0).margin(1e-14));
  }
  SECTION("unit step on the standard gaussian") {
    Vector x = Vector::Zero(1);
    Vector y = Vector::Constant(1, 1.0);
    REQUIRE(mala_accept_log_ratio(std1, x, y, pre, 0.5) ==
            Catch::Approx(-0.125).margin(1e-12));
  }
}

TEST_CASE("detailed balance holds pointwise for MALA and truncated MALA") {
  SpdMatrix a = random_spd(3, 0.5, 5.0, 77);
  TargetDensity gauss = gaussian_target(a);
  TargetDensity funnel = neals_funnel(3, 1.5);
  CounterRng rng(derive_key(9, 9));
  for (const TargetDensity* t : {&gauss, &funnel}) {
    for (int rep = 0; rep < 100; ++rep) {
      Vector x = rng.normal_vector(3);
      Vector y = rng.normal_vector(3);
      SpdMatrix c = random_spd(3, 0.3, 3.0, 1000 + rep);
      SpdFactorization pre = factorize(c);
      const double h = 0.05 + 0.5 * rng.uniform();
      for (std::optional<double> delta : {std::optional<double>{}, std::optional<double>{1.0}}) {
        auto flow = [&](const Vector& from, const Vector& to) {
          const Vector drift = delta ? truncated_drift(t->grad_log_density(from), *delta)
                                     : t->grad_log_density(from);
          return t->log_density(from) + mala_log_proposal_density(to, from, drift, pre, h) +
                 mala_accept_log_ratio(*t, from, to, pre, h, delta);
        };
        REQUIRE(std::abs(flow(x, y) - flow(y, x)) < 1e-10);
      }
    }
  }
}

TEST_CASE("oabao free flight conserves energy") {
  TargetDensity flat = flat_target(2);
  Matrix sqrt_c(2, 2);
  sqrt_c << 1.2, 0.1, 0.1, 0.8;
  Vector x = vec2(0.5, -0.5);
  Vector v = vec2(1.0, 2.0);
  CounterRng rng(derive_key(10, 10));
  OabaoResult r = oabao_trajectory(flat, x, v, 0.0, sqrt_c, 0.25, 0.0, 3, rng);
  REQUIRE(r.v.isApprox(v, 1e-14));
  REQUIRE(r.x.isApprox(x + 3 * 0.25 * (sqrt_c * v), 1e-12));
  REQUIRE(r.delta == Catch::Approx(0.0).margin(1e-14));
  REQUIRE(r.gradients_used == 3);
}

TEST_CASE("oabao full refresh stays finite") {
  TargetDensity t = gaussian_target(SpdMatrix::identity(2));
  CounterRng rng(derive_key(11, 11));
  Vector x = vec2(0.3, 0.4);
  OabaoResult r = oabao_trajectory(t, x, vec2(1.0, -1.0), t.log_density(x),
                                   Matrix::Identity(2, 2), 0.3, 1.0, 2, rng);
  REQUIRE(r.finite);
  REQUIRE(std::isfinite(r.delta));
}

TEST_CASE("oabao energy error scales as h^3") {
  TargetDensity t = gaussian_target(SpdMatrix::identity(1));
  const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
  std::vector<std::pair<double, double>> starts{{0.5, 1.0}, {1.5, -0.7}, {-2.0, 0.3},
                                                {0.1, 2.0}, {-0.9, -1.4}};
  std::vector<double> log_h, log_err;
  for (double h : hs) {
    double worst = 0.0;
    for (auto [x0, v0] : starts) {
      CounterRng rng(derive_key(12, 12));
      Vector x = Vector::Constant(1, x0);
      OabaoResult r = oabao_trajectory(t, x, Vector::Constant(1, v0), t.log_density(x),
                                       Matrix::Identity(1, 1), h, 0.0, 1, rng);
      worst = std::max(worst, std::abs(r.delta));
    }
    log_h.push_back(std::log(h));
    log_err.push_back(std::log(worst));
  }
  // Least-squares slope of log err against log h.
  const double n = static_cast<double>(log_h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_h.size(); ++i) {
    sx += log_h[i];
    sy += log_err[i];
    sxx += log_h[i] * log_h[i];
    sxy += log_h[i] * log_err[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  REQUIRE(slope > 2.5);
  REQUIRE(slope < 3.5);
}

TEST_CASE("oabao with eta = 0 is reversible with momentum flip") {
  SpdMatrix c = random_spd(3, 0.4, 2.5, 313);
  SpdFactorization pre = factorize(c);
  TargetDensity t = neals_funnel(3, 1.0);
  CounterRng rng(derive_key(13, 13));
  for (int steps : {1, 3}) {
    for (int rep = 0; rep < 100; ++rep) {
      Vector x = rng.normal_vector(3) * 0.7;
      Vector v = rng.normal_vector(3);
      CounterRng unused(derive_key(14, rep));
      OabaoResult fwd =
          oabao_trajectory(t, x, v, t.log_density(x), pre.sym_sqrt, 0.15, 0.0, steps, unused);
      OabaoResult rev = oabao_trajectory(t, fwd.x, -fwd.v, t.log_density(fwd.x), pre.sym_sqrt,
                                         0.15, 0.0, steps, unused);
      REQUIRE(std::abs(fwd.delta + rev.delta) < 1e-10);
      REQUIRE((rev.x - x).norm() < 1e-10);
      REQUIRE((rev.v + v).norm() < 1e-10);
    }
  }
}

TEST_CASE("makla_propose acceptance behaviour") {
  SECTION("zero energy error always accepts") {
    TargetDensity flat = flat_target(2);
    CounterRng rng(derive_key(15, 15));
    for (int i = 0; i < 20; ++i) {
      Vector x = vec2(0.1 * i, -0.2);
      ProposalOutcome out =
          makla_propose(flat, x, vec2(1.0, 0.5), 0.0, Matrix::Identity(2, 2), 0.4, 0.3, 2, rng);
      REQUIRE(out.accepted);
      REQUIRE(out.gradients_used == 2);
    }
  }
  SECTION("exploding trajectory rejects and flips the momentum") {
    TargetDensity quartic(
        "quartic", 1, [](const Vector& x) { return -std::pow(x[0], 4); },
        [](const Vector& x) -> Vector { return Vector::Constant(1, -4.0 * std::pow(x[0], 3)); });
    CounterRng rng(derive_key(16, 16));
    Vector x = Vector::Constant(1, 3.0);
    Vector v = Vector::Constant(1, 5.0);
    ProposalOutcome out = makla_propose(quartic, x, v, quartic.log_density(x),
                                        Matrix::Identity(1, 1), 1e4, 0.0, 3, rng);
    REQUIRE_FALSE(out.accepted);
    REQUIRE(out.x == x);
    REQUIRE(out.v == -v);
    REQUIRE(out.gradients_used == 3);
  }
  SECTION("long-run velocity marginal is standard normal") {
    TargetDensity t = gaussian_target(SpdMatrix::identity(1));
    Vector x = Vector::Zero(1);
    Vector v = Vector::Constant(1, 0.3);
    double logp = t.log_density(x);
    CounterRng rng(derive_key(17, 17));
    std::vector<double> vs;
    const int steps = 60000;
    for (int i = 0; i < steps; ++i) {
      ProposalOutcome out = makla_propose(t, x, v, logp, Matrix::Identity(1, 1), 0.35, 0.5, 1, rng);
      x = out.x;
      v = out.v;
      logp = out.logp;
      if (i % 10 == 9) vs.push_back(v[0]);
    }
    const double dist = ks_distance(std::move(vs), std_normal_cdf);
    // 1% critical value for n = 6000 iid draws.
    REQUIRE(dist < 1.628 / std::sqrt(6000.0));
  }
}
