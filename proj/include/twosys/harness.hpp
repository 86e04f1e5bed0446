#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "twosys/config.hpp"
#include "twosys/diagnostics.hpp"
#include "twosys/run.hpp"

namespace twosys {

// ---------------------------------------------------------------------------
// Target construction
// ---------------------------------------------------------------------------

struct BuiltTarget {
  TargetDensity density;
  std::vector<MomentSpec> bias_moments;  // x-space summaries for the bias metric
};

namespace detail {
inline double chi_mean(double d) {
  return std::numbers::sqrt2 * std::exp(std::lgamma(0.5 * (d + 1.0)) - std::lgamma(0.5 * d));
}

/// f(x) = ||A^{1/2} x|| with closed-form mean/variance under the target.
inline MomentSpec radial_moment(const SpdMatrix& a, std::optional<double> nu) {
  auto root = std::make_shared<Matrix>(factorize(a).sym_sqrt);
  MomentSpec ms;
  ms.name = "radial";
  ms.fn = [root](const Vector& x) { return (*root * x).norm(); };
  const double d = static_cast<double>(a.dim());
  if (!nu) {
    ms.mean = chi_mean(d);
    ms.variance = d - ms.mean * ms.mean;
  } else {
    // ||A^{1/2} x|| = chi_d * sqrt(nu / chisq_nu) for the Student-t target.
    const double inv_sqrt_w = std::exp(std::lgamma(0.5 * (*nu - 1.0)) - std::lgamma(0.5 * *nu)) /
                              std::numbers::sqrt2;
    ms.mean = chi_mean(d) * std::sqrt(*nu) * inv_sqrt_w;
    ms.variance = d * *nu / (*nu - 2.0) - ms.mean * ms.mean;
  }
  return ms;
}
}  // namespace detail

inline BuiltTarget build_target(const TargetSpec& spec) {
  BuiltTarget out;
  if (spec.name == "gaussian") {
    SpdMatrix a = random_spd(spec.dim, spec.eig_min, spec.eig_max, spec.spd_seed);
    out.density = gaussian_target(a);
    out.bias_moments.push_back(detail::radial_moment(a, std::nullopt));
  } else if (spec.name == "student_t") {
    SpdMatrix a = random_spd(spec.dim, spec.eig_min, spec.eig_max, spec.spd_seed);
    out.density = student_t_target(a, spec.nu);
    out.bias_moments.push_back(detail::radial_moment(a, spec.nu));
  } else if (spec.name == "funnel") {
    out.density = neals_funnel(spec.dim, spec.sigma);
    out.bias_moments = out.density.reference_moments()->bias_moments;
  } else {
    throw ConfigError("target/name: unknown target '" + spec.name + "'");
  }
  return out;
}

inline Json list_targets() {
  Json j = Json::array();
  j.push_back({{"name", "gaussian"},
               {"parameters", "dim, eig_min, eig_max, spd_seed"},
               {"notes", "precision matrix with linearly spaced spectrum and random basis"}});
  j.push_back({{"name", "student_t"},
               {"parameters", "dim, eig_min, eig_max, spd_seed, nu"},
               {"notes", "heavy-tailed; nu > 2 so the covariance exists"}});
  j.push_back({{"name", "funnel"},
               {"parameters", "dim, sigma"},
               {"notes", "scale coordinate x with y_i | x ~ N(0, e^x)"}});
  return j;
}

// ---------------------------------------------------------------------------
// Preparation: mode finding and optional curvature rescaling
// ---------------------------------------------------------------------------

struct PreparedExperiment {
  TargetDensity sampling_target;           // what the sampler actually runs on
  Vector start;                            // mode in the sampling space
  std::optional<Vector> pullback_scales;   // set when rescaled
  std::vector<MomentSpec> bias_moments;    // composed into the sampling space
  std::optional<std::string> skip_reason;  // improper posterior or mode failure
  long preprocessing_gradients = 0;
};

inline PreparedExperiment prepare_experiment(const BuiltTarget& built, bool do_rescale,
                                             double eps) {
  PreparedExperiment prep;
  const Eigen::Index d = built.density.dim();
  ModeResult mode;
  try {
    mode = find_mode(built.density, Vector::Zero(d));
  } catch (const ImproperPosteriorError& e) {
    prep.skip_reason = e.what();
    return prep;
  }
  prep.preprocessing_gradients = mode.gradient_evals;
  if (!mode.converged) {
    prep.skip_reason = "mode search did not converge within the iteration budget";
    return prep;
  }
  if (do_rescale) {
    RescaledTarget scaled = rescale(built.density, mode.mode, eps);
    prep.preprocessing_gradients += 2 * d;  // central differences along each axis
    prep.sampling_target = scaled.as_target();
    prep.start = scaled.push_forward(mode.mode);
    prep.pullback_scales = scaled.scales();
    Vector a = scaled.scales();
    for (const MomentSpec& ms : built.bias_moments) {
      MomentSpec wrapped = ms;
      auto fn = ms.fn;
      wrapped.fn = [fn, a](const Vector& z) { return fn(a.cwiseProduct(z)); };
      prep.bias_moments.push_back(std::move(wrapped));
    }
  } else {
    prep.sampling_target = built.density;
    prep.start = mode.mode;
    prep.bias_moments = built.bias_moments;
  }
  return prep;
}

// ---------------------------------------------------------------------------
// Acceptance-based step tuning
// ---------------------------------------------------------------------------

/// Start at h = 1 and divide by sqrt(2) until the observed acceptance over a
/// probe window reaches 1 - h/4.
inline double tune_step_size(const ExperimentConfig& c, const PreparedExperiment& prep) {
  double h = 1.0;
  const int n = c.particles / 2;
  for (int iter = 0; iter < 60; ++iter) {
    double eta = c.sampler.eta;
    if (c.sampler.eta_gamma) eta = eta_from_gamma(*c.sampler.eta_gamma, h, c.sampler.eta_convention);
    ResolvedSchedule probe;
    probe.burn_in = c.tune_probe_sweeps / 2;
    probe.sweeps = c.tune_probe_sweeps;
    probe.thin = 1;
    SamplerConfig cfg = make_sampler_config(c, h, eta, probe);
    RunOptions opts;
    opts.init_positions = std::vector<Vector>(2 * n, prep.start);
    RunRecord rec = run_sampler(prep.sampling_target, cfg,
                                derive_key(c.seed, static_cast<std::uint64_t>(StreamKind::tuning),
                                           static_cast<std::uint64_t>(iter)),
                                n, opts);
    if (rec.acceptance_rate_sampling() >= 1.0 - h / 4.0) return h;
    h /= std::numbers::sqrt2;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Experiment execution and reporting
// ---------------------------------------------------------------------------

namespace detail {
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline Json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}
}  // namespace detail

struct CoordinateDiagnostics {
  double mean = 0.0;
  double variance = 0.0;
  double ess_between = std::numeric_limits<double>::quiet_NaN();
  double ess_autocorr = std::numeric_limits<double>::quiet_NaN();
  double rhat = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
  ExperimentConfig config;  // effective configuration (after overrides)
  bool skipped = false;
  std::string skip_reason;
  double resolved_h = 0.0;
  double resolved_eta = 0.0;
  ResolvedSchedule schedule;
  std::vector<RunRecord> records;
  SampleTensor samples;  // pulled back to the base coordinate system
  std::vector<CoordinateDiagnostics> coords;
  EssPerGrad epg_between{std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN()};
  EssPerGrad epg_autocorr{std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
  double max_rhat = std::numeric_limits<double>::quiet_NaN();
  double mcare_value = std::numeric_limits<double>::quiet_NaN();
  std::optional<long> bias_crossing_gradients;
  long gradient_total = 0;
  double wall_seconds = 0.0;
  std::optional<ReferenceMoments> reference;

  std::string sampler_label() const {
    return to_string(config.sampler.kernel) + "/" + to_string(config.sampler.mode);
  }
};

inline std::string diagnostics_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << "target,kernel,mode,coord,mean,variance,ess_between,ess_autocorr,rhat,ref_mean,ref_sd\n";
  for (std::size_t j = 0; j < r.coords.size(); ++j) {
    const CoordinateDiagnostics& c = r.coords[j];
    out << r.config.target.name << ',' << to_string(r.config.sampler.kernel) << ','
        << to_string(r.config.sampler.mode) << ',' << j << ',' << detail::format_double(c.mean)
        << ',' << detail::format_double(c.variance) << ','
        << detail::format_double(c.ess_between) << ',' << detail::format_double(c.ess_autocorr)
        << ',' << detail::format_double(c.rhat) << ',';
    if (r.reference) {
      out << detail::format_double(r.reference->mean[static_cast<Eigen::Index>(j)]) << ','
          << detail::format_double(
                 std::sqrt(r.reference->covariance(static_cast<Eigen::Index>(j),
                                                   static_cast<Eigen::Index>(j))));
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

inline ExperimentResult run_experiment(ExperimentConfig config, int threads = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  ValidationReport vr = validate_config(config);
  if (!vr.ok()) {
    std::string msg = "config invalid:";
    for (const std::string& v : vr.violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }

  ExperimentResult result;
  result.config = config;

  BuiltTarget built = build_target(config.target);
  result.reference = built.density.reference_moments();
  PreparedExperiment prep = prepare_experiment(built, config.rescale, config.rescale_eps);
  if (prep.skip_reason) {
    result.skipped = true;
    result.skip_reason = *prep.skip_reason;
    return result;
  }

  double h = config.sampler.h_max;
  if (config.tune_acceptance) h = tune_step_size(config, prep);
  double eta = config.sampler.eta;
  if (config.sampler.eta_gamma) {
    eta = eta_from_gamma(*config.sampler.eta_gamma, h, config.sampler.eta_convention);
  }
  result.resolved_h = h;
  result.resolved_eta = eta;
  result.schedule = resolve_schedule(config.schedule, h);
  SamplerConfig cfg = make_sampler_config(config, h, eta, result.schedule);

  const int n = config.particles / 2;
  RunOptions opts;
  opts.init_positions = std::vector<Vector>(2 * n, prep.start);
  for (const MomentSpec& ms : prep.bias_moments) opts.moment_fns.push_back(ms.fn);

  // Runs are independent; each owns a seed derived from (root seed, run index),
  // so any execution order (and any thread count) produces identical records.
  result.records.resize(config.runs);
  std::vector<std::exception_ptr> errors(config.runs);
  auto do_run = [&](int r) {
    try {
      result.records[r] = run_sampler(prep.sampling_target, cfg,
                                      derive_key(config.seed, 0x5eedULL,
                                                 static_cast<std::uint64_t>(r)),
                                      n, opts);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };
  const int workers = std::max(1, std::min<int>(threads, config.runs));
  if (workers == 1) {
    for (int r = 0; r < config.runs; ++r) do_run(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < config.runs; r = next.fetch_add(1)) do_run(r);
      });
    }
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Pull samples back to the base coordinates when the run was rescaled.
  result.samples.data.resize(config.runs);
  for (int r = 0; r < config.runs; ++r) {
    result.samples.data[r].reserve(result.records[r].samples.size());
    for (const Matrix& chain : result.records[r].samples) {
      if (prep.pullback_scales) {
        result.samples.data[r].push_back(chain * prep.pullback_scales->asDiagonal());
      } else {
        result.samples.data[r].push_back(chain);
      }
    }
    result.gradient_total += result.records[r].gradient_total();
  }

  if (result.records[0].kept >= 2) {
    const SampleTensor windowed = result.samples.tail_window(config.ess_window);
    const Eigen::Index d = windowed.dim();
    result.coords.resize(d);
    std::vector<double> ess_b(d), ess_a(d);
    std::vector<double> rhats;
    for (Eigen::Index j = 0; j < d; ++j) {
      CoordinateDiagnostics& cd = result.coords[j];
      // Pooled moments over the window.
      std::vector<double> pooled;
      for (const auto& run : windowed.data)
        for (const Matrix& chain : run)
          for (Eigen::Index i = 0; i < chain.rows(); ++i) pooled.push_back(chain(i, j));
      double mean = 0.0;
      for (double v : pooled) mean += v;
      mean /= static_cast<double>(pooled.size());
      double var = 0.0;
      for (double v : pooled) var += (v - mean) * (v - mean);
      var /= static_cast<double>(pooled.size() - 1);
      cd.mean = mean;
      cd.variance = var;

      if (windowed.runs() >= 2) cd.ess_between = ess_between_run(windowed, j).ess;
      double ess_sum = 0.0;
      for (const auto& run : windowed.data) {
        for (const Matrix& chain : run) {
          if (chain.rows() >= 10) {
            EssResult er = ess_autocorrelation(chain.col(j));
            ess_sum += er.degenerate ? 0.0 : er.ess;
          }
        }
      }
      cd.ess_autocorr = ess_sum;

      // R-hat pools every (run, particle) series over the full sampling phase.
      std::vector<Vector> chains;
      for (const auto& run : result.samples.data)
        for (const Matrix& chain : run) chains.push_back(chain.col(j));
      RhatResult rr = gelman_rubin(chains);
      cd.rhat = rr.degenerate ? std::numeric_limits<double>::quiet_NaN() : rr.rhat;
      if (!rr.degenerate) rhats.push_back(rr.rhat);
      ess_b[j] = cd.ess_between;
      ess_a[j] = cd.ess_autocorr;
    }
    if (!rhats.empty()) result.max_rhat = *std::max_element(rhats.begin(), rhats.end());
    if (result.gradient_total > 0) {
      if (windowed.runs() >= 2) result.epg_between = ess_per_grad(ess_b, result.gradient_total);
      result.epg_autocorr = ess_per_grad(ess_a, result.gradient_total);
    }

    if (result.reference) {
      Vector means(d);
      for (Eigen::Index j = 0; j < d; ++j) means[j] = result.coords[j].mean;
      Vector ref_sd = result.reference->covariance.diagonal().cwiseSqrt();
      result.mcare_value = mcare(means, result.reference->mean, ref_sd);
    }
  }

  // Bias trace: sweep-wise cross-chain means averaged over runs, then
  // cumulatively averaged inside bias_trace. Gradient counts per sweep are
  // identical across runs (gradient spend never depends on acceptance).
  if (!prep.bias_moments.empty() && result.records[0].moment_trace.rows() > 0) {
    Matrix avg = result.records[0].moment_trace;
    for (int r = 1; r < config.runs; ++r) avg += result.records[r].moment_trace;
    avg /= static_cast<double>(config.runs);
    std::vector<MomentSpec> x_moments = built.bias_moments;  // exact values live in x space
    BiasTraceResult bt = bias_trace(avg, result.records[0].grads_at_sweep, x_moments);
    result.bias_crossing_gradients = bt.crossing_gradients;
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

// ---------------------------------------------------------------------------
// Output files: diagnostics CSV, manifest JSON, optional raw samples
// ---------------------------------------------------------------------------

inline Json make_manifest(const ExperimentResult& r) {
  Json m;
  m["library_version"] = kLibraryVersion;
  m["config"] = to_json(r.config);
  m["content_hash"] =
      detail::hex64(detail::fnv1a(serialize_config(r.config).data(), serialize_config(r.config).size()));
  m["sampler_label"] = r.sampler_label();
  m["target_signature"] = to_json(r.config.target);
  if (r.skipped) {
    m["skipped"] = {{"reason", r.skip_reason}};
    return m;
  }
  m["skipped"] = nullptr;
  m["resolved"] = {{"h", r.resolved_h},
                   {"eta", r.resolved_eta},
                   {"burn_in", r.schedule.burn_in},
                   {"sweeps", r.schedule.sweeps},
                   {"thin", r.schedule.thin},
                   {"restart_period", r.schedule.restart_period},
                   {"restart_last", r.schedule.restart_last}};
  Json per_run = Json::array();
  for (const RunRecord& rec : r.records) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Matrix& chain : rec.samples) {
      h = detail::fnv1a(chain.data(), sizeof(double) * static_cast<std::size_t>(chain.size()), h);
    }
    per_run.push_back({{"acceptance_burnin", rec.acceptance_rate_burnin()},
                       {"acceptance_sampling", rec.acceptance_rate_sampling()},
                       {"gradients",
                        {{"warmup", rec.grads_warmup},
                         {"burnin", rec.grads_burnin},
                         {"sampling", rec.grads_sampling}}},
                       {"covariance_evals", rec.covariance_evals},
                       {"restarts", rec.restarts_fired},
                       {"sample_hash", detail::hex64(h)}});
  }
  m["per_run"] = per_run;
  m["diagnostics"] = {
      {"gradient_total", r.gradient_total},
      {"median_ess_per_grad_between", detail::finite_or_null(r.epg_between.median)},
      {"min_ess_per_grad_between", detail::finite_or_null(r.epg_between.min)},
      {"median_ess_per_grad_autocorr", detail::finite_or_null(r.epg_autocorr.median)},
      {"min_ess_per_grad_autocorr", detail::finite_or_null(r.epg_autocorr.min)},
      {"max_rhat", detail::finite_or_null(r.max_rhat)},
      {"mcare", detail::finite_or_null(r.mcare_value)},
      {"bias_crossing_gradients",
       r.bias_crossing_gradients ? Json(*r.bias_crossing_gradients) : Json(nullptr)}};
  m["wall_clock_seconds"] = r.wall_seconds;
  return m;
}

inline void write_samples(const ExperimentResult& r, const std::filesystem::path& dir) {
  if (r.config.emit_samples == "none" || r.skipped) return;
  const SampleTensor& t = r.samples;
  if (r.config.emit_samples == "binary") {
    std::ofstream bin(dir / "samples.bin", std::ios::binary);
    for (const auto& run : t.data) {
      for (const Matrix& chain : run) {
        for (Eigen::Index i = 0; i < chain.rows(); ++i) {
          for (Eigen::Index j = 0; j < chain.cols(); ++j) {
            const double v = chain(i, j);
            bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
          }
        }
      }
    }
    Json sidecar = {{"dtype", "float64-le"},
                    {"order", "run,chain,step,dim"},
                    {"runs", t.runs()},
                    {"chains", t.chains()},
                    {"steps", t.steps()},
                    {"dim", t.dim()}};
    std::ofstream(dir / "samples.json") << sidecar.dump(2) << '\n';
  } else {
    std::ofstream csv(dir / "samples.csv");
    csv << "run,chain,step";
    for (Eigen::Index j = 0; j < t.dim(); ++j) csv << ",x" << j;
    csv << '\n';
    for (int r_i = 0; r_i < t.runs(); ++r_i) {
      for (int c_i = 0; c_i < t.chains(); ++c_i) {
        const Matrix& chain = t.data[r_i][c_i];
        for (Eigen::Index s = 0; s < chain.rows(); ++s) {
          csv << r_i << ',' << c_i << ',' << s;
          for (Eigen::Index j = 0; j < chain.cols(); ++j) {
            csv << ',' << detail::format_double(chain(s, j));
          }
          csv << '\n';
        }
      }
    }
  }
}

/// Write diagnostics.csv and manifest.json (plus optional samples) to out_dir.
inline std::filesystem::path write_outputs(const ExperimentResult& r,
                                           const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream(out_dir / "diagnostics.csv") << diagnostics_csv(r);
  std::ofstream(out_dir / "manifest.json") << make_manifest(r).dump(2) << '\n';
  write_samples(r, out_dir);
  return out_dir / "manifest.json";
}

// ---------------------------------------------------------------------------
// Comparison tables from manifests
// ---------------------------------------------------------------------------

struct TableResult {
  std::string text;
  std::string csv;
};

inline TableResult make_table(const std::vector<Json>& manifests) {
  if (manifests.empty()) throw ConfigError("table: need at least one manifest");
  struct Row {
    std::string sampler;
    std::string target;
    Json diag;
    bool skipped = false;
  };
  std::vector<Row> rows;
  std::map<std::string, Json> signatures;
  std::vector<std::string> targets_in_order;
  std::vector<std::string> samplers_in_order;
  for (const Json& m : manifests) {
    Row row;
    row.sampler = m.at("sampler_label").get<std::string>();
    const Json& sig = m.at("target_signature");
    row.target = sig.at("name").get<std::string>();
    auto it = signatures.find(row.target);
    if (it == signatures.end()) {
      signatures.emplace(row.target, sig);
      targets_in_order.push_back(row.target);
    } else if (it->second != sig) {
      throw ConfigError("table: manifests disagree on target '" + row.target +
                        "': " + it->second.dump() + " vs " + sig.dump());
    }
    row.skipped = !m.at("skipped").is_null();
    if (!row.skipped) row.diag = m.at("diagnostics");
    if (std::find(samplers_in_order.begin(), samplers_in_order.end(), row.sampler) ==
        samplers_in_order.end()) {
      samplers_in_order.push_back(row.sampler);
    }
    rows.push_back(std::move(row));
  }

  const std::vector<std::pair<std::string, std::string>> metrics = {
      {"median_ess_per_grad", "median_ess_per_grad_between"},
      {"min_ess_per_grad", "min_ess_per_grad_between"},
      {"grads_to_low_bias", "bias_crossing_gradients"},
      {"max_rhat", "max_rhat"}};

  auto cell = [&](const std::string& sampler, const std::string& target,
                  const std::string& key) -> std::string {
    for (const Row& row : rows) {
      if (row.sampler != sampler || row.target != target) continue;
      if (row.skipped || !row.diag.contains(key) || row.diag.at(key).is_null()) return "-";
      if (row.diag.at(key).is_number_integer()) {
        return std::to_string(row.diag.at(key).get<long>());
      }
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3g", row.diag.at(key).get<double>());
      return buf;
    }
    return "-";
  };

  std::ostringstream text, csv;
  csv << "metric,sampler,target,value\n";
  for (const auto& [label, key] : metrics) {
    text << label << "\n";
    std::size_t width = 24;
    text << "  " << std::string(width, ' ');
    for (const std::string& t : targets_in_order) {
      text << ' ' << t << std::string(t.size() < 14 ? 14 - t.size() : 1, ' ');
    }
    text << '\n';
    for (const std::string& s : samplers_in_order) {
      text << "  " << s << std::string(s.size() < width ? width - s.size() : 1, ' ');
      for (const std::string& t : targets_in_order) {
        const std::string v = cell(s, t, key);
        text << ' ' << v << std::string(v.size() < 14 ? 14 - v.size() : 1, ' ');
        csv << label << ',' << s << ',' << t << ',' << (v == "-" ? "" : v) << '\n';
      }
      text << '\n';
    }
    text << '\n';
  }
  return {text.str(), csv.str()};
}

}  // namespace twosys
