// Benchmark CLI for the two-system samplers: run experiments from config
// files, validate configs, compare result manifests, list built-in targets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twosys/twosys.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw twosys::ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir, std::optional<std::string> emit, int threads) {
  twosys::ExperimentConfig cfg = twosys::parse_config(read_file(config_path));
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.out_dir = *out_dir;
  if (emit) {
    if (*emit != "none" && *emit != "binary" && *emit != "csv") {
      throw twosys::ConfigError("--emit-samples: must be none, binary or csv");
    }
    cfg.emit_samples = *emit;
  }
  twosys::ExperimentResult result = twosys::run_experiment(cfg, threads);
  const auto manifest_path = twosys::write_outputs(result, cfg.out_dir);
  if (result.skipped) {
    std::cout << "run skipped: " << result.skip_reason << "\n";
  } else {
    std::cout << "sampler " << result.sampler_label() << " on " << cfg.target.name
              << ": acceptance " << result.records[0].acceptance_rate_sampling()
              << ", gradients " << result.gradient_total << "\n";
  }
  std::cout << "wrote " << manifest_path.string() << "\n";
  return 0;
}

int cmd_validate(const std::string& config_path) {
  twosys::ExperimentConfig cfg = twosys::parse_config(read_file(config_path));
  twosys::ValidationReport rep = twosys::validate_config(cfg);
  std::cout << rep.violations.size() << " violations\n";
  for (const std::string& v : rep.violations) std::cout << "  " << v << "\n";
  std::cout << "resolved: " << rep.resolved.dump(2) << "\n";
  return 0;
}

int cmd_table(const std::vector<std::string>& manifest_paths, const std::string& csv_out) {
  std::vector<twosys::Json> manifests;
  for (const std::string& p : manifest_paths) {
    manifests.push_back(twosys::Json::parse(read_file(p)));
  }
  twosys::TableResult table = twosys::make_table(manifests);
  std::cout << table.text;
  if (!csv_out.empty()) {
    std::ofstream(csv_out) << table.csv;
    std::cout << "wrote " << csv_out << "\n";
  }
  return 0;
}

int cmd_targets() {
  std::cout << twosys::list_targets().dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-system ensemble/adaptive Langevin sampler benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> emit;
  int threads = 1;

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", config_path, "config file path")->required();
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--emit-samples", emit, "none|binary|csv");
  run->add_option("--threads", threads, "worker threads (speed only, never results)");

  CLI::App* validate = app.add_subcommand("validate", "check a config and print resolved values");
  validate->add_option("--config", config_path, "config file path")->required();

  std::vector<std::string> manifest_paths;
  std::string table_csv;
  CLI::App* table = app.add_subcommand("table", "compare result manifests");
  table->add_option("manifests", manifest_paths, "manifest.json paths")->required();
  table->add_option("--csv", table_csv, "also write the table as CSV");

  app.add_subcommand("targets", "list built-in targets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, out_dir, emit, threads);
    if (validate->parsed()) return cmd_validate(config_path);
    if (table->parsed()) return cmd_table(manifest_paths, table_csv);
    return cmd_targets();
  } catch (const twosys::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}
