#include "mfginv/cli/app.hpp"

#include <glob.h>

#include <algorithm>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mfginv/cli/experiment.hpp"
#include "mfginv/io.hpp"

namespace mfginv::cli {

namespace {

std::vector<std::filesystem::path> expand_glob(const std::string& pattern) {
  std::vector<std::filesystem::path> out;
  glob_t g{};
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

void print_outcome(const RunOutcome& r) {
  std::cout << r.name << " [" << r.mode << "]: " << r.status;
  if (r.meas_rel_err) std::cout << "  meas_rel_err=" << format_double(*r.meas_rel_err);
  if (r.q_rel_err) std::cout << "  q_rel_err=" << format_double(*r.q_rel_err);
  std::cout << "  iters=" << r.outer_iters << "  solves=" << r.hjb_fp_solves << "\n";
  if (!r.message.empty()) std::cerr << r.name << ": " << r.message << "\n";
}

int single(const std::string& config, const std::optional<std::string>& mode, const std::string& out) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config, mode);
  } catch (const ConfigError& e) {
    std::cerr << config << ": " << e.what() << "\n";
    return kExitError;
  }
  if (!out.empty()) cfg.output_dir = out;
  const RunOutcome r = run_experiment(cfg);
  print_outcome(r);
  return r.exit_code;
}

}  // namespace

int main_cli(int argc, char** argv) {
  CLI::App app{"Inverse potential recovery for mean-field games"};
  app.require_subcommand(1);

  std::string config, mode, out, pattern, summary;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("--config", config, "Config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "Override the config mode");
  run->add_option("--out", out, "Output directory");

  auto* gen = app.add_subcommand("generate", "Generate a twin-experiment measurement");
  gen->add_option("--config", config, "Config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory");

  auto* batch = app.add_subcommand("batch", "Run every config matching a glob");
  batch->add_option("--configs", pattern, "Glob of config files")->required();
  batch->add_option("--out", out, "Root directory; each run writes to <out>/<name>");
  batch->add_option("--summary", summary, "Summary CSV path (default <out>/summary.csv or ./summary.csv)");
  batch->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  if (*run) return single(config, mode.empty() ? std::nullopt : std::optional<std::string>(mode), out);
  if (*gen) return single(config, std::string("generate-measurement"), out);

  const auto files = expand_glob(pattern);
  std::optional<std::filesystem::path> root;
  if (!out.empty()) root = out;
  const std::filesystem::path summary_path =
      !summary.empty() ? std::filesystem::path(summary) : (root ? *root / "summary.csv" : "summary.csv");
  try {
    const auto rows = run_batch(files, summary_path, root, jobs);
    for (const auto& r : rows) print_outcome(r);
    std::cout << "summary: " << summary_path.string() << " (" << rows.size() << " runs)\n";
  } catch (const std::exception& e) {
    std::cerr << "batch: " << e.what() << "\n";
    return kExitError;
  }
  // Per-run failures are isolated in the summary.
  return kExitOk;
}

}  // namespace mfginv::cli
