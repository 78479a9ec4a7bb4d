#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfginv/cli/config.hpp"

namespace mfginv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

/// One summary row; also the return value of a single run.
struct RunOutcome {
  std::string name;
  std::string mode;
  int exit_code = kExitError;
  std::string status;  // solver status, or "Error"
  std::string message;
  bool converged = false;
  int outer_iters = 0;
  long hjb_fp_solves = 0;
  std::optional<double> meas_rel_err;
  std::optional<double> q_rel_err;
  double seconds = 0.0;
};

/// Runs the configured mode and writes its artifacts under cfg.output_dir:
/// meta.json (resolved parameters, measurement provenance) and report.json
/// (status, counters, timings, file list) always; plus, by mode,
///   forward:              rho.csv, phi.csv, forward_history.csv
///   generate-measurement: phi0.csv, rho_truth.csv, phi_truth.csv, forward_history.csv
///   inverse modes:        history.csv, q.csv, phi0_final.csv, and when the truth
///                         is known q_true.csv and diagnostics.csv
///   diagnostics:          diagnostics.csv
/// Solver and I/O failures are reported through the outcome, never thrown.
RunOutcome run_experiment(const ExperimentConfig& cfg);

/// Loads each config, runs it, and writes `summary.csv` with columns
/// name,mode,converged,outer_iters,hjb_fp_solves,meas_rel_err,q_rel_err,seconds
/// in input order. A config that fails to load yields an error row. When
/// `out_root` is set each run writes to out_root/<name>. Up to `jobs`
/// configs run concurrently.
std::vector<RunOutcome> run_batch(const std::vector<std::filesystem::path>& configs,
                                  const std::filesystem::path& summary_path,
                                  const std::optional<std::filesystem::path>& out_root, int jobs);

std::string summary_csv(const std::vector<RunOutcome>& rows);

}  // namespace mfginv::cli
