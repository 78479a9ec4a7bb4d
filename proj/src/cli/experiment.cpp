#include "mfginv/cli/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "mfginv/errors.hpp"
#include "mfginv/hopfcole.hpp"
#include "mfginv/io.hpp"

namespace mfginv::cli {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json forward_summary(const ForwardResult& r) {
  return {{"status", r.converged() ? "Converged" : "MaxIterReached"},
          {"iterations", r.iterations},
          {"hjb_fp_solves", r.hjb_fp_solves},
          {"final_residual", r.final_residual()}};
}

// State shared by the mode handlers of one run.
class Run {
 public:
  explicit Run(const ExperimentConfig& cfg) : cfg_(cfg), dir_(cfg.output_dir), problem_(build_problem(cfg)) {
    outcome_.name = cfg.name;
    outcome_.mode = to_string(cfg.mode);
    meta_["tool"] = "mfginv";
    meta_["config"] = to_json(cfg);
  }

  RunOutcome execute() {
    const auto t0 = Clock::now();
    switch (cfg_.mode) {
      case Mode::Forward: forward(); break;
      case Mode::GenerateMeasurement: generate(); break;
      case Mode::Diagnostics: diagnostics_mode(); break;
      default: inverse(); break;
    }
    outcome_.seconds = since(t0);
    return outcome_;
  }

  // Writes meta.json and report.json; called on every exit path.
  void finish() {
    write_text(dir_ / "meta.json", meta_.dump(2) + "\n");
    report_["name"] = outcome_.name;
    report_["mode"] = outcome_.mode;
    report_["status"] = outcome_.status;
    report_["message"] = outcome_.message;
    report_["exit_code"] = outcome_.exit_code;
    report_["converged"] = outcome_.converged;
    report_["outer_iters"] = outcome_.outer_iters;
    report_["hjb_fp_solves"] = outcome_.hjb_fp_solves;
    report_["meas_rel_err"] = optional_number(outcome_.meas_rel_err);
    report_["q_rel_err"] = optional_number(outcome_.q_rel_err);
    timings_["total"] = outcome_.seconds;
    report_["timings_seconds"] = timings_;
    report_["files"] = files_;
    report_["config"] = meta_["config"];
    write_text(dir_ / "report.json", report_.dump(2) + "\n");
  }

  RunOutcome& outcome() { return outcome_; }

 private:
  void spatial(const std::string& name, const SpatialField& f) {
    write_spatial_csv(dir_ / name, f);
    files_.push_back(name);
  }
  void spacetime(const std::string& name, const SpaceTimeField& f) {
    write_spacetime_csv(dir_ / name, f);
    files_.push_back(name);
  }

  const SpatialField& truth_q() const {
    if (!problem_.q()) throw InvalidArgument("this mode needs a truth potential");
    return *problem_.q();
  }

  ForwardResult timed_forward(const char* phase, const SpatialField& q, const FicPlayParams& params,
                              const std::optional<SpaceTimeField>& warm = std::nullopt) {
    const auto t0 = Clock::now();
    ForwardResult r = fictitious_play(problem_, q, warm, params);
    timings_[phase] = timings_.value(phase, 0.0) + since(t0);
    return r;
  }

  // Truth solve shared by generate-measurement, inline generation and
  // diagnostics. Throws SolverFailure when it does not reach tolerance.
  const ForwardResult& truth() {
    if (truth_) return *truth_;
    truth_ = timed_forward("generate", truth_q(), cfg_.measurement.forward);
    json m = forward_summary(*truth_);
    m["tol"] = cfg_.measurement.forward.tol;
    meta_["truth_forward"] = m;
    if (!truth_->converged()) {
      report_["truth_forward"] = m;
      throw SolverFailure("truth forward solve stopped at residual " + format_double(truth_->final_residual()) +
                          " after " + std::to_string(truth_->iterations) + " iterations (tol " +
                          format_double(cfg_.measurement.forward.tol) + ")");
    }
    return *truth_;
  }

  void write_truth_bundle() {
    const ForwardResult& t = truth();
    spatial("phi0.csv", t.phi.slice(0));
    spacetime("rho_truth.csv", t.rho);
    spacetime("phi_truth.csv", t.phi);
    write_forward_history_csv(dir_ / "forward_history.csv", t);
    files_.push_back("forward_history.csv");
    meta_["measurement"] = {{"source", "generate"}, {"phi0_fnv1a", hex64(fnv1a(read_file(dir_ / "phi0.csv")))}};
  }

  void forward() {
    const ForwardResult r = timed_forward("forward", truth_q(), cfg_.forward);
    spacetime("rho.csv", r.rho);
    spacetime("phi.csv", r.phi);
    write_forward_history_csv(dir_ / "forward_history.csv", r);
    files_.push_back("forward_history.csv");
    report_["forward"] = forward_summary(r);
    meta_["forward_result"] = forward_summary(r);
    forward_outcome(r);
  }

  void generate() {
    write_truth_bundle();
    forward_outcome(*truth_);
  }

  void forward_outcome(const ForwardResult& r) {
    outcome_.converged = r.converged();
    outcome_.status = r.converged() ? "Converged" : "MaxIterReached";
    outcome_.exit_code = r.converged() ? kExitOk : kExitNotConverged;
    outcome_.outer_iters = r.iterations;
    outcome_.hjb_fp_solves = r.hjb_fp_solves;
  }

  Measurement measurement() {
    if (cfg_.measurement.source == MeasurementSpec::Source::Generate) {
      write_truth_bundle();
      return Measurement(truth_->phi.slice(0));
    }
    const auto& path = cfg_.measurement.path;
    Measurement m(read_spatial_csv(path, problem_.grid()));
    meta_["measurement"] = {{"source", "file"},
                            {"path", path.generic_string()},
                            {"phi0_fnv1a", hex64(fnv1a(read_file(path)))}};
    return m;
  }

  void inverse() {
    const Measurement m = measurement();
    InverseConfig icfg = cfg_.inverse;
    icfg.q0 = resolve_field(cfg_.q0_spec, problem_, cfg_.seed);
    spatial("q0.csv", *icfg.q0);

    const auto t0 = Clock::now();
    InverseResult r;
    switch (cfg_.mode) {
      case Mode::Eci: r = run_eci(problem_, m, icfg); break;
      case Mode::Bri: r = run_bri(problem_, m, icfg); break;
      case Mode::BriStaticRestart: r = run_bri_static_restart(problem_, m, icfg); break;
      case Mode::Heci: r = run_heci(problem_, m, icfg); break;
      case Mode::Linpara: r = run_linpara_inversion(problem_, m, icfg); break;
      default: throw InvalidArgument("not an inverse mode");
    }
    timings_["inverse"] = since(t0);

    write_inverse_history_csv(dir_ / "history.csv", r.history, cfg_.mode == Mode::Heci);
    files_.push_back("history.csv");
    spatial("q.csv", r.q);
    if (!r.phi.values().empty()) spatial("phi0_final.csv", r.phi.slice(0));
    if (problem_.q()) spatial("q_true.csv", *problem_.q());

    outcome_.converged = r.converged();
    outcome_.status = to_string(r.status);
    outcome_.message = r.message;
    outcome_.exit_code = r.converged() ? kExitOk : kExitNotConverged;
    outcome_.outer_iters = r.iterations;
    outcome_.hjb_fp_solves = cfg_.mode == Mode::Heci ? static_cast<long>(r.hjb_fp_solves()) : r.hjb_fp_solves();
    if (!r.history.empty()) outcome_.meas_rel_err = r.meas_rel_err();
    outcome_.q_rel_err = r.q_rel_err;
    report_["inverse"] = {{"status", to_string(r.status)},
                          {"iterations", r.iterations},
                          {"forward_failures", r.forward_failures},
                          {"hjb_fp_solves", r.hjb_fp_solves()},
                          {"fine_equiv_solves", r.fine_equiv_solves()}};

    // Diagnostics of the returned estimate against the truth.
    if (problem_.q() && r.status != InverseStatus::Diverged && r.q.all_finite()) {
      try {
        const ForwardResult& t = truth();
        const ForwardResult hat = timed_forward("diagnostics", r.q, cfg_.forward,
                                                r.rho.values().empty() ? std::nullopt
                                                                       : std::optional<SpaceTimeField>(r.rho));
        const UpdateDiagnostics d = mfginv::diagnostics(*problem_.q(), r.q, t.phi, hat.phi, t.rho, hat.rho, problem_);
        write_diagnostics_csv(dir_ / "diagnostics.csv", d);
        files_.push_back("diagnostics.csv");
      } catch (const Error& e) {
        report_["diagnostics_error"] = e.what();
      }
    }
  }

  void diagnostics_mode() {
    const ForwardResult& t = truth();
    const SpatialField q_hat = resolve_field(cfg_.q_hat_spec, problem_, cfg_.seed);
    const ForwardResult hat = timed_forward("diagnostics", q_hat, cfg_.forward);
    const UpdateDiagnostics d = mfginv::diagnostics(truth_q(), q_hat, t.phi, hat.phi, t.rho, hat.rho, problem_);
    spatial("q_hat.csv", q_hat);
    write_diagnostics_csv(dir_ / "diagnostics.csv", d);
    files_.push_back("diagnostics.csv");
    report_["diagnostics"] = {{"max_abs_q_minus_qhat", d.q_minus_qhat.max_abs()},
                              {"max_abs_correction", d.correction.max_abs()},
                              {"max_abs_error", d.error.max_abs()},
                              {"min_pec", d.pec.min()},
                              {"hat_forward", forward_summary(hat)}};
    outcome_.converged = hat.converged();
    outcome_.status = hat.converged() ? "Converged" : "MaxIterReached";
    outcome_.exit_code = hat.converged() ? kExitOk : kExitNotConverged;
    outcome_.hjb_fp_solves = t.hjb_fp_solves + hat.hjb_fp_solves;
    outcome_.q_rel_err = relative_error(q_hat, truth_q());
  }

  const ExperimentConfig& cfg_;
  std::filesystem::path dir_;
  MfgProblem problem_;
  std::optional<ForwardResult> truth_;
  RunOutcome outcome_;
  json meta_ = json::object();
  json report_ = json::object();
  json timings_ = json::object();
  json files_ = json::array();
};

std::string csv_number(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  std::optional<Run> run;
  RunOutcome failed;
  failed.name = cfg.name;
  failed.mode = to_string(cfg.mode);
  failed.status = "Error";
  try {
    run.emplace(cfg);
    RunOutcome out = run->execute();
    run->finish();
    return out;
  } catch (const std::exception& e) {
    failed.message = e.what();
  }
  failed.seconds = since(t0);
  if (run) {
    RunOutcome& o = run->outcome();
    o.status = failed.status;
    o.message = failed.message;
    o.exit_code = kExitError;
    o.converged = false;
    o.seconds = failed.seconds;
    try {
      run->finish();
    } catch (const std::exception& e) {
      o.message += "; could not write report: " + std::string(e.what());
    }
    return o;
  }
  return failed;
}

std::string summary_csv(const std::vector<RunOutcome>& rows) {
  std::string s = "name,mode,converged,outer_iters,hjb_fp_solves,meas_rel_err,q_rel_err,seconds\n";
  for (const auto& r : rows) {
    s += r.name + ',' + r.mode + ',' + (r.converged ? "true" : "false") + ',' + std::to_string(r.outer_iters) + ',' +
         std::to_string(r.hjb_fp_solves) + ',' + csv_number(r.meas_rel_err) + ',' + csv_number(r.q_rel_err) + ',' +
         format_double(r.seconds) + '\n';
  }
  return s;
}

std::vector<RunOutcome> run_batch(const std::vector<std::filesystem::path>& configs,
                                  const std::filesystem::path& summary_path,
                                  const std::optional<std::filesystem::path>& out_root, int jobs) {
  std::vector<RunOutcome> rows(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        ExperimentConfig cfg = load_config(configs[i]);
        if (out_root) cfg.output_dir = *out_root / cfg.name;
        rows[i] = run_experiment(cfg);
      } catch (const std::exception& e) {
        RunOutcome& r = rows[i];
        r.name = configs[i].stem().string();
        r.mode = "unknown";
        r.status = "Error";
        r.message = e.what();
      }
    }
  };
  const int n = std::clamp(jobs, 1, std::max(1, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  write_text(summary_path, summary_csv(rows));
  return rows;
}

}  // namespace mfginv::cli
