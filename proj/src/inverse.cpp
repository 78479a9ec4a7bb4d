#include "mfginv/inverse.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "mfginv/errors.hpp"

namespace mfginv {

namespace {

using Clock = std::chrono::steady_clock;

enum class Inner { Converge, FixedSteps, FixedStepsStaticRestart };
enum class StopOn { Measurement, MResidual };

struct LevelRun {
  const MfgProblem* problem;
  SpatialField m_target;
  SpatialField phi0_meas;
  std::optional<SpatialField> q_true;
  StopOn stop_on;
  double tol;
  int level;
  double work_weight;
};

struct LoopState {
  SpatialField q;
  std::optional<SpaceTimeField> rho;
  long solves = 0;
  double fine_equiv = 0.0;
  int k = 0;
  Clock::time_point start = Clock::now();
};

double safe_norm(const SpatialField& u) {
  const double n = norm_space(u);
  return n > 0.0 ? n : std::numeric_limits<double>::min();
}

FicPlayParams inner_params(const InverseConfig& cfg, Inner inner) {
  if (inner == Inner::Converge) return cfg.forward;
  FicPlayParams p = cfg.forward;
  p.schedule = WeightSchedule::fixed(cfg.bri_delta);
  p.max_iter = cfg.bri_inner_N;
  p.tol = std::numeric_limits<double>::denorm_min();
  return p;
}

// One ECI-type outer loop on a single grid. Appends to `out.history` and
// leaves the final iterate in `state` and `out`.
void run_level(const LevelRun& run, const InverseConfig& cfg, Inner inner, LoopState& state, InverseResult& out) {
  const MfgProblem& problem = *run.problem;
  const FicPlayParams params = inner_params(cfg, inner);
  const double m_norm = safe_norm(run.m_target);
  const double phi0_norm = safe_norm(run.phi0_meas);

  for (int local = 0;; ++local) {
    std::optional<SpaceTimeField> warm = state.rho;
    if (inner == Inner::FixedStepsStaticRestart) warm.reset();

    ForwardResult fr;
    try {
      fr = fictitious_play(problem, state.q, warm, params);
    } catch (const Error& e) {
      out.status = InverseStatus::Diverged;
      out.message = std::string("forward solve failed: ") + e.what();
      return;
    }
    state.solves += fr.hjb_fp_solves;
    state.fine_equiv += fr.hjb_fp_solves * run.work_weight;

    const SpatialField phi0_k = fr.phi.slice(0);
    const SpatialField m_k = measurement_term(phi0_k, problem);
    const SpatialField correction = run.m_target - m_k;

    IterationRecord rec;
    rec.k = state.k;
    rec.meas_rel_err = norm_space(phi0_k - run.phi0_meas) / phi0_norm;
    if (run.q_true) rec.q_rel_err = relative_error(state.q, *run.q_true);
    rec.forward_residual = fr.final_residual();
    rec.hjb_fp_solves_cum = state.solves;
    rec.elapsed_seconds = std::chrono::duration<double>(Clock::now() - state.start).count();
    rec.level = run.level;
    rec.fine_equiv_solves = state.fine_equiv;
    rec.m_rel_residual = norm_space(correction) / m_norm;
    out.history.push_back(rec);

    out.q = state.q;
    out.q_rel_err = rec.q_rel_err;
    out.rho = fr.rho;
    out.phi = fr.phi;
    state.rho = std::move(fr.rho);

    const double stop_value = run.stop_on == StopOn::Measurement ? rec.meas_rel_err : rec.m_rel_residual;
    if (!(rec.meas_rel_err <= cfg.divergence_threshold) || !correction.all_finite()) {
      out.status = InverseStatus::Diverged;
      out.message = "measurement relative error exceeded the divergence threshold";
      return;
    }
    // The returned estimate is the update computed from the last forward
    // solve, one step ahead of (rho, phi).
    state.q += correction;
    out.q = state.q;
    if (run.q_true) out.q_rel_err = relative_error(state.q, *run.q_true);
    if (stop_value <= run.tol) {
      out.status = InverseStatus::Converged;
      return;
    }
    if (inner == Inner::Converge && !fr.converged()) {
      ++out.forward_failures;
      if (cfg.stop_on_forward_failure) {
        out.status = InverseStatus::ForwardSolverFailed;
        out.message = "inner fictitious play reached max_iter above tolerance";
        return;
      }
    }
    if (local == cfg.outer_max) {
      out.status = InverseStatus::MaxIterReached;
      return;
    }
    ++state.k;
    ++out.iterations;
  }
}

SpatialField initial_q(const InverseConfig& cfg, const Grid& grid) {
  if (!cfg.q0) return SpatialField(grid, 0.0);
  SpatialField q = *cfg.q0;
  while (q.grid().nx() > grid.nx()) q = restrict_to_coarse(q);
  if (!(q.grid() == grid)) throw InvalidArgument("inverse: q0 does not live on the run grid");
  return q;
}

InverseResult run_single(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg, Inner inner) {
  cfg.validate();
  if (!(m.grid() == problem.grid())) throw InvalidArgument("inverse: measurement is not on the problem grid");
  LevelRun run{&problem, measurement_term(m.phi0, problem), m.phi0, problem.q(), StopOn::Measurement,
               cfg.outer_tol, 1, 1.0};
  LoopState state;
  state.q = initial_q(cfg, problem.grid());
  InverseResult out;
  run_level(run, cfg, inner, state, out);
  return out;
}

}  // namespace

Measurement::Measurement(SpatialField phi0_) : phi0(std::move(phi0_)) {
  if (!phi0.all_finite()) throw NonfiniteValue("measurement has non-finite values");
}

void InverseConfig::validate() const {
  if (!(outer_tol > 0.0)) throw InvalidArgument("inverse: outer_tol must be positive");
  if (outer_max < 0) throw InvalidArgument("inverse: outer_max must be nonnegative");
  if (!(forward.tol > 0.0) || forward.max_iter < 1) throw InvalidArgument("inverse: invalid forward parameters");
  if (bri_inner_N < 1) throw InvalidArgument("inverse: bri_inner_N must be at least 1");
  if (!(bri_delta > 0.0 && bri_delta <= 1.0)) throw InvalidArgument("inverse: bri_delta must lie in (0, 1]");
  if (heci_levels < 1) throw InvalidArgument("inverse: heci_levels must be at least 1");
  if (!(heci_coarse_tol > 0.0)) throw InvalidArgument("inverse: heci_coarse_tol must be positive");
  if (!(divergence_threshold > 0.0)) throw InvalidArgument("inverse: divergence_threshold must be positive");
}

std::string to_string(InverseStatus s) {
  switch (s) {
    case InverseStatus::Converged: return "Converged";
    case InverseStatus::MaxIterReached: return "MaxIterReached";
    case InverseStatus::Diverged: return "Diverged";
    case InverseStatus::ForwardSolverFailed: return "ForwardSolverFailed";
  }
  return "Unknown";
}

SpatialField measurement_term(const SpatialField& phi0, const MfgProblem& problem) {
  const Grid& g = phi0.grid();
  const LaxFriedrichs lf = problem.nu_num_setting() ? LaxFriedrichs{*problem.nu_num_setting()}
                                                    : LaxFriedrichs{g.dx()};
  const double align = mean(phi0) / g.T();
  const SpatialField lap = laplacian(phi0);
  const SpatialField pp = dx_plus(phi0);
  const SpatialField pm = dx_minus(phi0);
  SpatialField out(g);
  for (int i = 0; i < g.nx(); ++i)
    out[i] = align - problem.nu() * lap[i] + lf_hamiltonian(problem.hamiltonian(), lf, pp[i], pm[i]);
  return out;
}

SpatialField eci_update(const SpatialField& q_k, const SpatialField& phi0_k, const Measurement& m,
                        const MfgProblem& problem) {
  if (!(q_k.grid() == phi0_k.grid()) || !(q_k.grid() == m.grid()))
    throw InvalidArgument("eci_update: fields on different grids");
  return q_k + measurement_term(m.phi0, problem) - measurement_term(phi0_k, problem);
}

SpatialField eci_update_time_form(const SpaceTimeField& phi_k, const SpaceTimeField& rho_k, const Measurement& m,
                                  const MfgProblem& problem) {
  const Grid& g = phi_k.grid();
  if (!(g == m.grid()) || !(g == rho_k.grid())) throw InvalidArgument("eci_update_time_form: grid mismatch");
  const SpatialField phi0_k = phi_k.slice(0);
  SpatialField out = measurement_term(m.phi0, problem);
  out += -mean(phi0_k) / g.T();
  SpatialField f1(g);
  problem.f().bind(g).eval(rho_k.level(1), f1.values());
  for (int i = 0; i < g.nx(); ++i) out[i] -= (phi_k.at(1, i) - phi_k.at(0, i)) / g.dt() + f1[i];
  return out;
}

double relative_error(const SpatialField& approx, const SpatialField& reference) {
  return norm_space(approx - reference) / safe_norm(reference);
}

InverseResult run_eci(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg) {
  return run_single(problem, m, cfg, Inner::Converge);
}

InverseResult run_bri(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg) {
  return run_single(problem, m, cfg, Inner::FixedSteps);
}

InverseResult run_bri_static_restart(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg) {
  return run_single(problem, m, cfg, Inner::FixedStepsStaticRestart);
}

InverseResult run_heci(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg) {
  cfg.validate();
  if (!(m.grid() == problem.grid())) throw InvalidArgument("heci: measurement is not on the problem grid");
  const int levels = cfg.heci_levels;
  const int factor = 1 << (levels - 1);
  const Grid& fine = problem.grid();
  if (fine.nx() % factor != 0 || fine.nt() % factor != 0)
    throw InvalidArgument("heci: nx and nt must be divisible by 2^(levels-1) = " + std::to_string(factor));

  // problems[j] lives on the grid coarsened j times.
  std::vector<MfgProblem> problems{problem};
  for (int j = 1; j < levels; ++j) problems.push_back(problems.back().coarsened());

  const SpatialField m_fine = measurement_term(m.phi0, problem);
  const double fine_nodes = static_cast<double>(fine.nx()) * (fine.nt() + 1);

  InverseResult out;
  LoopState state;
  for (int l = 1; l <= levels; ++l) {
    const int j = levels - l;
    const MfgProblem& p = problems[j];
    const Grid& g = p.grid();
    SpatialField m_l = m_fine;
    SpatialField phi0_l = m.phi0;
    for (int r = 0; r < j; ++r) {
      m_l = restrict_to_coarse(m_l);
      phi0_l = restrict_to_coarse(phi0_l);
    }
    if (l == 1) {
      state.q = initial_q(cfg, g);
    } else {
      state.q = refine(state.q);
      if (state.rho) state.rho = refine(*state.rho);
    }
    const bool finest = l == levels;
    LevelRun run{&p,
                 std::move(m_l),
                 std::move(phi0_l),
                 p.q(),
                 finest ? StopOn::Measurement : StopOn::MResidual,
                 finest ? cfg.outer_tol : cfg.heci_coarse_tol,
                 l,
                 static_cast<double>(g.nx()) * (g.nt() + 1) / fine_nodes};
    run_level(run, cfg, Inner::Converge, state, out);
    const bool level_ok =
        out.status == InverseStatus::Converged || (!finest && out.status == InverseStatus::MaxIterReached);
    if (!level_ok) return out;
  }
  return out;
}

UpdateDiagnostics diagnostics(const SpatialField& q_true, const SpatialField& q_hat, const SpaceTimeField& phi_true,
                              const SpaceTimeField& phi_hat, const SpaceTimeField& rho_true,
                              const SpaceTimeField& rho_hat, const MfgProblem& problem) {
  const Grid& g = phi_true.grid();
  if (!(q_true.grid() == g) || !(q_hat.grid() == g) || !(phi_hat.grid() == g) || !(rho_true.grid() == g) ||
      !(rho_hat.grid() == g))
    throw InvalidArgument("diagnostics: fields on different grids");
  const BoundInteraction f = problem.f().bind(g);
  SpatialField f_true(g), f_hat(g);
  f.eval(rho_true.level(1), f_true.values());
  f.eval(rho_hat.level(1), f_hat.values());

  UpdateDiagnostics d;
  d.q_minus_qhat = q_true - q_hat;
  d.correction = d.q_minus_qhat + (mean(phi_true.slice(0)) - mean(phi_hat.slice(0))) / g.T();
  for (int i = 0; i < g.nx(); ++i) {
    const double dt_true = (phi_true.at(1, i) - phi_true.at(0, i)) / g.dt();
    const double dt_hat = (phi_hat.at(1, i) - phi_hat.at(0, i)) / g.dt();
    d.correction[i] += dt_true - dt_hat + f_true[i] - f_hat[i];
  }
  d.error = d.correction - d.q_minus_qhat;
  d.pec = SpatialField(g);
  for (int i = 0; i < g.nx(); ++i) d.pec[i] = d.q_minus_qhat[i] * d.correction[i];
  return d;
}

}  // namespace mfginv
