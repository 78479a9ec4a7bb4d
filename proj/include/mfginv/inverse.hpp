#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfginv/forward.hpp"
#include "mfginv/grid.hpp"
#include "mfginv/model.hpp"

namespace mfginv {

/// Observed value function at t = 0.
struct Measurement {
  SpatialField phi0;

  explicit Measurement(SpatialField phi0);
  const Grid& grid() const { return phi0.grid(); }
};

struct InverseConfig {
  /// Initial potential; zero when absent. May live on the run grid or, for
  /// the hierarchical solver, on any grid of the hierarchy.
  std::optional<SpatialField> q0;
  /// Target for the measurement relative error.
  double outer_tol = 1e-9;
  /// Largest outer index k; reaching it without convergence is MaxIterReached.
  int outer_max = 200;
  FicPlayParams forward;
  /// Abort with ForwardSolverFailed when an inner solve misses its tolerance.
  bool stop_on_forward_failure = false;
  int bri_inner_N = 1;
  double bri_delta = 0.5;
  int heci_levels = 1;
  /// Coarse hierarchy levels stop once ||M_target - M(phi0^k)|| / ||M_target||
  /// falls below this value.
  double heci_coarse_tol = 1e-2;
  /// Measurement relative error above which the run is declared diverged.
  double divergence_threshold = 1e3;

  void validate() const;
};

enum class InverseStatus { Converged, MaxIterReached, Diverged, ForwardSolverFailed };
std::string to_string(InverseStatus s);

struct IterationRecord {
  int k = 0;
  double meas_rel_err = 0.0;
  std::optional<double> q_rel_err;
  double forward_residual = 0.0;
  long hjb_fp_solves_cum = 0;
  double elapsed_seconds = 0.0;
  int level = 1;
  /// Cumulative solves weighted by node count relative to the finest grid.
  double fine_equiv_solves = 0.0;
  /// ||M_target - M(phi0^k)|| / ||M_target||.
  double m_rel_residual = 0.0;
};

struct InverseResult {
  /// Update computed from the last forward solve, one step ahead of (rho,
  /// phi). On divergence, the potential of the last forward solve instead.
  SpatialField q;
  SpaceTimeField rho;  // averaged density flow of the last forward solve
  SpaceTimeField phi;  // value function of the last forward solve
  std::vector<IterationRecord> history;
  InverseStatus status = InverseStatus::MaxIterReached;
  /// Outer index k of the last forward solve (0 when the initial guess
  /// already matches the measurement).
  int iterations = 0;
  /// Relative error of `q` against the truth, when known.
  std::optional<double> q_rel_err;
  int forward_failures = 0;
  std::string message;

  bool converged() const { return status == InverseStatus::Converged; }
  long hjb_fp_solves() const { return history.empty() ? 0 : history.back().hjb_fp_solves_cum; }
  double fine_equiv_solves() const { return history.empty() ? 0.0 : history.back().fine_equiv_solves; }
  double meas_rel_err() const { return history.empty() ? 0.0 : history.back().meas_rel_err; }
};

/// M(phi0) = mean(phi0)/T - nu Lap phi0 + H_LF(D+ phi0, D- phi0), with the
/// same discrete Hamiltonian as the HJB solver.
SpatialField measurement_term(const SpatialField& phi0, const MfgProblem& problem);

/// q_k + M(m.phi0) - M(phi0_k).
SpatialField eci_update(const SpatialField& q_k, const SpatialField& phi0_k, const Measurement& m,
                        const MfgProblem& problem);

/// The same update written with the time derivative of the current forward
/// solution:
///   mean(phi0 - phi_k0)/T - (phi_k1 - phi_k0)/dt - nu Lap phi0 + H_LF(D phi0) - f(rho_k1).
/// Agrees with eci_update up to the HJB solve tolerance.
SpatialField eci_update_time_form(const SpaceTimeField& phi_k, const SpaceTimeField& rho_k, const Measurement& m,
                                  const MfgProblem& problem);

double relative_error(const SpatialField& approx, const SpatialField& reference);

/// The solvers below never read problem.q() for the iteration; when it is set
/// it is used as the truth for q_rel_err.
InverseResult run_eci(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg);
/// Inner loop of exactly bri_inner_N fictitious-play steps with weight
/// bri_delta, warm-started from the previous outer flow.
InverseResult run_bri(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg);
/// As run_bri, but every inner loop restarts from the static initial flow.
InverseResult run_bri_static_restart(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg);
/// Coarse-to-fine ECI over heci_levels grids, the coarsest with nx, nt
/// divided by 2^(heci_levels-1). M is computed once on the fine grid and
/// injected downwards; q and the density flow are interpolated upwards.
InverseResult run_heci(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg);

struct UpdateDiagnostics {
  SpatialField q_minus_qhat;
  SpatialField correction;  // qhat^+ - qhat
  SpatialField error;       // qhat^+ - q
  SpatialField pec;         // (q - qhat) * correction
};

/// Decomposition of one ECI update from the estimate (q_hat, phi_hat,
/// rho_hat) toward the truth (q_true, phi_true, rho_true). The time
/// derivative at t = 0 is the forward difference and the interaction cost
/// enters at level 1, matching the HJB stencil, so `error` equals
/// eci_update(q_hat) - q_true.
UpdateDiagnostics diagnostics(const SpatialField& q_true, const SpatialField& q_hat, const SpaceTimeField& phi_true,
                              const SpaceTimeField& phi_hat, const SpaceTimeField& rho_true,
                              const SpaceTimeField& rho_hat, const MfgProblem& problem);

}  // namespace mfginv
