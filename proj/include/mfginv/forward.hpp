#pragma once

#include <optional>
#include <vector>

#include "mfginv/grid.hpp"
#include "mfginv/model.hpp"
#include "mfginv/pde.hpp"

namespace mfginv {

/// Averaging weight delta_n of fictitious play.
class WeightSchedule {
 public:
  /// delta_n = delta for all n; delta in (0, 1].
  static WeightSchedule fixed(double delta);
  /// delta_n = 2 / (n + 2).
  static WeightSchedule harmonic();

  double operator()(int n) const;
  bool is_harmonic() const { return harmonic_; }
  double delta() const { return delta_; }

 private:
  bool harmonic_ = false;
  double delta_ = 0.5;
};

struct FicPlayParams {
  WeightSchedule schedule = WeightSchedule::fixed(0.5);
  /// Stop once forward_residual <= tol.
  double tol = 1e-8;
  int max_iter = 500;
  NewtonParams newton;
};

enum class ForwardStatus { Converged, MaxIterReached };

struct ForwardResult {
  SpaceTimeField rho;  // averaged flow after the last iteration
  SpaceTimeField phi;  // value function of the last best response
  std::vector<double> residual_history;
  std::vector<double> elapsed_history;  // wall seconds since start, per iteration
  int iterations = 0;
  int hjb_fp_solves = 0;
  ForwardStatus status = ForwardStatus::MaxIterReached;

  bool converged() const { return status == ForwardStatus::Converged; }
  double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

struct BestResponse {
  SpaceTimeField phi;
  SpaceTimeField rho;
};

/// HJB solve against the frozen flow rho_tilde, then FP solve against phi.
BestResponse best_response(const MfgProblem& problem, const SpatialField& q, const SpaceTimeField& rho_tilde,
                           const NewtonParams& newton = {});

/// max_n || rho_br(., t_n) - rho_tilde(., t_n) ||.
double forward_residual(const SpaceTimeField& rho_tilde, const SpaceTimeField& rho_br);

/// Every level equal to the problem's initial density.
SpaceTimeField static_flow(const MfgProblem& problem);

/// Fictitious play from rho_tilde0 (static_flow when absent). Reaching
/// max_iter is reported through `status`, not thrown.
ForwardResult fictitious_play(const MfgProblem& problem, const SpatialField& q,
                              const std::optional<SpaceTimeField>& rho_tilde0, const FicPlayParams& params);

/// Max-norm residuals of the discrete coupled system at (phi, rho): the HJB
/// equation against rho itself, and the FP equation against phi.
struct CoupledResidual {
  double hjb = 0.0;
  double fp = 0.0;
};
CoupledResidual coupled_residual(const MfgProblem& problem, const SpatialField& q, const SpaceTimeField& phi,
                                 const SpaceTimeField& rho);

}  // namespace mfginv
