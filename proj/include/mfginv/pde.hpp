#pragma once

#include <span>

#include "mfginv/grid.hpp"
#include "mfginv/model.hpp"
#include "mfginv/tridiagonal.hpp"

namespace mfginv {

struct NewtonParams {
  /// Max-norm residual target per time level.
  double tol = 1e-12;
  int max_iter = 50;
};

/// Backward HJB solve. Terminal level is f_T; level n solves
///
///   -(phi_{n+1} - phi_n)/dt - nu Lap phi_n + H_LF(D phi_n) = q + f(rho_{n+1})
///
/// by Newton's method warm-started from phi_{n+1}. Throws NewtonDiverged or
/// NonfiniteValue.
SpaceTimeField solve_hjb(const MfgProblem& problem, const SpatialField& q, const SpaceTimeField& rho_flow,
                         const NewtonParams& newton = {});

/// Forward implicit FP solve from rho0:
///
///   (rho_{n+1} - rho_n)/dt - nu Lap rho_{n+1} - D*(rho_{n+1} v_n) = 0,
///
/// with v_n = velocity(phi_n). The step operator is the transpose of the HJB
/// linearization, so discrete mass is conserved.
SpaceTimeField solve_fp(const MfgProblem& problem, const SpaceTimeField& phi, const SpatialField& rho0);
SpaceTimeField solve_fp(const MfgProblem& problem, const SpaceTimeField& phi);

/// Optimal velocity pair v = -2 (dH_LF/dp+, dH_LF/dp-) at D phi. For
/// matched one-sided slopes and nu_n = 0 this is -H'(p). The factor 2 is the
/// 1/2 weight of the one-sided inner product.
OneSidedSpatial velocity(const MfgProblem& problem, const SpatialField& phi_slice);

/// Jacobian of the HJB level map phi_n -> residual at phi_n.
CyclicTridiagonal hjb_jacobian(const MfgProblem& problem, std::span<const double> phi_level);

/// Left-hand operator of one FP step with velocity from phi_level.
CyclicTridiagonal fp_operator(const MfgProblem& problem, std::span<const double> phi_level);

}  // namespace mfginv
