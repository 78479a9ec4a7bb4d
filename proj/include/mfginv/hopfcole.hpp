#pragma once

#include "mfginv/grid.hpp"
#include "mfginv/inverse.hpp"
#include "mfginv/model.hpp"

namespace mfginv {

/// w = exp(-phi / 2nu), u = rho exp(phi / 2nu); w > 0 and w u = rho.
struct HopfColePair {
  SpaceTimeField w;
  SpaceTimeField u;
};

HopfColePair to_hopf_cole(const SpaceTimeField& rho, const SpaceTimeField& phi, double nu);

struct DensityValue {
  SpaceTimeField rho;
  SpaceTimeField phi;
};

/// Inverse transform; throws NonpositiveW if some w <= 0.
DensityValue from_hopf_cole(const HopfColePair& pair, double nu);

/// Max-norm residual of the discrete semilinear system
///
///   -d_t w - nu Lap w + (q + f(w u)) w / 2nu = 0,
///    d_t u - nu Lap u + (q + f(w u)) u / 2nu = 0.
///
/// The w equation is taken at levels 0..nt-1 with d_t w ~ w_n log(w_{n+1}/w_n)/dt.
/// The u equation for the step n -> n+1 is taken at ut = w_{n+1} u_{n+1} / w_n,
/// the density of level n+1 weighted by the value function of level n as in the
/// FP step, with d_t u ~ (ut - u_n)/dt - ut log(w_{n+1}/w_n)/dt. f is evaluated
/// at the density of level n+1. Both time stencils are exact for data that are
/// exponential in t and uniform in x.
double parabolic_residual(const HopfColePair& pair, const SpatialField& q, const MfgProblem& problem);

/// Backward Euler for the decoupled w equation:
///   (w_n - w_{n+1})/dt - nu Lap w_n + q w_n / 2nu = 0,  w_nt = w_T.
SpaceTimeField solve_w_backward(const SpatialField& q, const SpatialField& w_T, double nu, const Grid& grid);

/// q_{k+1} = (2nu / w0) ((w^k_1 - w^k_0)/dt + nu Lap w0), with w0 the measured
/// slice at t = 0. Throws InvalidArgument if |w0| < 1e-12 somewhere.
SpatialField linpara_update_w(const SpaceTimeField& w_k, const SpatialField& w0_meas, double nu);

/// 2 nu^2 Lap(w) / w with w = exp(-phi / 2nu): the discrete counterpart of
/// -nu Lap phi + |grad phi|^2 / 2 that commutes with the Hopf-Cole map.
SpatialField hopf_cole_hamiltonian(const SpatialField& phi, double nu);

/// q_{k+1} = r0 q_k + G(phi0) - r0 G(phi0^k), r0 = exp(-(phi0^k - phi0)/2nu),
/// G = hopf_cole_hamiltonian. Equals linpara_update_w on Hopf-Cole mapped
/// inputs whenever w^k solves the w equation with q_k at t = 0.
SpatialField linpara_update_phi(const SpatialField& q_k, const SpaceTimeField& phi_k, const SpatialField& phi0_meas,
                                double nu);

/// Fixed-point inversion for the decoupled problem (f absent): HJB solve with
/// q^k, then linpara_update_phi. Stops as run_eci does.
InverseResult run_linpara_inversion(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg);

}  // namespace mfginv
