#include "mfginv/hopfcole.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "mfginv/errors.hpp"
#include "mfginv/pde.hpp"
#include "mfginv/tridiagonal.hpp"

namespace mfginv {

namespace {

void require_nu(double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("hopf-cole: nu must be positive");
}

}  // namespace

HopfColePair to_hopf_cole(const SpaceTimeField& rho, const SpaceTimeField& phi, double nu) {
  require_nu(nu);
  if (!(rho.grid() == phi.grid())) throw InvalidArgument("to_hopf_cole: grid mismatch");
  HopfColePair pair{SpaceTimeField(phi.grid()), SpaceTimeField(phi.grid())};
  auto w = pair.w.values();
  auto u = pair.u.values();
  const auto p = phi.values();
  const auto r = rho.values();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double e = std::exp(p[k] / (2.0 * nu));
    w[k] = 1.0 / e;
    u[k] = r[k] * e;
  }
  return pair;
}

DensityValue from_hopf_cole(const HopfColePair& pair, double nu) {
  require_nu(nu);
  if (!(pair.w.grid() == pair.u.grid())) throw InvalidArgument("from_hopf_cole: grid mismatch");
  DensityValue out{SpaceTimeField(pair.w.grid()), SpaceTimeField(pair.w.grid())};
  auto rho = out.rho.values();
  auto phi = out.phi.values();
  const auto w = pair.w.values();
  const auto u = pair.u.values();
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!(w[k] > 0.0)) throw NonpositiveW("from_hopf_cole: w must be positive");
    rho[k] = w[k] * u[k];
    phi[k] = -2.0 * nu * std::log(w[k]);
  }
  return out;
}

double parabolic_residual(const HopfColePair& pair, const SpatialField& q, const MfgProblem& problem) {
  const Grid& g = pair.w.grid();
  if (!(g == pair.u.grid()) || !(q.grid() == g)) throw InvalidArgument("parabolic_residual: grid mismatch");
  const int nx = g.nx();
  const double nu = problem.nu();
  const double dt = g.dt();
  const double inv_dx2 = 1.0 / (g.dx() * g.dx());
  const BoundInteraction f = problem.f().bind(g);
  std::vector<double> rho(nx), fv(nx);

  auto lap = [&](std::span<const double> v, int i) {
    return (v[(i + 1) % nx] - 2.0 * v[i] + v[(i + nx - 1) % nx]) * inv_dx2;
  };

  // The FP step n -> n+1 moves rho_{n+1} with the velocity of phi_n, so the u
  // equation is taken at ut = rho_{n+1} / w_n, with d_t(rho e^{phi/2nu})
  // split by the product rule into (ut - u_n)/dt - ut log(w_{n+1}/w_n)/dt.
  std::vector<double> ut(nx);
  double res = 0.0;
  for (int n = 0; n < g.nt(); ++n) {
    const auto w0 = pair.w.level(n);
    const auto w1 = pair.w.level(n + 1);
    const auto u0 = pair.u.level(n);
    const auto u1 = pair.u.level(n + 1);
    for (int i = 0; i < nx; ++i) {
      if (!(w0[i] > 0.0) || !(w1[i] > 0.0)) throw NonpositiveW("parabolic_residual: w must be positive");
      rho[i] = w1[i] * u1[i];
      ut[i] = rho[i] / w0[i];
    }
    f.eval(rho, fv);
    for (int i = 0; i < nx; ++i) {
      const double potential = (q[i] + fv[i]) / (2.0 * nu);
      const double log_ratio = std::log(w1[i] / w0[i]);
      const double rw = -w0[i] * log_ratio / dt - nu * lap(w0, i) + potential * w0[i];
      const double ru = (ut[i] - u0[i]) / dt - ut[i] * log_ratio / dt - nu * lap(ut, i) + potential * ut[i];
      res = std::max({res, std::abs(rw), std::abs(ru)});
    }
  }
  return res;
}

SpaceTimeField solve_w_backward(const SpatialField& q, const SpatialField& w_T, double nu, const Grid& grid) {
  require_nu(nu);
  if (q.grid().nx() != grid.nx() || w_T.grid().nx() != grid.nx())
    throw InvalidArgument("solve_w_backward: grid mismatch");
  const int nx = grid.nx();
  const double inv_dt = 1.0 / grid.dt();
  const double diff = nu / (grid.dx() * grid.dx());
  CyclicTridiagonal op(nx);
  for (int i = 0; i < nx; ++i) {
    op.diag[i] = inv_dt + 2.0 * diff + q[i] / (2.0 * nu);
    op.lower[i] = -diff;
    op.upper[i] = -diff;
  }
  SpaceTimeField w(grid);
  w.set_slice(grid.nt(), w_T.values());
  std::vector<double> rhs(nx);
  for (int n = grid.nt() - 1; n >= 0; --n) {
    const auto next = w.level(n + 1);
    for (int i = 0; i < nx; ++i) rhs[i] = next[i] * inv_dt;
    w.set_slice(n, op.solve(rhs));
  }
  return w;
}

SpatialField linpara_update_w(const SpaceTimeField& w_k, const SpatialField& w0_meas, double nu) {
  require_nu(nu);
  const Grid& g = w_k.grid();
  if (w0_meas.grid().nx() != g.nx()) throw InvalidArgument("linpara_update_w: grid mismatch");
  const SpatialField lap = laplacian(w0_meas);
  SpatialField q(g);
  for (int i = 0; i < g.nx(); ++i) {
    if (std::abs(w0_meas[i]) < 1e-12) throw InvalidArgument("linpara_update_w: measured w0 vanishes");
    const double dtw = (w_k.at(1, i) - w_k.at(0, i)) / g.dt();
    q[i] = 2.0 * nu / w0_meas[i] * (dtw + nu * lap[i]);
  }
  return q;
}

SpatialField hopf_cole_hamiltonian(const SpatialField& phi, double nu) {
  require_nu(nu);
  const Grid& g = phi.grid();
  const int nx = g.nx();
  const double inv_dx2 = 1.0 / (g.dx() * g.dx());
  SpatialField out(g);
  // Lap(w)/w with w = exp(-phi/2nu), written with ratios to avoid overflow.
  for (int i = 0; i < nx; ++i) {
    const double up = std::exp(-(phi[(i + 1) % nx] - phi[i]) / (2.0 * nu));
    const double dn = std::exp(-(phi[(i + nx - 1) % nx] - phi[i]) / (2.0 * nu));
    out[i] = 2.0 * nu * nu * (up - 2.0 + dn) * inv_dx2;
  }
  return out;
}

SpatialField linpara_update_phi(const SpatialField& q_k, const SpaceTimeField& phi_k, const SpatialField& phi0_meas,
                                double nu) {
  require_nu(nu);
  const SpatialField phi0_k = phi_k.slice(0);
  if (q_k.grid().nx() != phi0_k.grid().nx() || phi0_meas.grid().nx() != phi0_k.grid().nx())
    throw InvalidArgument("linpara_update_phi: grid mismatch");
  const SpatialField g_meas = hopf_cole_hamiltonian(phi0_meas, nu);
  const SpatialField g_k = hopf_cole_hamiltonian(phi0_k, nu);
  SpatialField q(q_k.grid());
  for (int i = 0; i < q.size(); ++i) {
    const double r0 = std::exp(-(phi0_k[i] - phi0_meas[i]) / (2.0 * nu));
    q[i] = r0 * q_k[i] + g_meas[i] - r0 * g_k[i];
  }
  return q;
}

InverseResult run_linpara_inversion(const MfgProblem& problem, const Measurement& m, const InverseConfig& cfg) {
  cfg.validate();
  if (!problem.f().is_absent()) throw InvalidArgument("linpara inversion requires an absent interaction cost");
  const Grid& g = problem.grid();
  if (!(m.grid() == g)) throw InvalidArgument("linpara inversion: measurement is not on the problem grid");
  const auto start = std::chrono::steady_clock::now();
  const double phi0_norm = std::max(norm_space(m.phi0), std::numeric_limits<double>::min());
  const SpaceTimeField frozen = SpaceTimeField::constant_in_time(problem.rho0());

  SpatialField q = cfg.q0 ? *cfg.q0 : SpatialField(g, 0.0);
  if (!(q.grid() == g)) throw InvalidArgument("linpara inversion: q0 is not on the problem grid");
  InverseResult out;
  // The density does not feed back into the HJB; it is solved once at exit.
  auto finish = [&](InverseStatus status) {
    out.status = status;
    if (out.phi.values().empty()) {
      out.rho = frozen;
    } else {
      out.rho = solve_fp(problem, out.phi);
    }
    return out;
  };
  for (int k = 0;; ++k) {
    SpaceTimeField phi;
    try {
      phi = solve_hjb(problem, q, frozen, cfg.forward.newton);
    } catch (const Error& e) {
      out.message = std::string("HJB solve failed: ") + e.what();
      return finish(InverseStatus::Diverged);
    }
    IterationRecord rec;
    rec.k = k;
    rec.meas_rel_err = norm_space(phi.slice(0) - m.phi0) / phi0_norm;
    if (problem.q()) rec.q_rel_err = relative_error(q, *problem.q());
    rec.hjb_fp_solves_cum = k + 1;
    rec.fine_equiv_solves = k + 1;
    rec.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.history.push_back(rec);
    out.q = q;
    out.q_rel_err = rec.q_rel_err;
    out.phi = phi;

    SpatialField next = linpara_update_phi(q, phi, m.phi0, problem.nu());
    if (!(rec.meas_rel_err <= cfg.divergence_threshold) || !next.all_finite()) {
      out.message = "measurement relative error exceeded the divergence threshold";
      return finish(InverseStatus::Diverged);
    }
    q = std::move(next);
    out.q = q;
    if (problem.q()) out.q_rel_err = relative_error(q, *problem.q());
    if (rec.meas_rel_err <= cfg.outer_tol) {
      return finish(InverseStatus::Converged);
    }
    if (k == cfg.outer_max) {
      return finish(InverseStatus::MaxIterReached);
    }
    ++out.iterations;
  }
}

}  // namespace mfginv
