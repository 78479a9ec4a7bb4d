#include "mfginv/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mfginv/errors.hpp"

namespace mfginv {

namespace {

inline int wrap(int i, int n) { return i < 0 ? i + n : (i >= n ? i - n : i); }

void require_grid(const Grid& expected, const Grid& got, const char* what) {
  if (!(expected == got)) throw InvalidArgument(std::string(what) + ": field is not on the problem grid");
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct HjbLevel {
  const Hamiltonian& h;
  LaxFriedrichs lf;
  double nu;
  double inv_dt;
  double inv_dx;
  double inv_dx2;

  // residual of -(next - phi)/dt - nu Lap phi + H_LF(D phi) - source
  void residual(std::span<const double> phi, std::span<const double> next, std::span<const double> source,
                std::span<double> out) const {
    const int n = static_cast<int>(phi.size());
    for (int i = 0; i < n; ++i) {
      const double up = phi[wrap(i + 1, n)];
      const double dn = phi[wrap(i - 1, n)];
      const double pp = (up - phi[i]) * inv_dx;
      const double pm = (phi[i] - dn) * inv_dx;
      out[i] = (phi[i] - next[i]) * inv_dt - nu * (up - 2.0 * phi[i] + dn) * inv_dx2 +
               lf_hamiltonian(h, lf, pp, pm) - source[i];
    }
  }

  void jacobian(std::span<const double> phi, CyclicTridiagonal& jac) const {
    const int n = static_cast<int>(phi.size());
    for (int i = 0; i < n; ++i) {
      const double pp = (phi[wrap(i + 1, n)] - phi[i]) * inv_dx;
      const double pm = (phi[i] - phi[wrap(i - 1, n)]) * inv_dx;
      const auto [gp, gm] = lf_gradients(h, lf, pp, pm);
      jac.diag[i] = inv_dt + 2.0 * nu * inv_dx2 + (gm - gp) * inv_dx;
      jac.upper[i] = -nu * inv_dx2 + gp * inv_dx;
      jac.lower[i] = -nu * inv_dx2 - gm * inv_dx;
    }
  }
};

HjbLevel make_level(const MfgProblem& problem) {
  const Grid& g = problem.grid();
  return HjbLevel{problem.hamiltonian(), problem.lf(), problem.nu(), 1.0 / g.dt(), 1.0 / g.dx(),
                  1.0 / (g.dx() * g.dx())};
}

}  // namespace

SpaceTimeField solve_hjb(const MfgProblem& problem, const SpatialField& q, const SpaceTimeField& rho_flow,
                         const NewtonParams& newton) {
  const Grid& grid = problem.grid();
  require_grid(grid, q.grid(), "solve_hjb(q)");
  require_grid(grid, rho_flow.grid(), "solve_hjb(rho)");
  if (!(newton.tol > 0.0) || newton.max_iter < 1) throw InvalidArgument("solve_hjb: invalid Newton parameters");
  if (!q.all_finite() || !rho_flow.all_finite()) throw NonfiniteValue("solve_hjb: non-finite input");

  const int nx = grid.nx();
  const HjbLevel level = make_level(problem);
  const BoundInteraction f = problem.f().bind(grid);

  SpaceTimeField phi(grid);
  phi.set_slice(grid.nt(), problem.f_T().values(grid));

  std::vector<double> source(nx), res(nx), rhs(nx);
  CyclicTridiagonal jac(nx);
  // Stagnation floor: once the Newton update is at the level of rounding in
  // phi, the residual cannot be reduced further in double precision.
  constexpr double kStepFloor = 1e3 * std::numeric_limits<double>::epsilon();

  for (int n = grid.nt() - 1; n >= 0; --n) {
    f.eval(rho_flow.level(n + 1), source);
    for (int i = 0; i < nx; ++i) source[i] += q[i];
    auto next = phi.level(n + 1);
    auto cur = phi.level(n);
    std::copy(next.begin(), next.end(), cur.begin());

    bool converged = false;
    double r = 0.0;
    for (int it = 0; it <= newton.max_iter; ++it) {
      level.residual(cur, next, source, res);
      r = max_abs(res);
      if (!std::isfinite(r)) throw NonfiniteValue("solve_hjb: non-finite residual at level " + std::to_string(n));
      if (r <= newton.tol) {
        converged = true;
        break;
      }
      if (it == newton.max_iter) break;
      level.jacobian(cur, jac);
      for (int i = 0; i < nx; ++i) rhs[i] = -res[i];
      const std::vector<double> step = jac.solve(rhs);
      for (int i = 0; i < nx; ++i) cur[i] += step[i];
      if (max_abs(step) <= kStepFloor * (1.0 + max_abs(cur))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NewtonDiverged(n, r);
  }
  if (!phi.all_finite()) throw NonfiniteValue("solve_hjb: non-finite value function");
  return phi;
}

OneSidedSpatial velocity(const MfgProblem& problem, const SpatialField& phi_slice) {
  const Grid& grid = phi_slice.grid();
  const LaxFriedrichs lf = problem.lf();
  const SpatialField pp = dx_plus(phi_slice);
  const SpatialField pm = dx_minus(phi_slice);
  OneSidedSpatial v{SpatialField(grid), SpatialField(grid)};
  for (int i = 0; i < grid.nx(); ++i) {
    const auto [gp, gm] = lf_gradients(problem.hamiltonian(), lf, pp[i], pm[i]);
    v.plus[i] = -2.0 * gp;
    v.minus[i] = -2.0 * gm;
  }
  return v;
}

CyclicTridiagonal hjb_jacobian(const MfgProblem& problem, std::span<const double> phi_level) {
  CyclicTridiagonal jac(problem.grid().nx());
  make_level(problem).jacobian(phi_level, jac);
  return jac;
}

CyclicTridiagonal fp_operator(const MfgProblem& problem, std::span<const double> phi_level) {
  const Grid& grid = problem.grid();
  const int nx = grid.nx();
  const double inv_dt = 1.0 / grid.dt();
  const double inv_dx = 1.0 / grid.dx();
  const double diff = problem.nu() * inv_dx * inv_dx;
  const OneSidedSpatial v =
      velocity(problem, SpatialField(grid, std::vector<double>(phi_level.begin(), phi_level.end())));

  // -D*(rho v)_i = ( rho_i v+_i - rho_{i-1} v+_{i-1} + rho_{i+1} v-_{i+1} - rho_i v-_i ) / (2 dx)
  CyclicTridiagonal op(nx);
  for (int i = 0; i < nx; ++i) {
    op.diag[i] = inv_dt + 2.0 * diff + 0.5 * inv_dx * (v.plus[i] - v.minus[i]);
    op.lower[i] = -diff - 0.5 * inv_dx * v.plus[wrap(i - 1, nx)];
    op.upper[i] = -diff + 0.5 * inv_dx * v.minus[wrap(i + 1, nx)];
  }
  return op;
}

SpaceTimeField solve_fp(const MfgProblem& problem, const SpaceTimeField& phi, const SpatialField& rho0) {
  const Grid& grid = problem.grid();
  require_grid(grid, phi.grid(), "solve_fp(phi)");
  require_grid(grid, rho0.grid(), "solve_fp(rho0)");
  const int nx = grid.nx();
  const double inv_dt = 1.0 / grid.dt();

  SpaceTimeField rho(grid);
  rho.set_slice(0, rho0);
  std::vector<double> rhs(nx);
  for (int n = 0; n < grid.nt(); ++n) {
    const CyclicTridiagonal op = fp_operator(problem, phi.level(n));
    auto prev = rho.level(n);
    for (int i = 0; i < nx; ++i) rhs[i] = prev[i] * inv_dt;
    rho.set_slice(n + 1, op.solve(rhs));
  }
  if (!rho.all_finite()) throw NonfiniteValue("solve_fp: non-finite density");
  return rho;
}

SpaceTimeField solve_fp(const MfgProblem& problem, const SpaceTimeField& phi) {
  return solve_fp(problem, phi, problem.rho0());
}

}  // namespace mfginv
