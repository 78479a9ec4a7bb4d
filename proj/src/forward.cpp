#include "mfginv/forward.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mfginv/errors.hpp"

namespace mfginv {

WeightSchedule WeightSchedule::fixed(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("fixed weight must lie in (0, 1]");
  WeightSchedule s;
  s.delta_ = delta;
  return s;
}

WeightSchedule WeightSchedule::harmonic() {
  WeightSchedule s;
  s.harmonic_ = true;
  return s;
}

double WeightSchedule::operator()(int n) const { return harmonic_ ? 2.0 / (n + 2.0) : delta_; }

BestResponse best_response(const MfgProblem& problem, const SpatialField& q, const SpaceTimeField& rho_tilde,
                           const NewtonParams& newton) {
  BestResponse br;
  br.phi = solve_hjb(problem, q, rho_tilde, newton);
  br.rho = solve_fp(problem, br.phi);
  return br;
}

double forward_residual(const SpaceTimeField& rho_tilde, const SpaceTimeField& rho_br) {
  if (!(rho_tilde.grid() == rho_br.grid())) throw InvalidArgument("forward_residual: grid mismatch");
  const SpaceTimeField diff = rho_br - rho_tilde;
  double r = 0.0;
  for (int n = 0; n < diff.levels(); ++n) r = std::max(r, norm_level(diff, n));
  return r;
}

SpaceTimeField static_flow(const MfgProblem& problem) { return SpaceTimeField::constant_in_time(problem.rho0()); }

ForwardResult fictitious_play(const MfgProblem& problem, const SpatialField& q,
                              const std::optional<SpaceTimeField>& rho_tilde0, const FicPlayParams& params) {
  if (!(params.tol > 0.0)) throw InvalidArgument("fictitious play: tol must be positive");
  if (params.max_iter < 1) throw InvalidArgument("fictitious play: max_iter must be positive");
  const auto start = std::chrono::steady_clock::now();

  ForwardResult out;
  out.rho = rho_tilde0 ? *rho_tilde0 : static_flow(problem);
  if (!(out.rho.grid() == problem.grid())) throw InvalidArgument("fictitious play: initial flow on wrong grid");

  for (int n = 0; n < params.max_iter; ++n) {
    BestResponse br = best_response(problem, q, out.rho, params.newton);
    ++out.hjb_fp_solves;
    const double r = forward_residual(out.rho, br.rho);
    const double delta = params.schedule(n);
    out.rho *= 1.0 - delta;
    out.rho += br.rho * delta;
    out.phi = std::move(br.phi);
    out.iterations = n + 1;
    out.residual_history.push_back(r);
    out.elapsed_history.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (r <= params.tol) {
      out.status = ForwardStatus::Converged;
      break;
    }
  }
  return out;
}

CoupledResidual coupled_residual(const MfgProblem& problem, const SpatialField& q, const SpaceTimeField& phi,
                                 const SpaceTimeField& rho) {
  const Grid& g = problem.grid();
  const int nx = g.nx();
  const double dt = g.dt();
  const BoundInteraction f = problem.f().bind(g);
  const LaxFriedrichs lf = problem.lf();
  std::vector<double> fv(nx);

  CoupledResidual res;
  SpatialField fT = problem.f_T().values(g);
  for (int i = 0; i < nx; ++i) res.hjb = std::max(res.hjb, std::abs(phi.at(g.nt(), i) - fT[i]));
  for (int n = 0; n < g.nt(); ++n) {
    const SpatialField cur = phi.slice(n);
    const SpatialField lap = laplacian(cur);
    const SpatialField pp = dx_plus(cur);
    const SpatialField pm = dx_minus(cur);
    f.eval(rho.level(n + 1), fv);
    for (int i = 0; i < nx; ++i) {
      const double r = (cur[i] - phi.at(n + 1, i)) / dt - problem.nu() * lap[i] +
                       lf_hamiltonian(problem.hamiltonian(), lf, pp[i], pm[i]) - q[i] - fv[i];
      res.hjb = std::max(res.hjb, std::abs(r));
    }
    const CyclicTridiagonal op = fp_operator(problem, phi.level(n));
    const std::vector<double> lhs = op.apply(rho.level(n + 1));
    for (int i = 0; i < nx; ++i) res.fp = std::max(res.fp, std::abs(lhs[i] - rho.at(n, i) / dt));
  }
  for (int i = 0; i < nx; ++i) res.fp = std::max(res.fp, std::abs(rho.at(0, i) - problem.rho0()[i]));
  return res;
}

}  // namespace mfginv
