#include <doctest.h>

#include <random>

#include "mfginv/errors.hpp"
#include "mfginv/forward.hpp"
#include "support.hpp"

using namespace mfginv;

TEST_CASE("weight schedules") {
  CHECK(WeightSchedule::fixed(0.3)(0) == 0.3);
  CHECK(WeightSchedule::fixed(0.3)(17) == 0.3);
  CHECK(WeightSchedule::harmonic()(0) == 1.0);
  CHECK(WeightSchedule::harmonic()(2) == 0.5);
  CHECK_THROWS_AS(WeightSchedule::fixed(0.0), InvalidArgument);
  CHECK_THROWS_AS(WeightSchedule::fixed(1.5), InvalidArgument);
}

TEST_CASE("best response at the stationary equilibrium") {
  const MfgProblem p = testing::stationary_problem(16, 8, 1.0);
  const SpaceTimeField flow = static_flow(p);
  const BestResponse br = best_response(p, *p.q(), flow);
  const Grid& g = p.grid();
  for (int n = 0; n <= g.nt(); ++n)
    for (int i = 0; i < g.nx(); ++i) {
      CHECK(br.phi.at(n, i) == doctest::Approx(g.T() - g.t(n)).epsilon(1e-13));
      CHECK(br.rho.at(n, i) == doctest::Approx(1.0).epsilon(1e-13));
    }
  CHECK(forward_residual(flow, br.rho) <= 1e-12);

  const ForwardResult fr = fictitious_play(p, *p.q(), std::nullopt, {});
  CHECK(fr.converged());
  CHECK(fr.iterations == 1);
  CHECK(fr.final_residual() < 1e-12);
}

TEST_CASE("best response has unit mass and ignores the flow when f is absent") {
  std::mt19937_64 rng(2);
  const Grid g(40, 20, -1.0, 1.0, 1.0);
  const MfgProblem p(0.1, Hamiltonian::quadratic(), std::nullopt, InteractionCost::absent(), TerminalCost::zero(),
                     builtin_density(g, "gaussian", {{"mu", 0.0}, {"sigma", 0.2}}));
  const SpatialField q = testing::random_smooth(g, rng, 1.0);
  auto random_flow = [&] {
    SpaceTimeField r(g);
    for (int n = 0; n <= g.nt(); ++n) {
      SpatialField s = testing::random_smooth(g, rng, 0.4);
      s += 1.0;
      r.set_slice(n, normalize_density(s));
    }
    return r;
  };
  const BestResponse a = best_response(p, q, random_flow()), b = best_response(p, q, random_flow());
  for (std::size_t k = 0; k < a.phi.values().size(); ++k) {
    CHECK(a.phi.values()[k] == b.phi.values()[k]);
    CHECK(a.rho.values()[k] == b.rho.values()[k]);
  }
  for (int n = 0; n <= g.nt(); ++n) CHECK(integrate(a.rho.slice(n)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward residual") {
  std::mt19937_64 rng(3);
  const Grid g(10, 5, 0.0, 1.0, 1.0);
  SpaceTimeField a(g), b(g);
  for (int n = 0; n <= g.nt(); ++n) {
    a.set_slice(n, testing::random_field(g, rng));
    b.set_slice(n, testing::random_field(g, rng));
  }
  CHECK(forward_residual(a, a) == 0.0);
  CHECK(forward_residual(a, b) > 0.0);
  CHECK(forward_residual(a, b) == doctest::Approx(forward_residual(b, a)));
  double worst = 0.0;
  for (int n = 0; n <= g.nt(); ++n) worst = std::max(worst, norm_space(a.slice(n) - b.slice(n)));
  CHECK(forward_residual(a, b) == doctest::Approx(worst).epsilon(1e-14));
  CHECK_THROWS_AS(forward_residual(a, SpaceTimeField(Grid(11, 5, 0.0, 1.0, 1.0))), InvalidArgument);
}

TEST_CASE("fictitious play on the scaling configuration") {
  const MfgProblem p = testing::scaling_problem(100, 100);
  FicPlayParams fixed;
  fixed.tol = 1e-6;
  const ForwardResult fr = fictitious_play(p, *p.q(), std::nullopt, fixed);
  REQUIRE(fr.converged());
  CHECK(fr.final_residual() <= 1e-6);
  CHECK(fr.hjb_fp_solves == fr.iterations);
  CHECK(fr.residual_history.size() == static_cast<std::size_t>(fr.iterations));
  CHECK(fr.elapsed_history.size() == fr.residual_history.size());
  REQUIRE(fr.residual_history.size() > 10);
  CHECK(fr.residual_history[9] < fr.residual_history[0]);
  // Monotone tail.
  const auto& h = fr.residual_history;
  for (std::size_t k = h.size() / 2; k + 1 < h.size(); ++k) CHECK(h[k + 1] < h[k]);
  for (int n = 0; n <= p.grid().nt(); ++n) CHECK(integrate(fr.rho.slice(n)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fr.rho.min() >= -1e-8);

  FicPlayParams harmonic = fixed;
  harmonic.schedule = WeightSchedule::harmonic();
  harmonic.max_iter = 2000;
  const ForwardResult hr = fictitious_play(p, *p.q(), std::nullopt, harmonic);
  CHECK(hr.converged());
  CHECK(hr.iterations > fr.iterations);
}

TEST_CASE("delta = 1 is plain best-response iteration") {
  const MfgProblem p = testing::scaling_problem(30, 20);
  FicPlayParams params;
  params.schedule = WeightSchedule::fixed(1.0);
  params.max_iter = 1;
  const ForwardResult fr = fictitious_play(p, *p.q(), std::nullopt, params);
  const BestResponse br = best_response(p, *p.q(), static_flow(p));
  for (std::size_t k = 0; k < br.rho.values().size(); ++k) CHECK(fr.rho.values()[k] == br.rho.values()[k]);
  CHECK(fr.status == ForwardStatus::MaxIterReached);
}

TEST_CASE("warm start from an equilibrium converges immediately") {
  const MfgProblem p = testing::scaling_problem(40, 40);
  FicPlayParams params;
  params.tol = 1e-10;
  const ForwardResult first = fictitious_play(p, *p.q(), std::nullopt, params);
  REQUIRE(first.converged());
  const ForwardResult again = fictitious_play(p, *p.q(), first.rho, params);
  CHECK(again.iterations == 1);
}

TEST_CASE("coupled residual vanishes at a converged equilibrium") {
  const MfgProblem p = testing::scaling_problem(50, 40);
  FicPlayParams params;
  params.tol = 1e-11;
  params.max_iter = 2000;
  const ForwardResult fr = fictitious_play(p, *p.q(), std::nullopt, params);
  REQUIRE(fr.converged());
  const CoupledResidual r = coupled_residual(p, *p.q(), fr.phi, fr.rho);
  CHECK(r.hjb < 1e-7);
  CHECK(r.fp < 1e-7);
}
