#include <doctest.h>

#include <cmath>
#include <random>

#include "mfginv/errors.hpp"
#include "mfginv/inverse.hpp"
#include "support.hpp"

using namespace mfginv;

namespace {

ForwardResult solve(const MfgProblem& p, const SpatialField& q, double tol = 1e-12) {
  FicPlayParams params;
  params.tol = tol;
  params.max_iter = 5000;
  ForwardResult r = fictitious_play(p, q, std::nullopt, params);
  REQUIRE(r.converged());
  return r;
}

Measurement measure(const MfgProblem& p) { return Measurement(solve(p, *p.q()).phi.slice(0)); }

InverseConfig tight_config() {
  InverseConfig cfg;
  cfg.outer_tol = 1e-9;
  cfg.forward.tol = 1e-10;
  cfg.forward.max_iter = 2000;
  return cfg;
}

// Independent evaluation of M with the stencils written out.
SpatialField measurement_oracle(const SpatialField& u, double nu, double nu_num, double T) {
  const Grid& g = u.grid();
  const int n = g.nx();
  const double dx = g.dx();
  double avg = 0.0;
  for (int i = 0; i < n; ++i) avg += u[i];
  avg /= n;
  SpatialField out(g);
  for (int i = 0; i < n; ++i) {
    const double up = u[testing::wrap(i + 1, n)], um = u[testing::wrap(i - 1, n)];
    const double pp = (up - u[i]) / dx, pm = (u[i] - um) / dx;
    const double pbar = 0.5 * (pp + pm);
    out[i] = avg / T - nu * (up - 2 * u[i] + um) / (dx * dx) + 0.5 * pbar * pbar - nu_num * 0.5 * (pp - pm);
  }
  return out;
}

SpatialField shifted(const SpatialField& u, int k) {
  SpatialField out(u.grid());
  for (int i = 0; i < u.size(); ++i) out[i] = u[testing::wrap(i - k, u.size())];
  return out;
}

}  // namespace

TEST_CASE("measurement term") {
  std::mt19937_64 rng(1);
  const MfgProblem p = testing::stationary_problem(32, 8, 2.0);
  const SpatialField c(p.grid(), 3.0);
  const SpatialField mc = measurement_term(c, p);
  for (int i = 0; i < c.size(); ++i) CHECK(mc[i] == doctest::Approx(1.5).epsilon(1e-14));

  const SpatialField u = testing::random_smooth(p.grid(), rng, 2.0);
  const SpatialField ours = measurement_term(u, p);
  const SpatialField oracle = measurement_oracle(u, p.nu(), p.grid().dx(), p.grid().T());
  for (int i = 0; i < u.size(); ++i) CHECK(ours[i] == doctest::Approx(oracle[i]).epsilon(1e-12));

  // Adding a constant to phi0 shifts M by that constant over T.
  const SpatialField shifted_m = measurement_term(u + 0.7, p);
  for (int i = 0; i < u.size(); ++i) CHECK(shifted_m[i] - ours[i] == doctest::Approx(0.35).epsilon(1e-10));
}

TEST_CASE("eci update algebra") {
  std::mt19937_64 rng(2);
  const MfgProblem p = testing::scaling_problem(24, 12);
  const Grid& g = p.grid();
  const SpatialField q = testing::random_smooth(g, rng);
  const SpatialField a = testing::random_smooth(g, rng), b = testing::random_smooth(g, rng);

  const SpatialField fixed = eci_update(q, a, Measurement(a), p);
  for (int i = 0; i < g.nx(); ++i) CHECK(fixed[i] == doctest::Approx(q[i]).epsilon(1e-13));

  const SpatialField ab = eci_update(q, a, Measurement(b), p) - q;
  const SpatialField ba = eci_update(q, b, Measurement(a), p) - q;
  for (int i = 0; i < g.nx(); ++i) CHECK(ab[i] == doctest::Approx(-ba[i]).epsilon(1e-12));

  CHECK_THROWS_AS(eci_update(q, SpatialField(Grid(12, 12, 0, 1, 1)), Measurement(a), p), InvalidArgument);
  CHECK_THROWS_AS(Measurement(SpatialField(g, std::nan(""))), NonfiniteValue);
}

TEST_CASE("time form of the update agrees with the measurement form") {
  const MfgProblem p = testing::scaling_problem(40, 40);
  const Measurement m = measure(p);
  const SpatialField q(p.grid(), 0.3);
  const ForwardResult fr = solve(p, q);
  const SpatialField direct = eci_update(q, fr.phi.slice(0), m, p);
  const SpatialField timed = eci_update_time_form(fr.phi, fr.rho, m, p);
  CHECK(norm_space(direct - timed) <= 1e-8 * (1.0 + norm_space(direct)));
}

TEST_CASE("relative error") {
  const Grid g(8, 1, 0.0, 1.0, 1.0);
  CHECK(relative_error(SpatialField(g, 2.0), SpatialField(g, 2.0)) == 0.0);
  CHECK(relative_error(SpatialField(g, 3.0), SpatialField(g, 2.0)) == doctest::Approx(0.5));
}

TEST_CASE("config validation") {
  auto bad = [](auto mutate) {
    InverseConfig cfg;
    mutate(cfg);
    return cfg;
  };
  CHECK_THROWS_AS(bad([](InverseConfig& c) { c.outer_tol = 0; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(bad([](InverseConfig& c) { c.outer_max = -1; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(bad([](InverseConfig& c) { c.bri_inner_N = 0; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(bad([](InverseConfig& c) { c.bri_delta = 1.5; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(bad([](InverseConfig& c) { c.heci_levels = 0; }).validate(), InvalidArgument);
  CHECK_NOTHROW(InverseConfig{}.validate());
}

TEST_CASE("a constant potential is recovered in one step") {
  const double c = 0.8;
  const MfgProblem p = testing::stationary_problem(20, 10, 1.5, c);
  const Measurement m = measure(p);
  // phi(t) = (T - t)(c + f(1)) for the uniform stationary state.
  for (int i = 0; i < m.phi0.size(); ++i) CHECK(m.phi0[i] == doctest::Approx(1.5 * (c + 1.0)).epsilon(1e-12));

  const InverseResult r = run_eci(p, m, tight_config());
  CHECK(r.converged());
  CHECK(r.iterations == 1);
  REQUIRE(r.history.size() == 2);
  for (int i = 0; i < r.q.size(); ++i) CHECK(r.q[i] == doctest::Approx(c).epsilon(1e-12));
  REQUIRE(r.q_rel_err);
  CHECK(*r.q_rel_err < 1e-12);
}

TEST_CASE("eci recovers the potential with decreasing measurement error") {
  const MfgProblem p = testing::scaling_problem(50, 50);
  const Measurement m = measure(p);
  const InverseResult r = run_eci(p, m, tight_config());
  REQUIRE(r.converged());
  CHECK(r.meas_rel_err() <= 1e-9);
  REQUIRE(r.q_rel_err);
  CHECK(*r.q_rel_err < 1e-6);
  for (std::size_t k = 0; k + 1 < r.history.size(); ++k)
    CHECK(r.history[k + 1].meas_rel_err <= 1.5 * r.history[k].meas_rel_err);
  CHECK(r.history.back().k == r.iterations);
  CHECK(r.hjb_fp_solves() >= r.iterations + 1);
  // Per-solve counters are cumulative.
  for (std::size_t k = 0; k + 1 < r.history.size(); ++k)
    CHECK(r.history[k + 1].hjb_fp_solves_cum > r.history[k].hjb_fp_solves_cum);
}

TEST_CASE("the returned potential is one update ahead of the final solve") {
  const MfgProblem p = testing::scaling_problem(30, 30);
  const Measurement m = measure(p);
  InverseConfig cfg = tight_config();
  cfg.outer_max = 3;
  const InverseResult r = run_eci(p, m, cfg);
  CHECK(r.status == InverseStatus::MaxIterReached);
  CHECK(r.iterations == 3);
  CHECK(r.history.size() == 4);
  // The next run's final solve uses exactly this potential.
  cfg.outer_max = 4;
  const InverseResult next = run_eci(p, m, cfg);
  const SpatialField phi0 = solve(p, r.q, 1e-10).phi.slice(0);
  CHECK(relative_error(next.phi.slice(0), phi0) < 1e-8);
  REQUIRE(r.q_rel_err);
  CHECK(*r.q_rel_err == doctest::Approx(relative_error(r.q, *p.q())).epsilon(1e-14));
}

TEST_CASE("divergence is detected before any update") {
  const MfgProblem p = testing::scaling_problem(20, 20);
  const Measurement tiny(SpatialField(p.grid(), 1e-9));
  InverseConfig cfg = tight_config();
  cfg.q0 = SpatialField(p.grid(), 0.25);
  const InverseResult r = run_eci(p, tiny, cfg);
  CHECK(r.status == InverseStatus::Diverged);
  CHECK(r.iterations == 0);
  for (int i = 0; i < r.q.size(); ++i) CHECK(r.q[i] == 0.25);
}

TEST_CASE("bri with a long inner loop matches eci") {
  const MfgProblem p = testing::scaling_problem(32, 32);
  const Measurement m = measure(p);
  InverseConfig cfg = tight_config();
  cfg.outer_tol = 1e-8;
  const InverseResult eci = run_eci(p, m, cfg);
  cfg.bri_inner_N = 400;
  cfg.bri_delta = 0.5;
  const InverseResult bri = run_bri(p, m, cfg);
  REQUIRE(eci.converged());
  REQUIRE(bri.converged());
  CHECK(relative_error(bri.q, eci.q) < 1e-6);
  // One inner step per outer iteration.
  cfg.bri_inner_N = 1;
  cfg.outer_max = 3;
  const InverseResult short_bri = run_bri(p, m, cfg);
  for (const IterationRecord& h : short_bri.history) CHECK(h.hjb_fp_solves_cum == h.k + 1);
}

TEST_CASE("a one-level hierarchy is eci") {
  const MfgProblem p = testing::scaling_problem(24, 24);
  const Measurement m = measure(p);
  InverseConfig cfg = tight_config();
  const InverseResult eci = run_eci(p, m, cfg);
  cfg.heci_levels = 1;
  const InverseResult heci = run_heci(p, m, cfg);
  REQUIRE(eci.history.size() == heci.history.size());
  for (std::size_t k = 0; k < eci.history.size(); ++k)
    CHECK(eci.history[k].meas_rel_err == heci.history[k].meas_rel_err);
  for (int i = 0; i < eci.q.size(); ++i) CHECK(eci.q[i] == heci.q[i]);
  CHECK(heci.fine_equiv_solves() == doctest::Approx(static_cast<double>(heci.hjb_fp_solves())));
}

TEST_CASE("hierarchical solve visits every level") {
  const MfgProblem p = testing::scaling_problem(64, 64);
  const Measurement m = measure(p);
  InverseConfig cfg = tight_config();
  cfg.heci_levels = 3;
  const InverseResult r = run_heci(p, m, cfg);
  REQUIRE(r.converged());
  CHECK(r.history.front().level == 1);
  CHECK(r.history.back().level == 3);
  for (std::size_t k = 0; k + 1 < r.history.size(); ++k) {
    CHECK(r.history[k + 1].level >= r.history[k].level);
    CHECK(r.history[k + 1].fine_equiv_solves > r.history[k].fine_equiv_solves);
  }
  CHECK(r.fine_equiv_solves() < static_cast<double>(r.hjb_fp_solves()));
  CHECK_THROWS_AS(run_heci(testing::scaling_problem(20, 20), m, cfg), InvalidArgument);
}

TEST_CASE("inversion commutes with cyclic shifts") {
  const int nx = 30, shift = 7;
  const MfgProblem p = testing::scaling_problem(nx, 30);
  const MfgProblem ps(p.nu(), p.hamiltonian(), std::nullopt, p.f(),
                      TerminalCost::fixed(shifted(p.f_T().values(p.grid()), shift)), shifted(p.rho0(), shift),
                      shifted(*p.q(), shift));
  const InverseConfig cfg = tight_config();
  const InverseResult a = run_eci(p, measure(p), cfg);
  const InverseResult b = run_eci(ps, measure(ps), cfg);
  REQUIRE(a.converged());
  REQUIRE(b.converged());
  CHECK(norm_space(shifted(a.q, shift) - b.q) <= 1e-7 * norm_space(a.q));
}

TEST_CASE("update diagnostics") {
  const MfgProblem p = testing::scaling_problem(40, 40);
  const ForwardResult truth = solve(p, *p.q());
  const Measurement m(truth.phi.slice(0));

  const UpdateDiagnostics same = diagnostics(*p.q(), *p.q(), truth.phi, truth.phi, truth.rho, truth.rho, p);
  CHECK(same.q_minus_qhat.max_abs() == 0.0);
  CHECK(same.correction.max_abs() == 0.0);
  CHECK(same.error.max_abs() == 0.0);
  CHECK(same.pec.max_abs() == 0.0);

  std::mt19937_64 rng(5);
  const SpatialField q_hat = *p.q() + testing::random_smooth(p.grid(), rng, 0.3);
  const ForwardResult est = solve(p, q_hat);
  const UpdateDiagnostics d = diagnostics(*p.q(), q_hat, truth.phi, est.phi, truth.rho, est.rho, p);
  const SpatialField next = eci_update(q_hat, est.phi.slice(0), m, p);
  CHECK(norm_space(d.error - (next - *p.q())) <= 1e-8 * (1.0 + norm_space(d.error)));
  CHECK(norm_space(d.correction - (next - q_hat)) <= 1e-8 * (1.0 + norm_space(d.correction)));
  for (int i = 0; i < p.grid().nx(); ++i) CHECK(d.pec[i] == d.q_minus_qhat[i] * d.correction[i]);
}
