#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfginv/errors.hpp"
#include "mfginv/pde.hpp"
#include "support.hpp"

using namespace mfginv;
using testing::wrap;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// Max-norm residual of the discrete HJB equations, written out node by node
// for the quadratic Hamiltonian and a local interaction f0.
double hjb_residual_oracle(const MfgProblem& p, const SpatialField& q, const SpaceTimeField& rho,
                           const SpaceTimeField& phi, double (*f0)(double)) {
  const Grid& g = p.grid();
  const int nx = g.nx();
  const double dx = g.dx(), dt = g.dt(), nu = p.nu(), nn = p.lf().nu_num;
  double worst = 0.0;
  for (int n = 0; n < g.nt(); ++n) {
    for (int i = 0; i < nx; ++i) {
      const double c = phi.at(n, i), up = phi.at(n, wrap(i + 1, nx)), dn = phi.at(n, wrap(i - 1, nx));
      const double pp = (up - c) / dx, pm = (c - dn) / dx;
      const double avg = 0.5 * (pp + pm);
      const double h = 0.5 * avg * avg - 0.5 * nn * (pp - pm);
      const double r = -(phi.at(n + 1, i) - c) / dt - nu * (up - 2 * c + dn) / (dx * dx) + h - q[i] -
                       f0(rho.at(n + 1, i));
      worst = std::max(worst, std::abs(r));
    }
  }
  const SpatialField fT = p.f_T().values(g);
  for (int i = 0; i < nx; ++i) worst = std::max(worst, std::abs(phi.at(g.nt(), i) - fT[i]));
  return worst;
}

SpaceTimeField smooth_density_flow(const Grid& g, std::mt19937_64& rng) {
  SpaceTimeField rho(g);
  for (int n = 0; n <= g.nt(); ++n) {
    SpatialField s = testing::random_smooth(g, rng, 0.3);
    s += 1.0;
    rho.set_slice(n, normalize_density(s));
  }
  return rho;
}

SpaceTimeField random_smooth_phi(const Grid& g, std::mt19937_64& rng, double amplitude) {
  SpaceTimeField phi(g);
  const SpatialField a = testing::random_smooth(g, rng, amplitude);
  const SpatialField b = testing::random_smooth(g, rng, amplitude);
  for (int n = 0; n <= g.nt(); ++n) {
    const double t = g.t(n) / g.T();
    phi.set_slice(n, a * (1.0 - t) + b * t);
  }
  return phi;
}

MfgProblem generic_problem(const Grid& g, std::mt19937_64& rng, std::optional<double> nu_num = std::nullopt) {
  SpatialField rho0 = testing::random_smooth(g, rng, 0.3);
  rho0 += 1.0;
  return MfgProblem(0.15, Hamiltonian::quadratic(), nu_num, InteractionCost::local_identity(),
                    TerminalCost::fixed(testing::random_smooth(g, rng, 0.5)), rho0);
}

double identity(double r) { return r; }

}  // namespace

TEST_CASE("HJB on the stationary constant case is exact") {
  for (double c : {0.0, 0.7, -0.3}) {
    const MfgProblem p = testing::stationary_problem(16, 10, 2.0, c);
    const SpaceTimeField rho = SpaceTimeField::constant_in_time(p.rho0());
    const SpaceTimeField phi = solve_hjb(p, *p.q(), rho);
    for (int n = 0; n <= p.grid().nt(); ++n)
      for (int i = 0; i < p.grid().nx(); ++i)
        CHECK(phi.at(n, i) == doctest::Approx((1.0 + c) * (p.grid().T() - p.grid().t(n))).epsilon(1e-13));
  }
}

TEST_CASE("HJB solution satisfies the discrete equation") {
  std::mt19937_64 rng(31);
  const Grid g(48, 30, -1.0, 1.0, 1.0);
  const MfgProblem p = generic_problem(g, rng);
  const SpatialField q = testing::random_smooth(g, rng, 1.0);
  const SpaceTimeField rho = smooth_density_flow(g, rng);
  const SpaceTimeField phi = solve_hjb(p, q, rho);
  CHECK(hjb_residual_oracle(p, q, rho, phi, identity) <= 1e-10);
}

TEST_CASE("constant shift in the potential shifts the value function by c(T - t)") {
  std::mt19937_64 rng(12);
  const Grid g(40, 20, 0.0, 1.0, 1.5);
  const MfgProblem p = generic_problem(g, rng);
  const SpatialField q = testing::random_smooth(g, rng, 1.0);
  const SpaceTimeField rho = smooth_density_flow(g, rng);
  const double c = 0.8;
  const SpaceTimeField a = solve_hjb(p, q, rho), b = solve_hjb(p, q + c, rho);
  double worst = 0.0;
  for (int n = 0; n <= g.nt(); ++n)
    for (int i = 0; i < g.nx(); ++i) worst = std::max(worst, std::abs(b.at(n, i) - a.at(n, i) - c * (g.T() - g.t(n))));
  CHECK(worst <= 1e-10);
}

TEST_CASE("HJB converges at first order on a manufactured solution") {
  // phi = a(t) cos(2 pi x) + b(t) with b' = pi^2 a^2 - 1, so the source
  // -phi_t - nu phi_xx + phi_x^2/2 has unit mean and can be carried by a
  // unit-mass density through f(rho) = rho.
  const double nu = 0.1, T = 1.0;
  auto a = [](double t) { return 0.1 * (1.0 + t); };
  auto da = [](double) { return 0.1; };
  auto b = [&](double t) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return pi2 * 0.01 * (std::pow(1 + t, 3) - std::pow(1 + T, 3)) / 3.0 - (t - T);
  };
  auto db = [&](double t) { return std::numbers::pi * std::numbers::pi * a(t) * a(t) - 1.0; };
  auto exact = [&](double x, double t) { return a(t) * std::cos(kTau * x) + b(t); };
  auto source = [&](double x, double t) {
    const double phi_t = da(t) * std::cos(kTau * x) + db(t);
    const double phi_x = -kTau * a(t) * std::sin(kTau * x);
    const double phi_xx = -kTau * kTau * a(t) * std::cos(kTau * x);
    return -phi_t - nu * phi_xx + 0.5 * phi_x * phi_x;
  };
  auto error = [&](int nx) {
    const Grid g(nx, nx, 0.0, 1.0, T);
    const SpatialField fT = SpatialField::sample(g, [&](double x) { return exact(x, T); });
    const MfgProblem p(nu, Hamiltonian::quadratic(), std::nullopt, InteractionCost::local_identity(),
                       TerminalCost::fixed(fT), builtin_density(g, "uniform"));
    SpaceTimeField rho(g);
    for (int n = 0; n <= g.nt(); ++n) {
      const double t = g.t(n);
      rho.set_slice(n, SpatialField::sample(g, [&](double x) { return source(x, t); }));
    }
    const SpaceTimeField phi = solve_hjb(p, SpatialField(g, 0.0), rho);
    double e = 0.0;
    for (int n = 0; n <= g.nt(); ++n)
      for (int i = 0; i < nx; ++i) e = std::max(e, std::abs(phi.at(n, i) - exact(g.x(i), g.t(n))));
    return e;
  };
  const double e1 = error(32), e2 = error(64);
  CHECK(e2 < e1);
  CHECK(e1 / e2 >= 1.7);
}

TEST_CASE("FP preserves mass and uniform densities") {
  std::mt19937_64 rng(41);
  const Grid g(128, 100, 0.0, 1.0, 1.0);
  const MfgProblem p(0.1, Hamiltonian::quadratic(), std::nullopt, InteractionCost::local_identity(),
                     TerminalCost::zero(), builtin_density(g, "gaussian", {{"mu", 0.4}, {"sigma", 0.1}}));
  for (int trial = 0; trial < 20; ++trial) {
    const SpaceTimeField phi = random_smooth_phi(g, rng, 2.0);
    const SpaceTimeField rho = solve_fp(p, phi);
    const double m0 = integrate(rho.slice(0));
    for (int n = 1; n <= g.nt(); ++n) CHECK(std::abs(integrate(rho.slice(n)) - m0) <= 1e-12 * m0);
  }

  const MfgProblem u = testing::stationary_problem(32, 8, 1.0);
  const SpaceTimeField rho = solve_fp(u, SpaceTimeField(u.grid(), 3.0));
  for (double v : rho.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("FP step operator is the transpose of the linearized HJB operator") {
  std::mt19937_64 rng(5);
  const Grid g(8, 4, 0.0, 1.0, 1.0);
  for (std::optional<double> nn : {std::optional<double>(0.0), std::optional<double>()}) {
    const MfgProblem p = generic_problem(g, rng, nn);
    const SpatialField phi = testing::random_field(g, rng, -1.0, 1.0);
    const double dx = g.dx(), dt = g.dt(), nu = p.nu(), nun = p.lf().nu_num;

    // Linearization of phi -> -(next - phi)/dt - nu Lap phi + H_LF(D+ phi, D- phi),
    // assembled from the derivative of the quadratic LF Hamiltonian.
    testing::Dense J(g.nx());
    for (int i = 0; i < g.nx(); ++i) {
      const int ip = wrap(i + 1, g.nx()), im = wrap(i - 1, g.nx());
      const double pp = (phi[ip] - phi[i]) / dx, pm = (phi[i] - phi[im]) / dx;
      const double avg = 0.5 * (pp + pm);
      const double dHp = 0.5 * avg - 0.5 * nun, dHm = 0.5 * avg + 0.5 * nun;
      J(i, i) += 1.0 / dt + 2.0 * nu / (dx * dx) - dHp / dx + dHm / dx;
      J(i, ip) += -nu / (dx * dx) + dHp / dx;
      J(i, im) += -nu / (dx * dx) - dHm / dx;
    }
    const CyclicTridiagonal fp = fp_operator(p, phi.values());
    const CyclicTridiagonal hj = hjb_jacobian(p, phi.values());
    for (int r = 0; r < g.nx(); ++r)
      for (int c = 0; c < g.nx(); ++c) {
        CHECK(std::abs(fp.entry(r, c) - J(c, r)) <= 1e-12 * (1.0 + std::abs(J(c, r))));
        CHECK(std::abs(hj.entry(r, c) - J(r, c)) <= 1e-12 * (1.0 + std::abs(J(r, c))));
      }
  }
}

TEST_CASE("velocity and Lax-Friedrichs diffusion") {
  std::mt19937_64 rng(6);
  const Grid g(20, 4, 0.0, 1.0, 1.0);
  const MfgProblem p0 = generic_problem(g, rng, 0.0);
  // A linear ramp inside the period has matched one-sided slopes away from the wrap.
  const SpatialField ramp = SpatialField::sample(g, [](double x) { return 0.5 * x; });
  const OneSidedSpatial v = velocity(p0, ramp);
  for (int i = 1; i < g.nx() - 1; ++i) {
    CHECK(v.plus[i] == doctest::Approx(-0.5));
    CHECK(v.minus[i] == doctest::Approx(-0.5));
  }
  // With phi constant the velocity pair is (nu_n, -nu_n): the FP operator is
  // implicit diffusion with coefficient nu + nu_n dx / 2.
  const MfgProblem p = generic_problem(g, rng);
  const CyclicTridiagonal op = fp_operator(p, SpatialField(g, 1.0).values());
  const double d = (p.nu() + 0.5 * p.lf().nu_num * g.dx()) / (g.dx() * g.dx());
  for (int i = 0; i < g.nx(); ++i) {
    CHECK(op.diag[i] == doctest::Approx(1.0 / g.dt() + 2.0 * d));
    CHECK(op.lower[i] == doctest::Approx(-d));
    CHECK(op.upper[i] == doctest::Approx(-d));
  }
}

TEST_CASE("density moves toward low potential") {
  // With q larger on the right half, agents drift left.
  const Grid g(64, 40, 0.0, 1.0, 1.0);
  const MfgProblem p(0.05, Hamiltonian::quadratic(), std::nullopt, InteractionCost::absent(), TerminalCost::zero(),
                     builtin_density(g, "uniform"));
  const SpatialField q = SpatialField::sample(g, [](double x) { return std::cos(kTau * x); });
  const SpaceTimeField phi = solve_hjb(p, q, SpaceTimeField::constant_in_time(p.rho0()));
  const SpaceTimeField rho = solve_fp(p, phi);
  const SpatialField end = rho.slice(g.nt());
  // q is lowest at x = 1/2.
  CHECK(end[32] > end[0]);
  CHECK(end[32] > 1.0);
}

TEST_CASE("HJB input validation") {
  const MfgProblem p = testing::stationary_problem(8, 4, 1.0);
  const Grid other(9, 4, 0.0, 1.0, 1.0);
  CHECK_THROWS_AS(solve_hjb(p, SpatialField(other), SpaceTimeField::constant_in_time(p.rho0())), InvalidArgument);
  CHECK_THROWS_AS(solve_hjb(p, *p.q(), SpaceTimeField::constant_in_time(p.rho0()), NewtonParams{0.0, 5}),
                  InvalidArgument);
  SpatialField bad = *p.q();
  bad[3] = std::nan("");
  CHECK_THROWS_AS(solve_hjb(p, bad, SpaceTimeField::constant_in_time(p.rho0())), NonfiniteValue);
}
