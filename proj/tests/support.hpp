#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mfginv/grid.hpp"
#include "mfginv/model.hpp"

namespace testing {

using namespace mfginv;

inline SpatialField random_field(const Grid& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  SpatialField u(g);
  for (int i = 0; i < g.nx(); ++i) u[i] = d(rng);
  return u;
}

/// A few low Fourier modes with random coefficients.
inline SpatialField random_smooth(const Grid& g, std::mt19937_64& rng, double amplitude = 1.0) {
  std::uniform_real_distribution<double> d(-amplitude, amplitude);
  const double a1 = d(rng), b1 = d(rng), a2 = d(rng), b2 = d(rng);
  const double L = g.length();
  const double tau = 2.0 * 3.14159265358979323846;
  return SpatialField::sample(g, [&](double x) {
    const double s = tau * (x - g.x_lo()) / L;
    return a1 * std::cos(s) + b1 * std::sin(s) + 0.5 * (a2 * std::cos(2 * s) + b2 * std::sin(2 * s));
  });
}

/// Dense row-major matrix of size n x n.
struct Dense {
  int n;
  std::vector<double> a;
  explicit Dense(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_, 0.0) {}
  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * n + c]; }
};

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

/// Problem of the scaling study on [0, 1].
inline MfgProblem scaling_problem(int nx, int nt) {
  const Grid g(nx, nt, 0.0, 1.0, 1.0);
  const SpatialField rho0 = builtin_density(g, "gaussian", {{"mu", 0.5}, {"sigma", 1.0 / (4.0 * std::sqrt(5.0))}});
  return MfgProblem(0.3, Hamiltonian::quadratic(), std::nullopt, InteractionCost::local_square(),
                    TerminalCost::fixed(rho0 * -1.0), rho0, builtin_potential(g, "trig_exp_mix"));
}

/// Spatially constant stationary problem on [0, 1): uniform density, f = rho,
/// q = c, zero terminal cost.
inline MfgProblem stationary_problem(int nx, int nt, double T, double c = 0.0,
                                     InteractionCost f = InteractionCost::local_identity()) {
  const Grid g(nx, nt, 0.0, 1.0, T);
  return MfgProblem(0.1, Hamiltonian::quadratic(), std::nullopt, std::move(f), TerminalCost::zero(),
                    builtin_density(g, "uniform"), SpatialField(g, c));
}

}  // namespace testing
