#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfginv/grid.hpp"

namespace mfginv {

using ScalarMap = std::function<double(double)>;
/// Kernel K(d, L) of the minimum-image displacement d in [-L/2, L/2) on a
/// torus of length L.
using KernelMap = std::function<double(double, double)>;

/// Hamiltonian H(p) together with its derivative H'(p).
class Hamiltonian {
 public:
  Hamiltonian(std::string name, ScalarMap eval, ScalarMap grad);

  /// H(p) = p^2 / 2.
  static Hamiltonian quadratic();

  double operator()(double p) const { return eval_(p); }
  double grad(double p) const { return grad_(p); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  ScalarMap eval_;
  ScalarMap grad_;
};

/// Numerical viscosity coefficient nu_n of the Lax-Friedrichs Hamiltonian.
struct LaxFriedrichs {
  double nu_num = 0.0;
};

/// H((p+ + p-)/2) - nu_n (p+ - p-)/2.
double lf_hamiltonian(const Hamiltonian& h, const LaxFriedrichs& lf, double p_plus, double p_minus);

/// Partial derivatives of lf_hamiltonian with respect to p+ and p-.
std::pair<double, double> lf_gradients(const Hamiltonian& h, const LaxFriedrichs& lf, double p_plus,
                                       double p_minus);

enum class Monotonicity { Monotone, NonMonotone, Unknown };

/// Interaction cost evaluated on a fixed grid; nonlocal kernels are
/// pre-tabulated as one circulant row.
class BoundInteraction {
 public:
  void eval(std::span<const double> rho, std::span<double> out) const;
  bool absent() const { return kind_ == 0; }

 private:
  friend class InteractionCost;
  int kind_ = 0;  // 0 absent, 1 local, 2 nonlocal
  ScalarMap pointwise_;
  std::vector<double> kernel_row_;  // K at signed offset m*dx, times dx
};

/// Running cost f(x, rho): absent, local f0(rho(x)), or nonlocal
/// sum_j K(x_i - x_j) g(rho_j) dx with a kernel on periodic displacement.
class InteractionCost {
 public:
  static InteractionCost absent();
  static InteractionCost local(std::string name, ScalarMap f0, Monotonicity tag = Monotonicity::Unknown);
  static InteractionCost local_identity();
  static InteractionCost local_negated();
  static InteractionCost local_square();
  static InteractionCost nonlocal(std::string name, KernelMap kernel, ScalarMap g,
                                  Monotonicity tag = Monotonicity::Unknown);
  /// Gaussian kernel rho_G(d; 0, sigma) summed over the 5 nearest periodic images.
  static InteractionCost nonlocal_gaussian(double sigma, bool square_density);

  bool is_absent() const { return kind_ == 0; }
  Monotonicity monotonicity() const { return tag_; }
  const std::string& name() const { return name_; }

  BoundInteraction bind(const Grid& grid) const;

 private:
  int kind_ = 0;
  std::string name_ = "absent";
  Monotonicity tag_ = Monotonicity::Monotone;
  ScalarMap pointwise_;
  KernelMap kernel_;
};

SpatialField eval_interaction(const InteractionCost& f, const SpatialField& rho);

/// Terminal cost f_T(x); independent of the density.
class TerminalCost {
 public:
  static TerminalCost zero();
  static TerminalCost fixed(SpatialField values);

  bool is_zero() const { return !values_.has_value(); }
  /// Values on `grid`; a fixed field defined on a finer grid is injected.
  SpatialField values(const Grid& grid) const;

 private:
  std::optional<SpatialField> values_;
};

/// Forward problem data: viscosity, Hamiltonian, Lax-Friedrichs viscosity,
/// interaction and terminal costs, initial density (unit mass) and, in twin
/// experiments, the true ambient potential.
class MfgProblem {
 public:
  /// `nu_num` unset means nu_n = dx of whichever grid the problem lives on.
  MfgProblem(double nu, Hamiltonian hamiltonian, std::optional<double> nu_num, InteractionCost f,
             TerminalCost f_T, SpatialField rho0, std::optional<SpatialField> q = std::nullopt);

  double nu() const { return nu_; }
  const Hamiltonian& hamiltonian() const { return hamiltonian_; }
  const std::optional<double>& nu_num_setting() const { return nu_num_; }
  LaxFriedrichs lf() const { return {nu_num_.value_or(grid().dx())}; }
  const InteractionCost& f() const { return f_; }
  const TerminalCost& f_T() const { return f_T_; }
  const SpatialField& rho0() const { return rho0_; }
  const std::optional<SpatialField>& q() const { return q_; }
  const Grid& grid() const { return rho0_.grid(); }

  MfgProblem with_q(std::optional<SpatialField> q) const;
  MfgProblem with_interaction(InteractionCost f) const;
  /// Same problem on the grid one hierarchy level coarser (injection of
  /// rho0, f_T and q; rho0 renormalized).
  MfgProblem coarsened() const;

 private:
  double nu_;
  Hamiltonian hamiltonian_;
  std::optional<double> nu_num_;
  InteractionCost f_;
  TerminalCost f_T_;
  SpatialField rho0_;
  std::optional<SpatialField> q_;
};

/// Scales a nonnegative field to unit integral; throws on zero mass.
SpatialField normalize_density(SpatialField rho);

/// Gaussian density on the real line.
double gaussian_pdf(double x, double mu, double sigma);

using BuiltinParams = std::map<std::string, double>;

/// Closed-form ambient potentials sampled on the grid nodes. Names:
///   constant (value), zero, multiscale_discontinuous, trig_exp_mix, exp_sin,
///   exp_times_sin (freq), cubic_sine_mix.
SpatialField builtin_potential(const Grid& grid, const std::string& name, const BuiltinParams& params = {});

/// Densities renormalized to unit mass. Names: uniform, gaussian (mu, sigma),
/// wrapped over the 5 nearest periodic images.
SpatialField builtin_density(const Grid& grid, const std::string& name, const BuiltinParams& params = {});

std::vector<std::string> builtin_potential_names();

}  // namespace mfginv
