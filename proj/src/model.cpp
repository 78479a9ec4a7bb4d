#include "mfginv/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfginv/errors.hpp"

namespace mfginv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kImages = 2;  // images k = -2..2 around the minimum-image displacement

double min_image(double d, double length) {
  d = std::fmod(d, length);
  if (d < -0.5 * length) d += length;
  if (d >= 0.5 * length) d -= length;
  return d;
}

double wrapped_gaussian(double d, double sigma, double length) {
  const double base = min_image(d, length);
  double s = 0.0;
  for (int k = -kImages; k <= kImages; ++k) s += gaussian_pdf(base + k * length, 0.0, sigma);
  return s;
}

double require_param(const BuiltinParams& p, const std::string& key, const std::string& owner) {
  auto it = p.find(key);
  if (it == p.end()) throw InvalidArgument(owner + ": missing parameter '" + key + "'");
  return it->second;
}

double indicator(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

// --- Hamiltonian ------------------------------------------------------------

Hamiltonian::Hamiltonian(std::string name, ScalarMap eval, ScalarMap grad)
    : name_(std::move(name)), eval_(std::move(eval)), grad_(std::move(grad)) {
  if (!eval_ || !grad_) throw InvalidArgument("hamiltonian '" + name_ + "' needs both H and H'");
}

Hamiltonian Hamiltonian::quadratic() {
  return Hamiltonian(
      "quadratic", [](double p) { return 0.5 * p * p; }, [](double p) { return p; });
}

double lf_hamiltonian(const Hamiltonian& h, const LaxFriedrichs& lf, double p_plus, double p_minus) {
  return h(0.5 * (p_plus + p_minus)) - lf.nu_num * 0.5 * (p_plus - p_minus);
}

std::pair<double, double> lf_gradients(const Hamiltonian& h, const LaxFriedrichs& lf, double p_plus,
                                       double p_minus) {
  const double g = 0.5 * h.grad(0.5 * (p_plus + p_minus));
  return {g - 0.5 * lf.nu_num, g + 0.5 * lf.nu_num};
}

// --- interaction ------------------------------------------------------------

void BoundInteraction::eval(std::span<const double> rho, std::span<double> out) const {
  const int n = static_cast<int>(rho.size());
  if (kind_ == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (kind_ == 1) {
    for (int i = 0; i < n; ++i) out[i] = pointwise_(rho[i]);
    return;
  }
  std::vector<double> g(n);
  for (int j = 0; j < n; ++j) g[j] = pointwise_(rho[j]);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += kernel_row_[i - j] * g[j];
    for (int j = i + 1; j < n; ++j) s += kernel_row_[i - j + n] * g[j];
    out[i] = s;
  }
}

InteractionCost InteractionCost::absent() { return InteractionCost{}; }

InteractionCost InteractionCost::local(std::string name, ScalarMap f0, Monotonicity tag) {
  if (!f0) throw InvalidArgument("local interaction '" + name + "' has no map");
  InteractionCost c;
  c.kind_ = 1;
  c.name_ = std::move(name);
  c.tag_ = tag;
  c.pointwise_ = std::move(f0);
  return c;
}

InteractionCost InteractionCost::local_identity() {
  return local("identity", [](double r) { return r; }, Monotonicity::Monotone);
}

InteractionCost InteractionCost::local_negated() {
  return local("negated", [](double r) { return -r; }, Monotonicity::NonMonotone);
}

InteractionCost InteractionCost::local_square() {
  return local("square", [](double r) { return r * r; }, Monotonicity::Monotone);
}

InteractionCost InteractionCost::nonlocal(std::string name, KernelMap kernel, ScalarMap g, Monotonicity tag) {
  if (!kernel || !g) throw InvalidArgument("nonlocal interaction '" + name + "' needs kernel and g");
  InteractionCost c;
  c.kind_ = 2;
  c.name_ = std::move(name);
  c.tag_ = tag;
  c.kernel_ = std::move(kernel);
  c.pointwise_ = std::move(g);
  return c;
}

InteractionCost InteractionCost::nonlocal_gaussian(double sigma, bool square_density) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian kernel: sigma must be positive");
  ScalarMap g = square_density ? ScalarMap([](double r) { return r * r; }) : ScalarMap([](double r) { return r; });
  return nonlocal(square_density ? "gaussian_kernel_square" : "gaussian_kernel_identity",
                  [sigma](double d, double length) { return wrapped_gaussian(d, sigma, length); }, std::move(g));
}

BoundInteraction InteractionCost::bind(const Grid& grid) const {
  BoundInteraction b;
  b.kind_ = kind_;
  b.pointwise_ = pointwise_;
  if (kind_ == 2) {
    const int n = grid.nx();
    const double dx = grid.dx();
    b.kernel_row_.resize(n);
    for (int m = 0; m < n; ++m) b.kernel_row_[m] = kernel_(min_image(m * dx, grid.length()), grid.length()) * dx;
  }
  return b;
}

SpatialField eval_interaction(const InteractionCost& f, const SpatialField& rho) {
  SpatialField out(rho.grid());
  f.bind(rho.grid()).eval(rho.values(), out.values());
  return out;
}

// --- terminal cost ----------------------------------------------------------

TerminalCost TerminalCost::zero() { return TerminalCost{}; }

TerminalCost TerminalCost::fixed(SpatialField values) {
  if (!values.all_finite()) throw NonfiniteValue("terminal cost has non-finite values");
  TerminalCost t;
  t.values_ = std::move(values);
  return t;
}

SpatialField TerminalCost::values(const Grid& grid) const {
  if (!values_) return SpatialField(grid, 0.0);
  SpatialField v = *values_;
  while (v.grid().nx() > grid.nx()) v = restrict_to_coarse(v);
  if (v.grid().nx() != grid.nx() || v.grid().x_lo() != grid.x_lo() || v.grid().x_hi() != grid.x_hi())
    throw InvalidArgument("terminal cost is not defined on the requested grid");
  return SpatialField(grid, v.vec());
}

// --- problem ----------------------------------------------------------------

SpatialField normalize_density(SpatialField rho) {
  if (!rho.all_finite()) throw NonfiniteValue("density has non-finite values");
  if (rho.min() < 0.0) throw InvalidArgument("density has negative values");
  const double mass = integrate(rho);
  if (!(mass > 0.0)) throw InvalidArgument("density has zero mass");
  rho *= 1.0 / mass;
  return rho;
}

MfgProblem::MfgProblem(double nu, Hamiltonian hamiltonian, std::optional<double> nu_num, InteractionCost f,
                       TerminalCost f_T, SpatialField rho0, std::optional<SpatialField> q)
    : nu_(nu),
      hamiltonian_(std::move(hamiltonian)),
      nu_num_(nu_num),
      f_(std::move(f)),
      f_T_(std::move(f_T)),
      rho0_(normalize_density(std::move(rho0))),
      q_(std::move(q)) {
  if (!(nu > 0.0)) throw InvalidArgument("problem: viscosity nu must be positive");
  if (nu_num && !(*nu_num >= 0.0)) throw InvalidArgument("problem: numerical viscosity must be nonnegative");
  if (q_ && !(q_->grid() == rho0_.grid())) throw InvalidArgument("problem: q and rho0 live on different grids");
  f_T_.values(rho0_.grid());  // validates the terminal field's grid
}

MfgProblem MfgProblem::with_q(std::optional<SpatialField> q) const {
  MfgProblem p = *this;
  if (q && !(q->grid() == grid())) throw InvalidArgument("problem: q lives on a different grid");
  p.q_ = std::move(q);
  return p;
}

MfgProblem MfgProblem::with_interaction(InteractionCost f) const {
  MfgProblem p = *this;
  p.f_ = std::move(f);
  return p;
}

MfgProblem MfgProblem::coarsened() const {
  std::optional<SpatialField> q;
  if (q_) q = restrict_to_coarse(*q_);
  return MfgProblem(nu_, hamiltonian_, nu_num_, f_, f_T_, restrict_to_coarse(rho0_), std::move(q));
}

// --- builtins ---------------------------------------------------------------

double gaussian_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * kPi) * sigma);
}

std::vector<std::string> builtin_potential_names() {
  return {"zero", "constant", "multiscale_discontinuous", "trig_exp_mix", "exp_sin", "exp_times_sin",
          "cubic_sine_mix"};
}

SpatialField builtin_potential(const Grid& grid, const std::string& name, const BuiltinParams& params) {
  if (name == "zero") return SpatialField(grid, 0.0);
  if (name == "constant") return SpatialField(grid, require_param(params, "value", name));
  if (name == "multiscale_discontinuous") {
    return SpatialField::sample(grid, [](double x) {
      return (indicator(x < 0.4) + indicator(x > 0.7)) * std::sin(20 * kPi * x) * std::exp(-10 * (x - 0.5) * (x - 0.5)) +
             indicator(0.4 < x && x < 0.7) * (-std::exp(x)) + indicator(x > 0.7) * 0.2 * std::sin(100 * kPi * x) -
             indicator(0.3 < x && x < 0.35) + indicator(0.6 < x && x < 0.65);
    });
  }
  if (name == "trig_exp_mix") {
    return SpatialField::sample(grid, [](double x) {
      return 0.1 * (std::sin(2 * kPi * x - std::sin(4 * kPi * x)) + std::exp(std::cos(2 * kPi * x)));
    });
  }
  if (name == "exp_sin") return SpatialField::sample(grid, [](double x) { return std::exp(std::sin(2 * kPi * x)); });
  if (name == "exp_times_sin") {
    const double freq = require_param(params, "freq", name);
    return SpatialField::sample(grid, [freq](double x) { return std::exp(x) * std::sin(2 * kPi * freq * x); });
  }
  if (name == "cubic_sine_mix") {
    return SpatialField::sample(grid, [](double x) {
      return 0.1 * (std::exp(std::sin(2 * kPi * x * x * x)) + (x + 1) * (x - 1) * (x - 0.5) - 2);
    });
  }
  throw InvalidArgument("unknown potential '" + name + "'");
}

SpatialField builtin_density(const Grid& grid, const std::string& name, const BuiltinParams& params) {
  if (name == "uniform") return normalize_density(SpatialField(grid, 1.0));
  if (name == "gaussian") {
    const double mu = require_param(params, "mu", name);
    const double sigma = require_param(params, "sigma", name);
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian density: sigma must be positive");
    const double length = grid.length();
    return normalize_density(
        SpatialField::sample(grid, [&](double x) { return wrapped_gaussian(x - mu, sigma, length); }));
  }
  throw InvalidArgument("unknown density '" + name + "'");
}

}  // namespace mfginv
