#include "mfginv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfginv/errors.hpp"

namespace mfginv {

namespace {

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw InvalidArgument(std::string(what) + ": fields live on different grids");
}

inline int wrap(int i, int n) { return i < 0 ? i + n : (i >= n ? i - n : i); }

}  // namespace

NewtonDiverged::NewtonDiverged(int level, double residual)
    : Error("Newton iteration did not converge at time level " + std::to_string(level) +
            " (residual " + std::to_string(residual) + ")"),
      level_(level),
      residual_(residual) {}

Grid::Grid(int nx, int nt, double x_lo, double x_hi, double T)
    : nx_(nx), nt_(nt), x_lo_(x_lo), x_hi_(x_hi), T_(T) {
  if (nx < 1 || nt < 1) throw InvalidArgument("grid: nx and nt must be positive");
  if (!(x_hi > x_lo)) throw InvalidArgument("grid: x_hi must exceed x_lo");
  if (!(T > 0.0)) throw InvalidArgument("grid: T must be positive");
}

Grid Grid::refined() const { return Grid(2 * nx_, 2 * nt_, x_lo_, x_hi_, T_); }

Grid Grid::coarsened() const {
  if (nx_ % 2 != 0 || nt_ % 2 != 0)
    throw InvalidArgument("grid: cannot coarsen nx=" + std::to_string(nx_) +
                          ", nt=" + std::to_string(nt_) + " by 2");
  return Grid(nx_ / 2, nt_ / 2, x_lo_, x_hi_, T_);
}

// --- SpatialField -----------------------------------------------------------

SpatialField::SpatialField(const Grid& grid, double value) : grid_(grid), values_(grid.nx(), value) {}

SpatialField::SpatialField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != grid.nx())
    throw InvalidArgument("spatial field: expected " + std::to_string(grid.nx()) + " values, got " +
                          std::to_string(values_.size()));
}

bool SpatialField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double SpatialField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SpatialField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double SpatialField::max() const { return *std::max_element(values_.begin(), values_.end()); }

SpatialField& SpatialField::operator+=(const SpatialField& other) {
  require_same_grid(grid_, other.grid_, "spatial +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

SpatialField& SpatialField::operator-=(const SpatialField& other) {
  require_same_grid(grid_, other.grid_, "spatial -=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

SpatialField& SpatialField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

SpatialField& SpatialField::operator+=(double s) {
  for (double& v : values_) v += s;
  return *this;
}

// --- SpaceTimeField ---------------------------------------------------------

SpaceTimeField::SpaceTimeField(const Grid& grid, double value)
    : grid_(grid), values_(static_cast<std::size_t>(grid.nt() + 1) * grid.nx(), value) {}

SpaceTimeField::SpaceTimeField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(grid.nt() + 1) * grid.nx())
    throw InvalidArgument("space-time field: wrong number of values");
}

SpaceTimeField SpaceTimeField::constant_in_time(const SpatialField& slice) {
  SpaceTimeField out(slice.grid());
  for (int n = 0; n <= slice.grid().nt(); ++n) out.set_slice(n, slice);
  return out;
}

std::span<double> SpaceTimeField::level(int n) {
  return std::span<double>(values_).subspan(static_cast<std::size_t>(n) * grid_.nx(), grid_.nx());
}

std::span<const double> SpaceTimeField::level(int n) const {
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(n) * grid_.nx(), grid_.nx());
}

SpatialField SpaceTimeField::slice(int n) const {
  auto s = level(n);
  return SpatialField(grid_, std::vector<double>(s.begin(), s.end()));
}

void SpaceTimeField::set_slice(int n, const SpatialField& s) {
  if (s.size() != grid_.nx()) throw InvalidArgument("set_slice: size mismatch");
  set_slice(n, s.values());
}

void SpaceTimeField::set_slice(int n, std::span<const double> s) {
  std::copy(s.begin(), s.end(), level(n).begin());
}

bool SpaceTimeField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double SpaceTimeField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SpaceTimeField::min() const { return *std::min_element(values_.begin(), values_.end()); }

SpaceTimeField& SpaceTimeField::operator+=(const SpaceTimeField& other) {
  require_same_grid(grid_, other.grid_, "space-time +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

SpaceTimeField& SpaceTimeField::operator-=(const SpaceTimeField& other) {
  require_same_grid(grid_, other.grid_, "space-time -=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

SpaceTimeField& SpaceTimeField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

// --- differences ------------------------------------------------------------

SpatialField dx_plus(const SpatialField& u) {
  const int n = u.size();
  const double inv = 1.0 / u.grid().dx();
  SpatialField out(u.grid());
  for (int i = 0; i < n; ++i) out[i] = (u[wrap(i + 1, n)] - u[i]) * inv;
  return out;
}

SpatialField dx_minus(const SpatialField& u) {
  const int n = u.size();
  const double inv = 1.0 / u.grid().dx();
  SpatialField out(u.grid());
  for (int i = 0; i < n; ++i) out[i] = (u[i] - u[wrap(i - 1, n)]) * inv;
  return out;
}

SpatialField dx_central(const SpatialField& u) {
  SpatialField out = dx_plus(u);
  out += dx_minus(u);
  out *= 0.5;
  return out;
}

SpatialField laplacian(const SpatialField& u) {
  const int n = u.size();
  const double h = u.grid().dx();
  const double inv = 1.0 / (h * h);
  SpatialField out(u.grid());
  for (int i = 0; i < n; ++i) out[i] = (u[wrap(i + 1, n)] - 2.0 * u[i] + u[wrap(i - 1, n)]) * inv;
  return out;
}

OneSidedSpatial gradient(const SpatialField& u) { return {dx_plus(u), dx_minus(u)}; }

SpatialField divergence_adjoint(const OneSidedSpatial& v) {
  require_same_grid(v.plus.grid(), v.minus.grid(), "divergence_adjoint");
  SpatialField out = dx_minus(v.plus);
  out += dx_plus(v.minus);
  out *= -0.5;
  return out;
}

// --- inner products ---------------------------------------------------------

double inner_space(const SpatialField& u, const SpatialField& v) {
  require_same_grid(u.grid(), v.grid(), "inner_space");
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return u.grid().dx() * s;
}

double inner_grid(const SpaceTimeField& u, const SpaceTimeField& v) {
  require_same_grid(u.grid(), v.grid(), "inner_grid");
  double s = 0.0;
  auto a = u.values();
  auto b = v.values();
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return u.grid().dx() * u.grid().dt() * s;
}

double inner_onesided(const OneSidedSpatial& u, const OneSidedSpatial& v) {
  return 0.5 * (inner_space(u.plus, v.plus) + inner_space(u.minus, v.minus));
}

double inner_onesided(const OneSidedSpaceTime& u, const OneSidedSpaceTime& v) {
  return 0.5 * (inner_grid(u.plus, v.plus) + inner_grid(u.minus, v.minus));
}

double norm_space(const SpatialField& u) { return std::sqrt(inner_space(u, u)); }
double norm_grid(const SpaceTimeField& u) { return std::sqrt(inner_grid(u, u)); }
double norm_onesided(const OneSidedSpatial& u) { return std::sqrt(inner_onesided(u, u)); }

double integrate(const SpatialField& u) {
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) s += u[i];
  return u.grid().dx() * s;
}

double mean(const SpatialField& u) { return integrate(u) / u.grid().length(); }

double norm_level(const SpaceTimeField& u, int n) {
  double s = 0.0;
  for (double v : u.level(n)) s += v * v;
  return std::sqrt(u.grid().dx() * s);
}

// --- transfer ---------------------------------------------------------------

namespace {

void refine_row(std::span<const double> coarse, std::span<double> fine) {
  const int n = static_cast<int>(coarse.size());
  for (int i = 0; i < n; ++i) {
    fine[2 * i] = coarse[i];
    fine[2 * i + 1] = 0.5 * (coarse[i] + coarse[wrap(i + 1, n)]);
  }
}

}  // namespace

SpatialField refine(const SpatialField& u) {
  SpatialField out(u.grid().refined());
  refine_row(u.values(), out.values());
  return out;
}

SpaceTimeField refine(const SpaceTimeField& u) {
  const Grid fine = u.grid().refined();
  SpaceTimeField out(fine);
  for (int n = 0; n <= u.grid().nt(); ++n) refine_row(u.level(n), out.level(2 * n));
  for (int n = 0; n < u.grid().nt(); ++n) {
    auto lo = out.level(2 * n);
    auto hi = out.level(2 * n + 2);
    auto mid = out.level(2 * n + 1);
    for (int i = 0; i < fine.nx(); ++i) mid[i] = 0.5 * (lo[i] + hi[i]);
  }
  return out;
}

SpatialField restrict_to_coarse(const SpatialField& u) {
  SpatialField out(u.grid().coarsened());
  for (int i = 0; i < out.size(); ++i) out[i] = u[2 * i];
  return out;
}

SpaceTimeField restrict_to_coarse(const SpaceTimeField& u) {
  const Grid coarse = u.grid().coarsened();
  SpaceTimeField out(coarse);
  for (int n = 0; n <= coarse.nt(); ++n)
    for (int i = 0; i < coarse.nx(); ++i) out.at(n, i) = u.at(2 * n, 2 * i);
  return out;
}

}  // namespace mfginv
