#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfginv {

/// Uniform periodic space-time grid on [x_lo, x_hi) x [0, T].
///
/// Spatial nodes are x_i = x_lo + i*dx for i = 0..nx-1; node nx is identified
/// with node 0, so only nx independent values are stored per time level.
/// Time levels are t_n = n*dt for n = 0..nt.
class Grid {
 public:
  Grid() = default;
  Grid(int nx, int nt, double x_lo, double x_hi, double T);

  int nx() const { return nx_; }
  int nt() const { return nt_; }
  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  double T() const { return T_; }
  double length() const { return x_hi_ - x_lo_; }
  double dx() const { return (x_hi_ - x_lo_) / nx_; }
  double dt() const { return T_ / nt_; }
  double x(int i) const { return x_lo_ + i * dx(); }
  double t(int n) const { return n * dt(); }

  /// Grid with nx, nt multiplied by 2 (one hierarchy level finer).
  Grid refined() const;
  /// Grid with nx, nt halved; throws InvalidArgument if either is odd.
  Grid coarsened() const;

  bool operator==(const Grid& other) const = default;

 private:
  int nx_ = 1;
  int nt_ = 1;
  double x_lo_ = 0.0;
  double x_hi_ = 1.0;
  double T_ = 1.0;
};

/// Scalar function on the spatial nodes of a grid (one time slice).
class SpatialField {
 public:
  SpatialField() = default;
  explicit SpatialField(const Grid& grid, double value = 0.0);
  SpatialField(const Grid& grid, std::vector<double> values);

  template <class Fn>
  static SpatialField sample(const Grid& grid, Fn&& fn) {
    SpatialField out(grid);
    for (int i = 0; i < grid.nx(); ++i) out.values_[i] = fn(grid.x(i));
    return out;
  }

  const Grid& grid() const { return grid_; }
  int size() const { return static_cast<int>(values_.size()); }
  double& operator[](int i) { return values_[i]; }
  double operator[](int i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vec() const { return values_; }

  bool all_finite() const;
  double max_abs() const;
  double min() const;
  double max() const;

  SpatialField& operator+=(const SpatialField& other);
  SpatialField& operator-=(const SpatialField& other);
  SpatialField& operator*=(double s);
  SpatialField& operator+=(double s);

  friend SpatialField operator+(SpatialField a, const SpatialField& b) { return a += b; }
  friend SpatialField operator-(SpatialField a, const SpatialField& b) { return a -= b; }
  friend SpatialField operator*(SpatialField a, double s) { return a *= s; }
  friend SpatialField operator*(double s, SpatialField a) { return a *= s; }
  friend SpatialField operator+(SpatialField a, double s) { return a += s; }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Scalar function on the full grid, indexed (time level n, space node i).
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  explicit SpaceTimeField(const Grid& grid, double value = 0.0);
  SpaceTimeField(const Grid& grid, std::vector<double> values);

  /// Time-independent extension of a spatial field to every level.
  static SpaceTimeField constant_in_time(const SpatialField& slice);

  const Grid& grid() const { return grid_; }
  int levels() const { return grid_.nt() + 1; }
  double& at(int n, int i) { return values_[static_cast<std::size_t>(n) * grid_.nx() + i]; }
  double at(int n, int i) const { return values_[static_cast<std::size_t>(n) * grid_.nx() + i]; }
  std::span<double> level(int n);
  std::span<const double> level(int n) const;
  SpatialField slice(int n) const;
  void set_slice(int n, const SpatialField& s);
  void set_slice(int n, std::span<const double> s);
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool all_finite() const;
  double max_abs() const;
  double min() const;

  SpaceTimeField& operator+=(const SpaceTimeField& other);
  SpaceTimeField& operator-=(const SpaceTimeField& other);
  SpaceTimeField& operator*=(double s);

  friend SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
  friend SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
  friend SpaceTimeField operator*(SpaceTimeField a, double s) { return a *= s; }
  friend SpaceTimeField operator*(double s, SpaceTimeField a) { return a *= s; }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Pair (v+, v-) of fields sharing one grid: one-sided gradients, velocities.
template <class Field>
struct OneSided {
  Field plus;
  Field minus;
};

using OneSidedSpatial = OneSided<SpatialField>;
using OneSidedSpaceTime = OneSided<SpaceTimeField>;

// --- finite differences (periodic) -----------------------------------------

SpatialField dx_plus(const SpatialField& u);
SpatialField dx_minus(const SpatialField& u);
SpatialField dx_central(const SpatialField& u);
SpatialField laplacian(const SpatialField& u);
/// (D+u, D-u).
OneSidedSpatial gradient(const SpatialField& u);
/// Discrete adjoint of `gradient`: out_i = -(D-(v+) + D+(v-))_i / 2.
SpatialField divergence_adjoint(const OneSidedSpatial& v);

// --- inner products, norms, quadrature --------------------------------------

double inner_space(const SpatialField& u, const SpatialField& v);
double inner_grid(const SpaceTimeField& u, const SpaceTimeField& v);
double inner_onesided(const OneSidedSpatial& u, const OneSidedSpatial& v);
double inner_onesided(const OneSidedSpaceTime& u, const OneSidedSpaceTime& v);
double norm_space(const SpatialField& u);
double norm_grid(const SpaceTimeField& u);
double norm_onesided(const OneSidedSpatial& u);
double integrate(const SpatialField& u);
/// integrate(u) / domain length.
double mean(const SpatialField& u);
/// Spatial norm of one time level of a space-time field.
double norm_level(const SpaceTimeField& u, int n);

// --- grid transfer between hierarchy levels (factor 2 in x and t) -----------

/// Periodic linear interpolation; coincident nodes are copied exactly.
SpatialField refine(const SpatialField& u);
SpaceTimeField refine(const SpaceTimeField& u);
/// Injection at coincident nodes.
SpatialField restrict_to_coarse(const SpatialField& u);
SpaceTimeField restrict_to_coarse(const SpaceTimeField& u);

}  // namespace mfginv
