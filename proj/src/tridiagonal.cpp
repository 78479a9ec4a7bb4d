#include "mfginv/tridiagonal.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mfginv/errors.hpp"

namespace mfginv {

namespace {

constexpr double kTinyPivot = 1e-300;

// Plain (non-periodic) tridiagonal solve; a[0] and c[n-1] are ignored.
void thomas(std::span<const double> a, std::span<const double> b, std::span<const double> c,
            std::span<const double> r, std::span<double> x, std::vector<double>& scratch) {
  const int n = static_cast<int>(b.size());
  scratch.resize(n);
  double pivot = b[0];
  if (std::abs(pivot) < kTinyPivot) throw LinearSolveFailed("tridiagonal solve: zero pivot at row 0");
  x[0] = r[0] / pivot;
  for (int i = 1; i < n; ++i) {
    scratch[i] = c[i - 1] / pivot;
    pivot = b[i] - a[i] * scratch[i];
    if (std::abs(pivot) < kTinyPivot)
      throw LinearSolveFailed("tridiagonal solve: zero pivot at row " + std::to_string(i));
    x[i] = (r[i] - a[i] * x[i - 1]) / pivot;
  }
  for (int i = n - 2; i >= 0; --i) x[i] -= scratch[i + 1] * x[i + 1];
}

std::vector<double> solve_small(const CyclicTridiagonal& m, std::span<const double> r) {
  const int n = m.size();
  if (n == 1) {
    const double a = m.entry(0, 0);
    if (std::abs(a) < kTinyPivot) throw LinearSolveFailed("1x1 system is singular");
    return {r[0] / a};
  }
  const double a = m.entry(0, 0), b = m.entry(0, 1), c = m.entry(1, 0), d = m.entry(1, 1);
  const double det = a * d - b * c;
  if (std::abs(det) < kTinyPivot) throw LinearSolveFailed("2x2 system is singular");
  return {(d * r[0] - b * r[1]) / det, (a * r[1] - c * r[0]) / det};
}

}  // namespace

double CyclicTridiagonal::entry(int r, int c) const {
  const int n = size();
  double v = 0.0;
  if (c == r) v += diag[r];
  if (c == (r + n - 1) % n) v += lower[r];
  if (c == (r + 1) % n) v += upper[r];
  return v;
}

std::vector<double> CyclicTridiagonal::apply(std::span<const double> x) const {
  const int n = size();
  std::vector<double> y(n);
  if (n < 3) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) y[r] += entry(r, c) * x[c];
    return y;
  }
  y[0] = lower[0] * x[n - 1] + diag[0] * x[0] + upper[0] * x[1];
  for (int i = 1; i < n - 1; ++i) y[i] = lower[i] * x[i - 1] + diag[i] * x[i] + upper[i] * x[i + 1];
  y[n - 1] = lower[n - 1] * x[n - 2] + diag[n - 1] * x[n - 1] + upper[n - 1] * x[0];
  return y;
}

std::vector<double> CyclicTridiagonal::solve(std::span<const double> rhs) const {
  const int n = size();
  if (static_cast<int>(rhs.size()) != n) throw InvalidArgument("cyclic solve: rhs size mismatch");
  if (n < 3) return solve_small(*this, rhs);

  // Rank-one split A = T + u v^T with u = (gamma, 0, ..., 0, alpha),
  // v = (1, 0, ..., 0, beta / gamma).
  const double beta = lower[0];       // A(0, n-1)
  const double alpha = upper[n - 1];  // A(n-1, 0)
  const double gamma = -diag[0];

  std::vector<double> bb(diag);
  bb[0] -= gamma;
  bb[n - 1] -= alpha * beta / gamma;

  std::vector<double> x(n), z(n), u(n, 0.0), scratch;
  thomas(lower, bb, upper, rhs, x, scratch);
  u[0] = gamma;
  u[n - 1] = alpha;
  thomas(lower, bb, upper, u, z, scratch);

  // The correction denominator cancels to roundoff when A is singular.
  const double corner = z[0] + beta * z[n - 1] / gamma;
  const double denom = 1.0 + corner;
  if (!(std::abs(denom) > 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(corner))))
    throw LinearSolveFailed("cyclic solve: singular corner correction");
  const double fact = (x[0] + beta * x[n - 1] / gamma) / denom;
  for (int i = 0; i < n; ++i) {
    x[i] -= fact * z[i];
    if (!std::isfinite(x[i])) throw LinearSolveFailed("cyclic solve: non-finite solution");
  }
  return x;
}

}  // namespace mfginv
