#pragma once

#include <span>
#include <vector>

namespace mfginv {

/// Periodic tridiagonal matrix in row-stencil form:
///
///   (A x)_i = lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1],
///
/// with indices taken modulo n, so lower[0] and upper[n-1] are the corner
/// entries A(0, n-1) and A(n-1, 0).
struct CyclicTridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  CyclicTridiagonal() = default;
  explicit CyclicTridiagonal(int n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

  int size() const { return static_cast<int>(diag.size()); }

  /// Dense entry A(r, c); stencil entries that alias for n <= 2 are summed.
  double entry(int r, int c) const;

  std::vector<double> apply(std::span<const double> x) const;

  /// Thomas elimination with a Sherman-Morrison correction for the corners.
  /// No pivoting; throws LinearSolveFailed on a vanishing pivot or a
  /// non-finite solution.
  std::vector<double> solve(std::span<const double> rhs) const;
};

}  // namespace mfginv
