#include <doctest.h>

#include <random>

#include "mfginv/errors.hpp"
#include "mfginv/tridiagonal.hpp"
#include "support.hpp"

using namespace mfginv;

namespace {

CyclicTridiagonal random_dominant(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  CyclicTridiagonal a(n);
  for (int i = 0; i < n; ++i) {
    a.lower[i] = d(rng);
    a.upper[i] = d(rng);
    a.diag[i] = 2.5 + d(rng);
  }
  return a;
}

// Gaussian elimination with partial pivoting on the dense matrix.
std::vector<double> dense_solve(testing::Dense m, std::vector<double> b) {
  const int n = m.n;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(m(r, k)) > std::abs(m(p, k))) p = r;
    for (int c = 0; c < n; ++c) std::swap(m(k, c), m(p, c));
    std::swap(b[k], b[p]);
    for (int r = k + 1; r < n; ++r) {
      const double f = m(r, k) / m(k, k);
      for (int c = k; c < n; ++c) m(r, c) -= f * m(k, c);
      b[r] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= m(r, c) * x[c];
    x[r] = s / m(r, r);
  }
  return x;
}

}  // namespace

TEST_CASE("cyclic solve matches dense elimination") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int n : {1, 2, 3, 4, 9, 50}) {
    const CyclicTridiagonal a = random_dominant(n, rng);
    testing::Dense m(n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) m(r, c) = a.entry(r, c);
    std::vector<double> b(n);
    for (auto& v : b) v = d(rng);
    const auto x = a.solve(b);
    const auto ref = dense_solve(m, b);
    for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-11));
    const auto back = a.apply(x);
    for (int i = 0; i < n; ++i) CHECK(back[i] == doctest::Approx(b[i]).epsilon(1e-11));
  }
}

TEST_CASE("dense entries place the corners") {
  CyclicTridiagonal a(4);
  a.lower = {1, 2, 3, 4};
  a.diag = {5, 6, 7, 8};
  a.upper = {9, 10, 11, 12};
  CHECK(a.entry(0, 3) == 1);
  CHECK(a.entry(3, 0) == 12);
  CHECK(a.entry(2, 1) == 3);
  CHECK(a.entry(1, 2) == 10);
  CHECK(a.entry(0, 2) == 0);
}

TEST_CASE("singular systems are reported") {
  CyclicTridiagonal a(3);  // rows sum to zero: singular
  for (int i = 0; i < 3; ++i) {
    a.lower[i] = -1.0;
    a.diag[i] = 2.0;
    a.upper[i] = -1.0;
  }
  CHECK_THROWS_AS(a.solve(std::vector<double>{1.0, 0.0, 0.0}), LinearSolveFailed);
}
