#pragma once

#include <stdexcept>
#include <string>

namespace mfginv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NonfiniteValue : public Error {
 public:
  using Error::Error;
};

class LinearSolveFailed : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped above its tolerance where that is fatal.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// Hopf-Cole inverse transform met w <= 0.
class NonpositiveW : public Error {
 public:
  using Error::Error;
};

/// Newton iteration for one HJB time level did not reach tolerance.
class NewtonDiverged : public Error {
 public:
  NewtonDiverged(int level, double residual);
  int level() const { return level_; }
  double residual() const { return residual_; }

 private:
  int level_;
  double residual_;
};

}  // namespace mfginv
