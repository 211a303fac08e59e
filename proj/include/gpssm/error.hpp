#pragma once

#include <stdexcept>
#include <string>

namespace gpssm {

// Base for everything the library throws. The CLI maps the subclasses onto
// exit codes (usage 2, data 3, numerical 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data could not be parsed or is unusable (bad CSV, non-finite values).
class DataError : public Error {
 public:
  using Error::Error;
};

// Factorization failure, invalid innovation variance, indefinite kernel...
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Every importance weight underflowed to zero at `step`.
class ParticleCollapse : public NumericalError {
 public:
  explicit ParticleCollapse(int step)
      : NumericalError("particle collapse: all weights are zero at step " +
                       std::to_string(step)),
        step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace gpssm
