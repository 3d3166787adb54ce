#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mixflow {

// Bad call arguments, malformed configuration, or violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Degenerate numeric input (e.g. a constant series where variance is required).
class DegenerateInput : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// A trajectory produced a non-finite value. step() is the index of the
// flow application (or leapfrog sub-step, for errors raised inside the
// integrator) at which the value first appeared; -1 when unknown.
class NumericalDivergence : public std::runtime_error {
 public:
  explicit NumericalDivergence(const std::string& what, long step = -1)
      : std::runtime_error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

// Malformed input data; the message names the offending row/column when known.
class DataFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failure (missing file, unwritable output).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stochastic optimization produced non-finite parameters. Carries the last
// finite iterate so the caller can inspect or restart from it.
class OptimizationFailure : public std::runtime_error {
 public:
  OptimizationFailure(const std::string& what, Eigen::VectorXd last_mean,
                      Eigen::VectorXd last_log_scale, int step)
      : std::runtime_error(what),
        last_mean_(std::move(last_mean)),
        last_log_scale_(std::move(last_log_scale)),
        step_(step) {}
  const Eigen::VectorXd& last_mean() const noexcept { return last_mean_; }
  const Eigen::VectorXd& last_log_scale() const noexcept { return last_log_scale_; }
  int step() const noexcept { return step_; }

 private:
  Eigen::VectorXd last_mean_;
  Eigen::VectorXd last_log_scale_;
  int step_;
};

}  // namespace mixflow
