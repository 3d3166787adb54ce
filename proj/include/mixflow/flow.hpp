#pragma once

#include <memory>
#include <utility>

#include "mixflow/state.hpp"

namespace mixflow {

enum class Direction { kForward, kInverse };

// Invertible deterministic map on the augmented space with tractable
// log-Jacobian. forward() reports log|det DT| at the input point; inverse()
// reports log|det DT| at the returned preimage, i.e. the value the forward
// pass would have produced from there. Implementations must throw
// NumericalDivergence if the map produces non-finite coordinates.
class FlowTransform {
 public:
  virtual ~FlowTransform() = default;

  virtual Eigen::Index dim() const = 0;
  virtual std::pair<AugmentedState, double> forward(
      const AugmentedState& s) const = 0;
  virtual std::pair<AugmentedState, double> inverse(
      const AugmentedState& s) const = 0;
};

using FlowPtr = std::shared_ptr<const FlowTransform>;

// The identity map (log-Jacobian 0). Exists so the mixture machinery can be
// exercised and tested independently of any dynamics.
class IdentityTransform : public FlowTransform {
 public:
  explicit IdentityTransform(Eigen::Index dim) : dim_(dim) {}

  Eigen::Index dim() const override { return dim_; }
  std::pair<AugmentedState, double> forward(
      const AugmentedState& s) const override {
    return {s, 0.0};
  }
  std::pair<AugmentedState, double> inverse(
      const AugmentedState& s) const override {
    return {s, 0.0};
  }

 private:
  Eigen::Index dim_;
};

}  // namespace mixflow
