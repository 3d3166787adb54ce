#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <utility>

#include "mixflow/momentum.hpp"
#include "mixflow/state.hpp"

namespace mixflow {

// Unnormalized (or normalized) log-density on R^d with gradient. All target
// distributions, synthetic and data-driven, implement this interface.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double log_density(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const = 0;

  // True when log_density integrates to 1 (used by tests, not by inference).
  virtual bool normalization_known() const { return false; }
  virtual std::string name() const = 0;
};

using TargetPtr = std::shared_ptr<const TargetModel>;

// Target lifted to the augmented space: pi-bar(x, rho, u) = pi(x) m(rho),
// uniform in the pseudotime coordinate.
class AugmentedTarget {
 public:
  AugmentedTarget(TargetPtr base, MomentumModel momentum)
      : base_(std::move(base)), momentum_(momentum) {}

  double log_density(const AugmentedState& s) const {
    return base_->log_density(s.x) + momentum_.log_pdf(s.rho);
  }

  std::pair<Eigen::VectorXd, Eigen::VectorXd> grad(
      const AugmentedState& s) const {
    return {base_->grad_log_density(s.x), momentum_.grad_log_pdf(s.rho)};
  }

  const TargetModel& base() const { return *base_; }
  TargetPtr base_ptr() const { return base_; }
  const MomentumModel& momentum() const { return momentum_; }

 private:
  TargetPtr base_;
  MomentumModel momentum_;
};

}  // namespace mixflow
