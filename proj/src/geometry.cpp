#include "clreg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clreg/error.hpp"

namespace clreg {

HiddenStates::HiddenStates(Eigen::MatrixXd values, Eigen::VectorXd mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw ValidationError("hidden states need at least one token and one dimension");
  }
  if (mask_.size() != values_.rows()) {
    throw ValidationError("mask length " + std::to_string(mask_.size()) +
                          " does not match token count " + std::to_string(values_.rows()));
  }
  for (Eigen::Index t = 0; t < mask_.size(); ++t) {
    if (mask_[t] != 0.0 && mask_[t] != 1.0) {
      throw ValidationError("mask entries must be 0 or 1");
    }
  }
  if (mask_.sum() == 0.0) {
    throw ValidationError("mask has no active token");
  }
  if (!values_.allFinite()) {
    throw ValidationError("hidden states contain non-finite values");
  }
}

HiddenStates HiddenStates::single(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  return HiddenStates(Eigen::MatrixXd(row), Eigen::VectorXd::Ones(1));
}

UnitEmbedding UnitEmbedding::from_unit(Eigen::VectorXd v) {
  if (!v.allFinite()) {
    throw ValidationError("embedding contains non-finite values");
  }
  if (std::abs(v.norm() - 1.0) > kUnitTolerance) {
    throw ValidationError("embedding is not unit-norm (norm " + std::to_string(v.norm()) + ")");
  }
  return UnitEmbedding(std::move(v));
}

void DropoutPolicy::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(mu) || !std::isfinite(sigma)) {
    throw ValidationError("dropout policy needs finite mu and sigma >= 0");
  }
  if (!(lo >= 0.0 && lo <= hi && hi < 1.0)) {
    throw ValidationError("dropout policy needs 0 <= lo <= hi < 1");
  }
}

Eigen::VectorXd pool(const HiddenStates& h) {
  // mask^T * values sums the active rows.
  return (h.values().transpose() * h.mask()) / h.mask().sum();
}

UnitEmbedding normalize(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double n = v.norm();
  if (!(n > kNormEpsilon)) {
    throw DegenerateInputError("cannot normalize a vector with norm " + std::to_string(n));
  }
  return UnitEmbedding(v / n);
}

double cosine(const UnitEmbedding& u, const UnitEmbedding& v) {
  if (u.dim() != v.dim()) {
    throw ValidationError("cosine: dimension mismatch " + std::to_string(u.dim()) + " vs " +
                          std::to_string(v.dim()));
  }
  return std::clamp(u.coords().dot(v.coords()), -1.0, 1.0);
}

double sample_dropout_rate(const DropoutPolicy& policy, Rng& rng) {
  policy.validate();
  return std::clamp(rng.normal(policy.mu, policy.sigma), policy.lo, policy.hi);
}

DropoutResult apply_dropout_traced(const HiddenStates& h, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ValidationError("dropout rate must lie in [0, 1), got " + std::to_string(p));
  }
  const double keep_scale = 1.0 / (1.0 - p);
  Eigen::MatrixXd multiplier(h.tokens(), h.dim());
  for (Eigen::Index t = 0; t < h.tokens(); ++t) {
    for (Eigen::Index j = 0; j < h.dim(); ++j) {
      multiplier(t, j) = rng.uniform() < p ? 0.0 : keep_scale;
    }
  }
  Eigen::MatrixXd dropped = h.values().cwiseProduct(multiplier);
  return {HiddenStates(std::move(dropped), h.mask()), std::move(multiplier)};
}

HiddenStates apply_dropout(const HiddenStates& h, double p, Rng& rng) {
  return apply_dropout_traced(h, p, rng).states;
}

UnitEmbedding embed(const HiddenStates& h, const std::optional<DropoutPolicy>& policy,
                    Rng& rng) {
  if (!policy) {
    return normalize(pool(h));
  }
  const double p = sample_dropout_rate(*policy, rng);
  return normalize(pool(apply_dropout(h, p, rng)));
}

}  // namespace clreg
