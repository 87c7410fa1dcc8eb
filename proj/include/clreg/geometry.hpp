#pragma once

// Embedding construction: masked mean pooling, L2 normalization, cosine
// similarity and the clamped-Gaussian dropout augmentation used to build
// anchors, positives and negatives.

#include <optional>

#include <Eigen/Dense>

#include "clreg/rng.hpp"

namespace clreg {

inline constexpr double kNormEpsilon = 1e-12;
inline constexpr double kUnitTolerance = 1e-6;

/// Token-by-dimension activations plus a {0,1} attention mask.
class HiddenStates {
 public:
  /// Throws ValidationError unless T >= 1, d >= 1, the mask has T entries in
  /// {0,1} with at least one 1, and every value is finite.
  HiddenStates(Eigen::MatrixXd values, Eigen::VectorXd mask);

  /// Single-token states with mask [1].
  static HiddenStates single(const Eigen::Ref<const Eigen::RowVectorXd>& row);

  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::VectorXd& mask() const { return mask_; }
  Eigen::Index tokens() const { return values_.rows(); }
  Eigen::Index dim() const { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
  Eigen::VectorXd mask_;
};

/// A point on the unit sphere S^{d-1}.
class UnitEmbedding {
 public:
  /// Wraps an already-normalized vector; throws ValidationError if
  /// | ||v|| - 1 | > kUnitTolerance or any entry is non-finite.
  static UnitEmbedding from_unit(Eigen::VectorXd v);

  const Eigen::VectorXd& coords() const { return coords_; }
  Eigen::Index dim() const { return coords_.size(); }

 private:
  explicit UnitEmbedding(Eigen::VectorXd v) : coords_(std::move(v)) {}
  friend UnitEmbedding normalize(const Eigen::Ref<const Eigen::VectorXd>& v);

  Eigen::VectorXd coords_;
};

/// Dropout-rate distribution: Normal(mu, sigma) clamped to [lo, hi].
struct DropoutPolicy {
  double mu = 0.1;
  double sigma = 0.05;
  double lo = 0.0;
  double hi = 0.2;

  /// Throws ValidationError unless sigma >= 0 and 0 <= lo <= hi < 1.
  void validate() const;
};

Eigen::VectorXd pool(const HiddenStates& h);

/// Throws DegenerateInputError when ||v|| <= kNormEpsilon.
UnitEmbedding normalize(const Eigen::Ref<const Eigen::VectorXd>& v);

/// u.v clamped to [-1, 1].
double cosine(const UnitEmbedding& u, const UnitEmbedding& v);

double sample_dropout_rate(const DropoutPolicy& policy, Rng& rng);

/// Inverted dropout together with the per-entry multiplier it applied
/// (0 or 1/(1-p)), which is what a backward pass needs.
struct DropoutResult {
  HiddenStates states;
  Eigen::MatrixXd multiplier;
};

/// Entries are visited row-major; each one consumes one uniform draw and is
/// zeroed when the draw is below p. Throws ValidationError unless 0 <= p < 1.
DropoutResult apply_dropout_traced(const HiddenStates& h, double p, Rng& rng);

HiddenStates apply_dropout(const HiddenStates& h, double p, Rng& rng);

/// normalize(pool(dropout(h))) with a sampled rate, or normalize(pool(h))
/// when no policy is given (the retain-negative recipe).
UnitEmbedding embed(const HiddenStates& h, const std::optional<DropoutPolicy>& policy,
                    Rng& rng);

}  // namespace clreg
