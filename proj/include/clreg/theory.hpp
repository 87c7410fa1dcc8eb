#pragma once

// Seeded property suites for the DPO contrastive step: gradient identity,
// one-step decrease of anchor-negative similarity, monotone paired
// similarity over a batch, and separation increase between clusters.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clreg {

struct TheoryOptions {
  int trials = 1000;
  int separation_trials = 200;
  std::uint64_t seed = 0;
  // Test hook: the closed-form anchor gradient is multiplied by this before
  // it is compared or applied. Anything other than 1 should be caught.
  double gradient_scale = 1.0;

  void validate() const;
};

struct TrialSummary {
  std::string name;
  int trials = 0;
  int passed = 0;
  std::optional<std::string> counterexample;  // first failure only

  bool ok() const { return passed == trials; }
};

inline const std::vector<double>& theory_taus() {
  static const std::vector<double> v{0.1, 0.3, 0.5, 0.7, 0.9};
  return v;
}
inline const std::vector<double>& theory_etas() {
  static const std::vector<double> v{1e-3, 1e-2, 1e-1};
  return v;
}

/// Closed-form anchor gradient vs central differences of the loss, every tau
/// per triple. Relative tolerance 1e-6 on the gradient vector norm.
TrialSummary verify_gradient_identity(const TheoryOptions& opt);

/// a'.n < a.n after one unnormalized step, every eta per triple.
TrialSummary verify_one_step_decrease(const TheoryOptions& opt);

/// Mean of a_i.n_i over a batch never increases when every anchor takes one
/// step against its own frozen positive and negative.
TrialSummary verify_paired_similarity(const TheoryOptions& opt);

/// One batch step of forget anchors away from paired retain negatives:
/// mk_mmd and sliced_w2 never decrease, entanglement never increases.
TrialSummary verify_separation_increase(const TheoryOptions& opt);

std::vector<TrialSummary> verify_theory(const TheoryOptions& opt);

}  // namespace clreg
