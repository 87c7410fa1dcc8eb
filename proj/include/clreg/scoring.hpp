#pragma once

// Unlearning evaluation calculus: progress of each forget metric from the
// finetuned toward the retrained model, harmonic aggregation, privacy leak,
// the KS-based forget quality, and token-level memorization metrics.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clreg {

inline constexpr double kProgEpsilon = 1e-12;
inline constexpr double kLogFloor = 1e-300;

/// One forget metric evaluated on the unlearned, finetuned and retrained
/// models. Log-scale metrics (forget quality p-values) are logged first.
struct MetricTriple {
  std::string name;
  double m_ul = 0.0;
  double m_ft = 0.0;
  double m_rt = 0.0;
  bool log_scale = false;
};

struct ProgResult {
  double value = 0.0;
  bool degenerate = false;  // |m_rt - m_ft| < eps, value forced to 1
};

ProgResult prog(const MetricTriple& t, double eps = kProgEpsilon);

/// K / sum(1/v). Zero if any value is <= 0. Throws on an empty list.
double harmonic_mean(std::span<const double> values);

double forget_score(std::span<const MetricTriple> triples, double eps = kProgEpsilon);

/// Harmonic mean of retain-side metric levels (Prob, ROUGE, TruthRatio).
double model_utility(std::span<const double> values);

/// Harmonic mean of the forget score and the utility value.
double unlearning_score(double forget_score, double utility);

/// 100 * (auc_ul - auc_rt) / auc_rt. Positive means over-unlearning.
double priv_leak(double auc_ul, double auc_rt);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test. The p-value is the asymptotic
/// Kolmogorov tail at lambda = sqrt(ne) * D with ne = n*m/(n+m); each series
/// is truncated at 100 terms.
KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys);

/// Complementary Kolmogorov CDF, P(K > lambda).
double kolmogorov_tail(double lambda);

using TokenSequence = std::vector<int>;

/// Fraction of ground-truth positions matched exactly by the prediction.
double exact_memorization(std::span<const int> pred, std::span<const int> gt);

/// Maps a prefix to the tokens the model would generate after it.
using Continuer = std::function<TokenSequence(std::span<const int>)>;

/// 1 - k/|seq| for the smallest prefix length k in [1, |seq|-1] whose
/// continuation starts with the rest of the sequence; 0 if none does.
double extraction_strength(const Continuer& continuer, std::span<const int> seq);

std::size_t lcs_length(std::span<const int> a, std::span<const int> b);

/// LCS(pred, ref) / |ref|.
double rouge_l_recall(std::span<const int> pred, std::span<const int> ref);

struct ScoreReport {
  std::map<std::string, double> progs;
  std::vector<std::string> degenerate_progs;
  double forget_score = 0.0;
  std::optional<double> model_utility;
  std::optional<double> unlearning_score;
  std::optional<double> priv_leak;
};

struct ScoreInputs {
  std::vector<MetricTriple> metrics;
  std::vector<double> utility_values;
  std::optional<double> auc_ul;
  std::optional<double> auc_rt;
};

ScoreReport score(const ScoreInputs& in, double eps = kProgEpsilon);

}  // namespace clreg
