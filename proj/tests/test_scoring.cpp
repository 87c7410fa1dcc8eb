#include <cmath>

#include <gtest/gtest.h>

#include "clreg/error.hpp"
#include "clreg/rng.hpp"
#include "clreg/scoring.hpp"
#include "oracles.hpp"
#include "score_rows.hpp"

using namespace clreg;

TEST(Prog, BoundaryCases) {
  EXPECT_EQ(prog({"m", 0.9, 0.9, 0.1}).value, 0.0);
  EXPECT_EQ(prog({"m", 0.1, 0.9, 0.1}).value, 1.0);
  EXPECT_EQ(prog({"m", 0.5, 0.75, 0.25}).value, 0.5);
  EXPECT_EQ(prog({"m", -1.0, 0.9, 0.1}).value, 1.0);
  EXPECT_EQ(prog({"m", 2.0, 0.75, -0.25}).value, 1.0);  // moved the wrong way, |ul-ft| > gap
  EXPECT_EQ(prog({"m", 1.0, 0.75, -0.25}).value, 0.25);
}

TEST(Prog, DegenerateDenominator) {
  const auto r = prog({"m", 0.4, 0.5, 0.5});
  EXPECT_EQ(r.value, 1.0);
  EXPECT_TRUE(r.degenerate);
  EXPECT_FALSE(prog({"m", 0.4, 0.5, 0.6}).degenerate);
}

TEST(Prog, LogScale) {
  EXPECT_NEAR(prog({"q", 1e-10, 1e-20, 1.0, true}).value, 0.5, 1e-12);
  EXPECT_THROW(prog({"q", 0.0, 0.5, 1.0, true}), ValidationError);
  EXPECT_THROW(prog({"q", NAN, 0.5, 1.0}), ValidationError);
}

TEST(HarmonicMean, Values) {
  const double v[] = {1.0, 0.5, 0.25};
  EXPECT_DOUBLE_EQ(harmonic_mean(v), 3.0 / 7.0);
  const double z[] = {1.0, 0.0};
  EXPECT_EQ(harmonic_mean(z), 0.0);
  EXPECT_THROW(harmonic_mean(std::span<const double>{}), ValidationError);
}

TEST(UnlearningScore, ReproducesPublishedRows) {
  for (const auto& row : clreg_test::kScoreRows) {
    EXPECT_NEAR(unlearning_score(row.forget_score, row.utility), row.unlearning_score, 5e-5)
        << row.setting << " " << row.method;
  }
}

TEST(PrivLeak, Formula) {
  EXPECT_EQ(priv_leak(0.75, 0.5), 50.0);
  EXPECT_EQ(priv_leak(0.25, 0.5), -50.0);
  EXPECT_EQ(priv_leak(0.5, 0.5), 0.0);
  EXPECT_THROW(priv_leak(0.5, 0.0), ValidationError);
}

TEST(KolmogorovTail, KnownValues) {
  EXPECT_EQ(kolmogorov_tail(0.0), 1.0);
  EXPECT_NEAR(kolmogorov_tail(0.5), 0.9639452436648751, 1e-12);
  EXPECT_NEAR(kolmogorov_tail(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(kolmogorov_tail(1.36), 0.049485876755377876, 1e-12);
  EXPECT_NEAR(kolmogorov_tail(1.1799999), kolmogorov_tail(1.1800001), 1e-6);
  EXPECT_LT(kolmogorov_tail(5.0), 1e-20);
}

TEST(KsTwoSample, StatisticMatchesBruteForce) {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> x(5 + t % 11), y(7 + t % 5);
    // Rounded draws create ties within and across samples.
    for (auto& v : x) v = std::round(rng.normal() * 3.0);
    for (auto& v : y) v = std::round(rng.normal(0.5, 1.0) * 3.0);
    EXPECT_NEAR(ks_two_sample(x, y).statistic, oracle::ks_statistic(x, y), 1e-15);
  }
}

TEST(KsTwoSample, IdenticalSamplesGivePValueOne) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto r = ks_two_sample(x, x);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(KsTwoSample, RejectsTinyOrNonFiniteSamples) {
  EXPECT_THROW(ks_two_sample(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
               ValidationError);
  EXPECT_THROW(ks_two_sample(std::vector<double>{1.0, NAN}, std::vector<double>{1.0, 2.0}),
               ValidationError);
}

TEST(ExactMemorization, CountsPositionwiseMatches) {
  const std::vector<int> gt{1, 2, 3, 4};
  EXPECT_EQ(exact_memorization(std::vector<int>{1, 2, 0, 4}, gt), 0.75);
  EXPECT_EQ(exact_memorization(std::vector<int>{1, 2, 3, 4, 5}, gt), 1.0);
  EXPECT_EQ(exact_memorization(std::vector<int>{}, gt), 0.0);
  EXPECT_THROW(exact_memorization(gt, std::vector<int>{}), ValidationError);
}

TEST(ExtractionStrength, SmallestRegeneratingPrefix) {
  const std::vector<int> seq{5, 6, 7, 8, 9};
  auto from = [&](std::size_t k_min) {
    return Continuer([&seq, k_min](std::span<const int> prefix) {
      if (prefix.size() < k_min) return TokenSequence{0};
      return TokenSequence(seq.begin() + long(prefix.size()), seq.end());
    });
  };
  EXPECT_EQ(extraction_strength(from(1), seq), 0.8);
  EXPECT_EQ(extraction_strength(from(3), seq), 0.4);
  EXPECT_EQ(extraction_strength(from(9), seq), 0.0);
  EXPECT_THROW(extraction_strength(from(1), std::vector<int>{1}), ValidationError);
}

TEST(RougeL, RecallFromLcs) {
  const std::vector<int> ref{1, 2, 3, 4};
  EXPECT_EQ(lcs_length(std::vector<int>{1, 3, 4, 5}, ref), 3u);
  EXPECT_EQ(rouge_l_recall(std::vector<int>{1, 3, 4, 5}, ref), 0.75);
  EXPECT_EQ(rouge_l_recall(std::vector<int>{4, 3, 2, 1}, ref), 0.25);
  EXPECT_EQ(rouge_l_recall(std::vector<int>{}, ref), 0.0);
  EXPECT_THROW(rouge_l_recall(ref, std::vector<int>{}), ValidationError);
}

TEST(Score, AggregatesEverything) {
  ScoreInputs in;
  in.metrics = {{"a", 0.5, 0.75, 0.25}, {"b", 0.3, 0.5, 0.5}};
  in.utility_values = {0.5, 0.5};
  in.auc_ul = 0.75;
  in.auc_rt = 0.5;
  const auto rep = score(in);
  EXPECT_EQ(rep.progs.at("a"), 0.5);
  EXPECT_EQ(rep.progs.at("b"), 1.0);
  EXPECT_EQ(rep.degenerate_progs, std::vector<std::string>{"b"});
  EXPECT_DOUBLE_EQ(rep.forget_score, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*rep.model_utility, 0.5);
  EXPECT_DOUBLE_EQ(*rep.unlearning_score, 2.0 / (1.5 + 2.0));
  EXPECT_EQ(*rep.priv_leak, 50.0);
}

TEST(Score, RejectsBadInputs) {
  ScoreInputs in;
  EXPECT_THROW(score(in), ValidationError);
  in.metrics = {{"a", 0.5, 0.75, 0.25}, {"a", 0.5, 0.75, 0.25}};
  EXPECT_THROW(score(in), ValidationError);
  in.metrics.pop_back();
  in.auc_ul = 0.5;
  EXPECT_THROW(score(in), ValidationError);
}
