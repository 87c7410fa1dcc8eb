#pragma once

// Forget/retain separation metrics on embedding clouds (rows are points).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace clreg {

inline constexpr double kEntanglementEpsilon = 1e-12;
inline constexpr int kQuantileGrid = 1000;

/// Within-set variance over between-set mean separation:
///
///   E = [ mean_R ||phi - mu_R||^2 + mean_F ||phi - mu_F||^2 ]
///       / [ ||mu_R - mu||^2 + ||mu_F - mu||^2 ]
///
/// with mu the pooled mean of R u F. Returns nullopt when the denominator is
/// at most kEntanglementEpsilon (coincident means).
std::optional<double> entanglement(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                                   const Eigen::Ref<const Eigen::MatrixXd>& retain);

struct BandwidthChoice {
  std::vector<double> bandwidths;
  double median_distance = 0.0;
  bool fallback = false;  // median distance was zero, base 1.0 used instead
};

inline const std::vector<double>& default_bandwidth_scales() {
  static const std::vector<double> scales{0.25, 0.5, 1.0, 2.0, 4.0};
  return scales;
}

/// Median pairwise distance over F u R times each scale.
BandwidthChoice median_heuristic_bandwidths(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                                            const Eigen::Ref<const Eigen::MatrixXd>& retain,
                                            const std::vector<double>& scales =
                                                default_bandwidth_scales());

/// Unbiased MMD^2 for one Gaussian kernel exp(-||x-y||^2 / (2 b^2)).
double mmd2_unbiased(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                     const Eigen::Ref<const Eigen::MatrixXd>& retain, double bandwidth);

/// Mean over bandwidths of the unbiased MMD^2, clamped at 0. Uses the median
/// heuristic when no bandwidths are given. Both sets need >= 2 points.
double mk_mmd(const Eigen::Ref<const Eigen::MatrixXd>& forget,
              const Eigen::Ref<const Eigen::MatrixXd>& retain,
              const std::optional<std::vector<double>>& bandwidths = std::nullopt);

/// 2-Wasserstein distance between two 1-D empirical distributions. Equal
/// sizes match sorted samples; unequal sizes compare quantile functions on
/// kQuantileGrid midpoints.
double exact_w2_1d(std::vector<double> xs, std::vector<double> ys);

/// sqrt of the mean squared 1-D W2 over seeded random unit projections.
double sliced_w2(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                 const Eigen::Ref<const Eigen::MatrixXd>& retain, int n_projections,
                 std::uint64_t seed);

struct SeparationConfig {
  int n_projections = 256;
  std::uint64_t seed = 0;
  std::vector<double> bandwidth_scales = default_bandwidth_scales();
  // When set, used verbatim instead of the median heuristic.
  std::optional<std::vector<double>> bandwidths;
};

struct SeparationReport {
  std::optional<double> entanglement;
  std::optional<double> mk_mmd;
  std::optional<double> sliced_w2;
  std::optional<double> cross_similarity;

  std::vector<double> bandwidths;
  bool bandwidth_fallback = false;
  int n_projections = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;

  bool any_metric() const {
    return entanglement || mk_mmd || sliced_w2 || cross_similarity;
  }
};

/// All four metrics; a metric whose preconditions fail is left empty and a
/// note explains why. Cross-similarity uses L2-normalized copies of the rows.
SeparationReport separation_report(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                                   const Eigen::Ref<const Eigen::MatrixXd>& retain,
                                   const SeparationConfig& cfg = {});

}  // namespace clreg
