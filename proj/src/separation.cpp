#include "clreg/separation.hpp"

#include <algorithm>
#include <cmath>

#include "clreg/contrastive.hpp"
#include "clreg/error.hpp"
#include "clreg/geometry.hpp"
#include "clreg/rng.hpp"

namespace clreg {
namespace {

void check_pair(const Eigen::Ref<const Eigen::MatrixXd>& f,
                const Eigen::Ref<const Eigen::MatrixXd>& r, const char* who) {
  if (f.rows() < 1 || r.rows() < 1) {
    throw ValidationError(std::string(who) + ": both sets must be non-empty");
  }
  if (f.cols() != r.cols()) {
    throw ValidationError(std::string(who) + ": dimension mismatch " +
                          std::to_string(f.cols()) + " vs " + std::to_string(r.cols()));
  }
  if (!f.allFinite() || !r.allFinite()) {
    throw ValidationError(std::string(who) + ": non-finite coordinates");
  }
}

double mean_sq_deviation(const Eigen::Ref<const Eigen::MatrixXd>& x,
                         const Eigen::RowVectorXd& mu) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    s += (x.row(i) - mu).squaredNorm();
  }
  return s / static_cast<double>(x.rows());
}

// Sum of k(x_i, y_j) over all pairs; when `skip_diagonal`, x and y are the
// same set and i == j is excluded.
double kernel_sum(const Eigen::Ref<const Eigen::MatrixXd>& x,
                  const Eigen::Ref<const Eigen::MatrixXd>& y, double inv_two_b2,
                  bool skip_diagonal) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      if (skip_diagonal && i == j) continue;
      s += std::exp(-(x.row(i) - y.row(j)).squaredNorm() * inv_two_b2);
    }
  }
  return s;
}

// Left-continuous inverse CDF of sorted samples at level u in (0, 1).
double quantile(const std::vector<double>& sorted, double u) {
  const auto n = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil(u * n));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

}  // namespace

std::optional<double> entanglement(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                                   const Eigen::Ref<const Eigen::MatrixXd>& retain) {
  check_pair(forget, retain, "entanglement");
  const Eigen::RowVectorXd mu_f = forget.colwise().mean();
  const Eigen::RowVectorXd mu_r = retain.colwise().mean();
  const double nf = static_cast<double>(forget.rows());
  const double nr = static_cast<double>(retain.rows());
  const Eigen::RowVectorXd mu = (nf * mu_f + nr * mu_r) / (nf + nr);

  const double within = mean_sq_deviation(retain, mu_r) + mean_sq_deviation(forget, mu_f);
  const double between = (mu_r - mu).squaredNorm() + (mu_f - mu).squaredNorm();
  if (!(between > kEntanglementEpsilon)) {
    return std::nullopt;
  }
  return within / between;
}

BandwidthChoice median_heuristic_bandwidths(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                                            const Eigen::Ref<const Eigen::MatrixXd>& retain,
                                            const std::vector<double>& scales) {
  check_pair(forget, retain, "median_heuristic_bandwidths");
  if (scales.empty()) {
    throw ValidationError("bandwidth scale list is empty");
  }
  Eigen::MatrixXd all(forget.rows() + retain.rows(), forget.cols());
  all << forget, retain;

  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(all.rows() * (all.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < all.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < all.rows(); ++j) {
      dists.push_back((all.row(i) - all.row(j)).norm());
    }
  }
  BandwidthChoice out;
  if (!dists.empty()) {
    std::sort(dists.begin(), dists.end());
    const std::size_t h = dists.size() / 2;
    out.median_distance = dists.size() % 2 == 1 ? dists[h] : 0.5 * (dists[h - 1] + dists[h]);
  }
  double base = out.median_distance;
  if (!(base > 0.0)) {
    base = 1.0;
    out.fallback = true;
  }
  for (double s : scales) {
    out.bandwidths.push_back(base * s);
  }
  return out;
}

double mmd2_unbiased(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                     const Eigen::Ref<const Eigen::MatrixXd>& retain, double bandwidth) {
  check_pair(forget, retain, "mmd");
  if (forget.rows() < 2 || retain.rows() < 2) {
    throw ValidationError("unbiased MMD needs at least 2 points per set");
  }
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ValidationError("kernel bandwidth must be positive");
  }
  const double m = static_cast<double>(forget.rows());
  const double n = static_cast<double>(retain.rows());
  const double g = 1.0 / (2.0 * bandwidth * bandwidth);
  const double kff = kernel_sum(forget, forget, g, true) / (m * (m - 1.0));
  const double krr = kernel_sum(retain, retain, g, true) / (n * (n - 1.0));
  const double kfr = kernel_sum(forget, retain, g, false) / (m * n);
  return kff + krr - 2.0 * kfr;
}

double mk_mmd(const Eigen::Ref<const Eigen::MatrixXd>& forget,
              const Eigen::Ref<const Eigen::MatrixXd>& retain,
              const std::optional<std::vector<double>>& bandwidths) {
  check_pair(forget, retain, "mk_mmd");
  if (forget.rows() < 2 || retain.rows() < 2) {
    throw ValidationError("mk_mmd needs at least 2 points per set");
  }
  const std::vector<double> bws =
      bandwidths ? *bandwidths : median_heuristic_bandwidths(forget, retain).bandwidths;
  if (bws.empty()) {
    throw ValidationError("mk_mmd needs at least one bandwidth");
  }
  double s = 0.0;
  for (double b : bws) {
    s += mmd2_unbiased(forget, retain, b);
  }
  return std::max(0.0, s / static_cast<double>(bws.size()));
}

double exact_w2_1d(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) {
    throw ValidationError("exact_w2_1d needs non-empty samples");
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double s = 0.0;
  if (xs.size() == ys.size()) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = xs[i] - ys[i];
      s += d * d;
    }
    return std::sqrt(s / static_cast<double>(xs.size()));
  }
  for (int k = 0; k < kQuantileGrid; ++k) {
    const double u = (k + 0.5) / kQuantileGrid;
    const double d = quantile(xs, u) - quantile(ys, u);
    s += d * d;
  }
  return std::sqrt(s / kQuantileGrid);
}

double sliced_w2(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                 const Eigen::Ref<const Eigen::MatrixXd>& retain, int n_projections,
                 std::uint64_t seed) {
  check_pair(forget, retain, "sliced_w2");
  if (n_projections < 1) {
    throw ValidationError("sliced_w2 needs n_projections >= 1");
  }
  Rng rng = Rng::substream(seed, "sliced_w2/directions");
  const Eigen::Index d = forget.cols();
  Eigen::VectorXd dir(d);
  std::vector<double> xs(static_cast<std::size_t>(forget.rows()));
  std::vector<double> ys(static_cast<std::size_t>(retain.rows()));
  double s = 0.0;
  for (int k = 0; k < n_projections; ++k) {
    double norm = 0.0;
    do {
      for (Eigen::Index j = 0; j < d; ++j) dir[j] = rng.normal();
      norm = dir.norm();
    } while (!(norm > kNormEpsilon));
    dir /= norm;
    Eigen::Map<Eigen::VectorXd>(xs.data(), forget.rows()) = forget * dir;
    Eigen::Map<Eigen::VectorXd>(ys.data(), retain.rows()) = retain * dir;
    const double w = exact_w2_1d(xs, ys);
    s += w * w;
  }
  return std::sqrt(s / n_projections);
}

SeparationReport separation_report(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                                   const Eigen::Ref<const Eigen::MatrixXd>& retain,
                                   const SeparationConfig& cfg) {
  check_pair(forget, retain, "separation_report");
  SeparationReport rep;
  rep.n_projections = cfg.n_projections;
  rep.seed = cfg.seed;

  rep.entanglement = entanglement(forget, retain);
  if (!rep.entanglement) {
    rep.notes.emplace_back("entanglement: set means coincide, ratio undefined");
  }

  if (forget.rows() >= 2 && retain.rows() >= 2) {
    if (cfg.bandwidths) {
      rep.bandwidths = *cfg.bandwidths;
    } else {
      auto choice = median_heuristic_bandwidths(forget, retain, cfg.bandwidth_scales);
      rep.bandwidths = std::move(choice.bandwidths);
      rep.bandwidth_fallback = choice.fallback;
      if (choice.fallback) {
        rep.notes.emplace_back("mk_mmd: median pairwise distance is zero, base bandwidth 1.0 used");
      }
    }
    rep.mk_mmd = mk_mmd(forget, retain, rep.bandwidths);
  } else {
    rep.notes.emplace_back("mk_mmd: unbiased estimator needs at least 2 points per set");
  }

  rep.sliced_w2 = sliced_w2(forget, retain, cfg.n_projections, cfg.seed);

  Eigen::MatrixXd fu = forget;
  Eigen::MatrixXd ru = retain;
  try {
    for (Eigen::Index i = 0; i < fu.rows(); ++i) fu.row(i) = normalize(fu.row(i).transpose()).coords();
    for (Eigen::Index i = 0; i < ru.rows(); ++i) ru.row(i) = normalize(ru.row(i).transpose()).coords();
    rep.cross_similarity = cross_similarity(fu, ru);
  } catch (const DegenerateInputError&) {
    rep.notes.emplace_back("cross_similarity: a point has zero norm");
  }
  return rep;
}

}  // namespace clreg
