#include "clreg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "clreg/error.hpp"

namespace clreg {
namespace {

constexpr int kKsSeriesTerms = 100;

void check_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) {
    throw ValidationError(what + " is not finite");
  }
}

double log_floored(double v) { return std::log(std::max(v, kLogFloor)); }

}  // namespace

ProgResult prog(const MetricTriple& t, double eps) {
  check_finite(t.m_ul, t.name + ".m_ul");
  check_finite(t.m_ft, t.name + ".m_ft");
  check_finite(t.m_rt, t.name + ".m_rt");
  double ul = t.m_ul, ft = t.m_ft, rt = t.m_rt;
  if (t.log_scale) {
    if (!(ul > 0.0 && ft > 0.0 && rt > 0.0)) {
      throw ValidationError("log-scale metric '" + t.name + "' needs positive values");
    }
    ul = log_floored(ul);
    ft = log_floored(ft);
    rt = log_floored(rt);
  }
  const double gap = std::abs(rt - ft);
  if (gap < eps) {
    return {1.0, true};
  }
  return {std::clamp(std::abs(ul - ft) / gap, 0.0, 1.0), false};
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) {
    throw ValidationError("harmonic mean of an empty list");
  }
  double inv = 0.0;
  for (double v : values) {
    check_finite(v, "harmonic mean input");
    if (v <= 0.0) return 0.0;
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

double forget_score(std::span<const MetricTriple> triples, double eps) {
  if (triples.empty()) {
    throw ValidationError("forget score needs at least one metric");
  }
  std::vector<double> progs;
  progs.reserve(triples.size());
  for (const auto& t : triples) progs.push_back(prog(t, eps).value);
  return harmonic_mean(progs);
}

double model_utility(std::span<const double> values) { return harmonic_mean(values); }

double unlearning_score(double forget_score, double utility) {
  const double v[] = {forget_score, utility};
  return harmonic_mean(v);
}

double priv_leak(double auc_ul, double auc_rt) {
  check_finite(auc_ul, "auc_ul");
  check_finite(auc_rt, "auc_rt");
  if (auc_rt == 0.0) {
    throw ValidationError("priv_leak: retrained-model AUC is zero");
  }
  return 100.0 * (auc_ul - auc_rt) / auc_rt;
}

double kolmogorov_tail(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  double tail = 0.0;
  if (lambda < 1.18) {
    // Jacobi-theta form of the CDF converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int j = 1; j <= kKsSeriesTerms; ++j) {
      const double k = 2.0 * j - 1.0;
      cdf += std::exp(-k * k * pi2 / (8.0 * lambda * lambda));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    tail = 1.0 - cdf;
  } else {
    double sign = 1.0;
    for (int j = 1; j <= kKsSeriesTerms; ++j) {
      tail += sign * std::exp(-2.0 * j * j * lambda * lambda);
      sign = -sign;
    }
    tail *= 2.0;
  }
  return std::clamp(tail, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2 || ys.size() < 2) {
    throw ValidationError("ks_two_sample needs at least 2 values per sample");
  }
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  for (double v : a) check_finite(v, "ks sample value");
  for (double v : b) check_finite(v, "ks sample value");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  // Step both ECDFs past each distinct value so ties are handled jointly.
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = n * m / (n + m);
  return {d, kolmogorov_tail(std::sqrt(ne) * d)};
}

double exact_memorization(std::span<const int> pred, std::span<const int> gt) {
  if (gt.empty()) {
    throw ValidationError("exact_memorization: empty ground truth");
  }
  const std::size_t len = std::min(pred.size(), gt.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < len; ++i) {
    if (pred[i] == gt[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gt.size());
}

double extraction_strength(const Continuer& continuer, std::span<const int> seq) {
  if (seq.size() < 2) {
    throw ValidationError("extraction_strength needs a sequence of length >= 2");
  }
  for (std::size_t k = 1; k < seq.size(); ++k) {
    const TokenSequence out = continuer(seq.first(k));
    const auto suffix = seq.subspan(k);
    if (out.size() >= suffix.size() && std::equal(suffix.begin(), suffix.end(), out.begin())) {
      return 1.0 - static_cast<double>(k) / static_cast<double>(seq.size());
    }
  }
  return 0.0;
}

std::size_t lcs_length(std::span<const int> a, std::span<const int> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_recall(std::span<const int> pred, std::span<const int> ref) {
  if (ref.empty()) {
    throw ValidationError("rouge_l_recall: empty reference");
  }
  return static_cast<double>(lcs_length(pred, ref)) / static_cast<double>(ref.size());
}

ScoreReport score(const ScoreInputs& in, double eps) {
  if (in.metrics.empty()) {
    throw ValidationError("score: no forget metrics given");
  }
  ScoreReport rep;
  std::vector<double> progs;
  for (const auto& t : in.metrics) {
    if (rep.progs.count(t.name) != 0) {
      throw ValidationError("score: duplicate metric name '" + t.name + "'");
    }
    const ProgResult p = prog(t, eps);
    rep.progs[t.name] = p.value;
    if (p.degenerate) rep.degenerate_progs.push_back(t.name);
    progs.push_back(p.value);
  }
  rep.forget_score = harmonic_mean(progs);
  if (!in.utility_values.empty()) {
    rep.model_utility = model_utility(in.utility_values);
    rep.unlearning_score = unlearning_score(rep.forget_score, *rep.model_utility);
  }
  if (in.auc_ul.has_value() != in.auc_rt.has_value()) {
    throw ValidationError("score: auc needs both ul and rt");
  }
  if (in.auc_ul) {
    rep.priv_leak = priv_leak(*in.auc_ul, *in.auc_rt);
  }
  return rep;
}

}  // namespace clreg
