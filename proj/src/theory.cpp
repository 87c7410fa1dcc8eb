#include "clreg/theory.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "clreg/contrastive.hpp"
#include "clreg/error.hpp"
#include "clreg/geometry.hpp"
#include "clreg/rng.hpp"
#include "clreg/separation.hpp"

namespace clreg {
namespace {

constexpr double kFdStep = 1e-7;
constexpr double kGradientRelTol = 1e-6;
constexpr int kSlicedProjections = 256;

Eigen::VectorXd random_unit(Eigen::Index d, Rng& rng) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
  return normalize(v).coords();
}

UnitEmbedding unit(const Eigen::VectorXd& v) { return UnitEmbedding::from_unit(v); }

std::string fmt(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ']';
  return os.str();
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << x;
  return os.str();
}

Eigen::VectorXd hooked_gradient(const Eigen::VectorXd& a, const Eigen::VectorXd& p,
                                const Eigen::VectorXd& n, double tau, const TheoryOptions& opt) {
  return opt.gradient_scale * anchor_gradient(unit(a), unit(p), unit(n), tau);
}

// anchor_step plus whatever the hook adds on top of the true gradient.
Eigen::VectorXd hooked_step(const Eigen::VectorXd& a, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& n, double tau, double eta,
                            const TheoryOptions& opt) {
  Eigen::VectorXd out = anchor_step(unit(a), unit(p), unit(n), tau, eta, false);
  if (opt.gradient_scale != 1.0) {
    out -= eta * (opt.gradient_scale - 1.0) * anchor_gradient(unit(a), unit(p), unit(n), tau);
  }
  return out;
}

// p and n drawn independently can only coincide by accident; redraw if so.
void draw_distinct(Eigen::VectorXd& p, Eigen::VectorXd& n, Eigen::Index d, Rng& rng) {
  p = random_unit(d, rng);
  do {
    n = random_unit(d, rng);
  } while (n == p);
}

double single_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& p,
                   const Eigen::VectorXd& n, double tau) {
  ContrastiveBatch b;
  b.anchors = a.transpose();
  b.positives = p.transpose();
  b.negatives = n.transpose();
  return dpo_cl_loss(b, tau);
}

Rng trial_rng(std::uint64_t seed, std::string_view suite, int t) {
  return Rng(Rng::derive(Rng::derive(seed, suite), static_cast<std::uint64_t>(t)));
}

void record(TrialSummary& s, bool ok, const std::string& detail) {
  ++s.trials;
  if (ok) {
    ++s.passed;
  } else if (!s.counterexample) {
    s.counterexample = detail;
  }
}

Eigen::MatrixXd cluster(const Eigen::VectorXd& center, int n, double spread, Rng& rng) {
  Eigen::MatrixXd out(n, center.size());
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = center;
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] += spread * rng.normal();
    out.row(i) = normalize(v).coords().transpose();
  }
  return out;
}

}  // namespace

void TheoryOptions::validate() const {
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (separation_trials < 1) throw ValidationError("separation trials must be >= 1");
  if (!std::isfinite(gradient_scale)) throw ValidationError("gradient scale must be finite");
}

TrialSummary verify_gradient_identity(const TheoryOptions& opt) {
  opt.validate();
  TrialSummary s;
  s.name = "gradient_identity";
  for (int t = 0; t < opt.trials; ++t) {
    Rng rng = trial_rng(opt.seed, "theory/gradient", t);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.index(15));
    const Eigen::VectorXd a = random_unit(d, rng);
    Eigen::VectorXd p, n;
    draw_distinct(p, n, d, rng);
    for (double tau : theory_taus()) {
      const Eigen::VectorXd g = hooked_gradient(a, p, n, tau, opt);
      Eigen::VectorXd fd(d);
      for (Eigen::Index k = 0; k < d; ++k) {
        Eigen::VectorXd up = a, down = a;
        up[k] += kFdStep;
        down[k] -= kFdStep;
        fd[k] = (single_loss(up, p, n, tau) - single_loss(down, p, n, tau)) / (2.0 * kFdStep);
      }
      const double err = (g - fd).norm();
      const double scale = std::max(g.norm(), fd.norm());
      const bool ok = err <= kGradientRelTol * scale;
      record(s, ok,
             "a=" + fmt(a) + " p=" + fmt(p) + " n=" + fmt(n) + " tau=" + fmt(tau) +
                 " analytic=" + fmt(g) + " finite_difference=" + fmt(fd) +
                 " rel_err=" + fmt(scale > 0.0 ? err / scale : err));
    }
  }
  return s;
}

TrialSummary verify_one_step_decrease(const TheoryOptions& opt) {
  opt.validate();
  TrialSummary s;
  s.name = "one_step_decrease";
  for (int t = 0; t < opt.trials; ++t) {
    Rng rng = trial_rng(opt.seed, "theory/one_step", t);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.index(15));
    const Eigen::VectorXd a = random_unit(d, rng);
    Eigen::VectorXd p, n;
    draw_distinct(p, n, d, rng);
    const double tau = theory_taus()[rng.index(theory_taus().size())];
    for (double eta : theory_etas()) {
      const Eigen::VectorXd next = hooked_step(a, p, n, tau, eta, opt);
      const double before = a.dot(n);
      const double after = next.dot(n);
      record(s, after < before,
             "a=" + fmt(a) + " p=" + fmt(p) + " n=" + fmt(n) + " tau=" + fmt(tau) +
                 " eta=" + fmt(eta) + " a.n before=" + fmt(before) + " after=" + fmt(after));
    }
  }
  return s;
}

TrialSummary verify_paired_similarity(const TheoryOptions& opt) {
  opt.validate();
  TrialSummary s;
  s.name = "paired_similarity";
  for (int t = 0; t < opt.trials; ++t) {
    Rng rng = trial_rng(opt.seed, "theory/paired", t);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.index(15));
    const int b = 2 + static_cast<int>(rng.index(15));
    const double tau = theory_taus()[rng.index(theory_taus().size())];
    const double eta = theory_etas()[rng.index(theory_etas().size())];
    double before = 0.0;
    double after = 0.0;
    std::ostringstream first;
    for (int i = 0; i < b; ++i) {
      const Eigen::VectorXd a = random_unit(d, rng);
      Eigen::VectorXd p, n;
      draw_distinct(p, n, d, rng);
      before += a.dot(n);
      after += hooked_step(a, p, n, tau, eta, opt).dot(n);
      if (i == 0) first << "first triple a=" << fmt(a) << " p=" << fmt(p) << " n=" << fmt(n);
    }
    before /= b;
    after /= b;
    record(s, after <= before,
           "batch=" + std::to_string(b) + " d=" + std::to_string(d) + " tau=" + fmt(tau) +
               " eta=" + fmt(eta) + " mean a.n before=" + fmt(before) + " after=" +
               fmt(after) + " " + first.str());
  }
  return s;
}

TrialSummary verify_separation_increase(const TheoryOptions& opt) {
  opt.validate();
  TrialSummary s;
  s.name = "separation_increase";
  for (int t = 0; t < opt.separation_trials; ++t) {
    Rng rng = trial_rng(opt.seed, "theory/separation", t);
    const Eigen::Index d = 3 + static_cast<Eigen::Index>(rng.index(6));
    const int nf = 8 + static_cast<int>(rng.index(9));
    const int nr = nf + static_cast<int>(rng.index(9));
    const Eigen::VectorXd cf = random_unit(d, rng);
    Eigen::VectorXd cr;
    do {
      cr = random_unit(d, rng);
    } while (std::abs(cf.dot(cr)) > 0.5);
    const double sf = rng.uniform(0.1, 0.3);
    const double sr = rng.uniform(0.1, 0.3);
    const Eigen::MatrixXd forget = cluster(cf, nf, sf, rng);
    const Eigen::MatrixXd retain = cluster(cr, nr, sr, rng);
    const Eigen::MatrixXd positives = cluster(cf, nf, 0.05, rng);
    const auto order = rng.permutation(static_cast<std::size_t>(nr));
    const double tau = theory_taus()[rng.index(theory_taus().size())];
    const double eta = theory_etas()[rng.index(theory_etas().size())];

    Eigen::MatrixXd moved(nf, d);
    for (int i = 0; i < nf; ++i) {
      const Eigen::VectorXd neg = retain.row(static_cast<Eigen::Index>(order[i])).transpose();
      moved.row(i) = hooked_step(forget.row(i).transpose(), positives.row(i).transpose(), neg,
                                 tau, eta, opt)
                         .transpose();
    }

    // Kernel widths and projection directions are fixed before the step so
    // the two measurements are comparable.
    const auto bw = median_heuristic_bandwidths(forget, retain).bandwidths;
    const std::uint64_t sw_seed = Rng::derive(Rng::derive(opt.seed, "theory/separation/sw"),
                                              static_cast<std::uint64_t>(t));
    const double mmd0 = mk_mmd(forget, retain, bw);
    const double mmd1 = mk_mmd(moved, retain, bw);
    const double sw0 = sliced_w2(forget, retain, kSlicedProjections, sw_seed);
    const double sw1 = sliced_w2(moved, retain, kSlicedProjections, sw_seed);
    const auto e0 = entanglement(forget, retain);
    const auto e1 = entanglement(moved, retain);
    const bool e_ok = !e0 || !e1 || *e1 <= *e0;
    const bool ok = mmd1 >= mmd0 && sw1 >= sw0 && e_ok;
    record(s, ok,
           "trial=" + std::to_string(t) + " d=" + std::to_string(d) + " |F|=" +
               std::to_string(nf) + " |R|=" + std::to_string(nr) + " tau=" + fmt(tau) +
               " eta=" + fmt(eta) + " mk_mmd " + fmt(mmd0) + " -> " + fmt(mmd1) +
               " sliced_w2 " + fmt(sw0) + " -> " + fmt(sw1) + " entanglement " +
               (e0 ? fmt(*e0) : "degenerate") + " -> " + (e1 ? fmt(*e1) : "degenerate"));
  }
  return s;
}

std::vector<TrialSummary> verify_theory(const TheoryOptions& opt) {
  return {verify_gradient_identity(opt), verify_one_step_decrease(opt),
          verify_paired_similarity(opt), verify_separation_increase(opt)};
}

}  // namespace clreg
