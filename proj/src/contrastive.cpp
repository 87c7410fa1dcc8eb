#include "clreg/contrastive.hpp"

#include <cmath>

#include "clreg/error.hpp"

namespace clreg {
namespace {

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ValidationError("temperature tau must be positive and finite");
  }
}

void check_unit_rows(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitTolerance) {
      throw ValidationError(std::string(what) + " row " + std::to_string(i) +
                            " is not unit-norm");
    }
  }
}

void check_same_dim(const UnitEmbedding& a, const UnitEmbedding& p, const UnitEmbedding& n) {
  if (a.dim() != p.dim() || a.dim() != n.dim()) {
    throw ValidationError("anchor/positive/negative dimensions differ");
  }
}

}  // namespace

std::string_view to_string(ClVariant v) {
  return v == ClVariant::kDpo ? "dpo" : "infonce";
}

ClVariant parse_cl_variant(std::string_view s) {
  if (s == "dpo") return ClVariant::kDpo;
  if (s == "infonce") return ClVariant::kInfoNce;
  throw ValidationError("unknown contrastive variant '" + std::string(s) + "'");
}

void ContrastiveBatch::validate(ClVariant variant) const {
  if (anchors.rows() < 1) {
    throw ValidationError("contrastive batch has no anchors");
  }
  if (positives.rows() != anchors.rows()) {
    throw ValidationError("positives must be row-aligned with anchors");
  }
  if (negatives.rows() < 1) {
    throw ValidationError("contrastive batch has no negatives");
  }
  if (positives.cols() != anchors.cols() || negatives.cols() != anchors.cols()) {
    throw ValidationError("contrastive batch dimension mismatch");
  }
  if (variant == ClVariant::kDpo && negatives.rows() != anchors.rows()) {
    throw ValidationError("dpo loss pairs negatives with anchors: need M == B, got M=" +
                          std::to_string(negatives.rows()) +
                          " B=" + std::to_string(anchors.rows()));
  }
  check_unit_rows(anchors, "anchor");
  check_unit_rows(positives, "positive");
  check_unit_rows(negatives, "negative");
}

void ClConfig::validate() const {
  check_tau(tau);
  for (double w : {alpha, gamma, lambda}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("loss weights must be finite and non-negative");
    }
  }
  if (layer_from_end < 1) {
    throw ValidationError("layer_from_end must be >= 1");
  }
}

double log_sigmoid(double x) {
  return -(std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x))));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ClLossGrad dpo_cl_loss_grad(const ContrastiveBatch& batch, double tau) {
  check_tau(tau);
  batch.validate(ClVariant::kDpo);
  const Eigen::Index b = batch.size();
  const double bd = static_cast<double>(b);

  ClLossGrad out;
  out.d_anchors = Eigen::MatrixXd::Zero(b, batch.anchors.cols());
  out.d_positives = Eigen::MatrixXd::Zero(b, batch.anchors.cols());
  out.d_negatives = Eigen::MatrixXd::Zero(b, batch.anchors.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto a = batch.anchors.row(i);
    const auto p = batch.positives.row(i);
    const auto n = batch.negatives.row(i);
    const double margin = a.dot(p) - a.dot(n);
    sum += log_sigmoid(margin / tau);
    // d loss / d margin = -(2/B) * sigmoid(-margin/tau)
    const double dm = -2.0 * sigmoid(-margin / tau) / bd;
    out.d_anchors.row(i) = dm * (p - n);
    out.d_positives.row(i) = dm * a;
    out.d_negatives.row(i) = -dm * a;
  }
  out.loss = -2.0 * tau * sum / bd;
  return out;
}

ClLossGrad infonce_cl_loss_grad(const ContrastiveBatch& batch, double tau) {
  check_tau(tau);
  batch.validate(ClVariant::kInfoNce);
  const Eigen::Index b = batch.size();
  const Eigen::Index m = batch.negatives.rows();
  const double bd = static_cast<double>(b);

  ClLossGrad out;
  out.d_anchors = Eigen::MatrixXd::Zero(b, batch.anchors.cols());
  out.d_positives = Eigen::MatrixXd::Zero(b, batch.anchors.cols());
  out.d_negatives = Eigen::MatrixXd::Zero(m, batch.anchors.cols());
  Eigen::VectorXd logits(m + 1);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto a = batch.anchors.row(i);
    logits[0] = a.dot(batch.positives.row(i)) / tau;
    logits.tail(m) = batch.negatives * a.transpose() / tau;
    const double top = logits.maxCoeff();
    const Eigen::VectorXd shifted = (logits.array() - top).exp().matrix();
    const double z = shifted.sum();
    sum += std::log(z) + top - logits[0];

    // d loss_i / d logit_k = softmax_k - [k == 0], then / B for the mean.
    Eigen::VectorXd g = shifted / z;
    g[0] -= 1.0;
    g /= bd * tau;
    out.d_anchors.row(i) = g[0] * batch.positives.row(i) + g.tail(m).transpose() * batch.negatives;
    out.d_positives.row(i) = g[0] * a;
    out.d_negatives += g.tail(m) * a;
  }
  out.loss = sum / bd;
  return out;
}

ClLossGrad cl_loss_grad(const ContrastiveBatch& batch, double tau, ClVariant variant) {
  return variant == ClVariant::kDpo ? dpo_cl_loss_grad(batch, tau)
                                    : infonce_cl_loss_grad(batch, tau);
}

double dpo_cl_loss(const ContrastiveBatch& batch, double tau) {
  return dpo_cl_loss_grad(batch, tau).loss;
}

double infonce_cl_loss(const ContrastiveBatch& batch, double tau) {
  return infonce_cl_loss_grad(batch, tau).loss;
}

double cl_loss(const ContrastiveBatch& batch, double tau, ClVariant variant) {
  return cl_loss_grad(batch, tau, variant).loss;
}

double symmetrized_loss(const ContrastiveBatch& forward, const ContrastiveBatch& swapped,
                        double tau, ClVariant variant) {
  return 0.5 * (cl_loss(forward, tau, variant) + cl_loss(swapped, tau, variant));
}

Eigen::VectorXd anchor_gradient(const UnitEmbedding& a, const UnitEmbedding& p,
                                const UnitEmbedding& n, double tau) {
  check_tau(tau);
  check_same_dim(a, p, n);
  const double margin = a.coords().dot(p.coords()) - a.coords().dot(n.coords());
  return -2.0 * sigmoid(-margin / tau) * (p.coords() - n.coords());
}

Eigen::VectorXd anchor_step(const UnitEmbedding& a, const UnitEmbedding& p,
                            const UnitEmbedding& n, double tau, double eta, bool renormalize) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ValidationError("step size eta must be positive and finite");
  }
  Eigen::VectorXd next = a.coords() - eta * anchor_gradient(a, p, n, tau);
  if (renormalize) {
    return normalize(next).coords();
  }
  return next;
}

double cross_similarity(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                        const Eigen::Ref<const Eigen::MatrixXd>& retain) {
  if (forget.rows() < 1 || retain.rows() < 1) {
    throw ValidationError("cross_similarity needs non-empty sets");
  }
  if (forget.cols() != retain.cols()) {
    throw ValidationError("cross_similarity: dimension mismatch");
  }
  // mean_{i,j} f_i . r_j == (sum_i f_i) . (sum_j r_j) / (|F| |R|)
  const Eigen::RowVectorXd fs = forget.colwise().sum();
  const Eigen::RowVectorXd rs = retain.colwise().sum();
  return fs.dot(rs) / (static_cast<double>(forget.rows()) * static_cast<double>(retain.rows()));
}

double combined_loss(double retain_loss, double forget_loss, double cl_loss,
                     const ClConfig& cfg) {
  return cfg.alpha * retain_loss + cfg.gamma * forget_loss + cfg.lambda * cl_loss;
}

}  // namespace clreg
