#pragma once

// Contrastive regularizer losses on unit-sphere embeddings.
//
// Rows of every matrix are embeddings. The DPO-style loss pairs anchor i with
// positive i and negative i; InfoNCE scores each anchor against its own
// positive and every negative in the pool.

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "clreg/geometry.hpp"

namespace clreg {

enum class ClVariant { kDpo, kInfoNce };

std::string_view to_string(ClVariant v);
ClVariant parse_cl_variant(std::string_view s);

struct ContrastiveBatch {
  Eigen::MatrixXd anchors;    // B x d
  Eigen::MatrixXd positives;  // B x d, row-aligned with anchors
  Eigen::MatrixXd negatives;  // M x d

  Eigen::Index size() const { return anchors.rows(); }

  /// Throws ValidationError on empty/misaligned batches, non-unit rows, or
  /// M != B for the DPO variant.
  void validate(ClVariant variant) const;
};

struct ClConfig {
  double tau = 0.5;
  ClVariant variant = ClVariant::kDpo;
  bool symmetric = false;
  double alpha = 1.0;
  double gamma = 1.0;
  double lambda = 1.0;
  int layer_from_end = 1;

  void validate() const;
};

/// log(sigmoid(x)), finite for any finite x.
double log_sigmoid(double x);
double sigmoid(double x);

double dpo_cl_loss(const ContrastiveBatch& batch, double tau);
double infonce_cl_loss(const ContrastiveBatch& batch, double tau);
double cl_loss(const ContrastiveBatch& batch, double tau, ClVariant variant);

/// Mean of the variant loss on the forward batch (forget anchors, retain
/// negatives) and the swapped batch (retain anchors, forget negatives).
double symmetrized_loss(const ContrastiveBatch& forward, const ContrastiveBatch& swapped,
                        double tau, ClVariant variant);

/// Loss value with its gradient with respect to every row of the batch.
struct ClLossGrad {
  double loss = 0.0;
  Eigen::MatrixXd d_anchors;
  Eigen::MatrixXd d_positives;
  Eigen::MatrixXd d_negatives;
};

ClLossGrad dpo_cl_loss_grad(const ContrastiveBatch& batch, double tau);
ClLossGrad infonce_cl_loss_grad(const ContrastiveBatch& batch, double tau);
ClLossGrad cl_loss_grad(const ContrastiveBatch& batch, double tau, ClVariant variant);

/// Closed form of d/da of -2*tau*log(sigmoid(m/tau)), m = a.p - a.n:
///   -2 * sigmoid(-m/tau) * (p - n).
Eigen::VectorXd anchor_gradient(const UnitEmbedding& a, const UnitEmbedding& p,
                                const UnitEmbedding& n, double tau);

/// One descent step a' = a + 2*eta*sigmoid(-m/tau)*(p - n). Without
/// renormalization, a'.n < a.n whenever p != n.
Eigen::VectorXd anchor_step(const UnitEmbedding& a, const UnitEmbedding& p,
                            const UnitEmbedding& n, double tau, double eta, bool renormalize);

/// Mean of a.n over all |F|*|R| pairs.
double cross_similarity(const Eigen::Ref<const Eigen::MatrixXd>& forget,
                        const Eigen::Ref<const Eigen::MatrixXd>& retain);

/// alpha*retain + gamma*forget + lambda*cl.
double combined_loss(double retain_loss, double forget_loss, double cl_loss,
                     const ClConfig& cfg);

}  // namespace clreg
