#include <cmath>
#include <string>

#include "clreg/error.hpp"
#include "clreg/simulator.hpp"

namespace clreg {
namespace {

// One embedding fed to the contrastive loss: a (possibly dropped-out) copy of
// a clean hidden-state row, pooled over its single token and normalized.
struct View {
  Eigen::Index row = 0;
  Eigen::RowVectorXd multiplier;
  double norm = 0.0;
  Eigen::RowVectorXd unit;
};

View make_view(const Eigen::MatrixXd& hidden, Eigen::Index row,
               const std::optional<DropoutPolicy>& policy, Rng& rng) {
  View v;
  v.row = row;
  const HiddenStates hs = HiddenStates::single(hidden.row(row));
  Eigen::VectorXd pooled;
  if (policy) {
    const double p = sample_dropout_rate(*policy, rng);
    DropoutResult dr = apply_dropout_traced(hs, p, rng);
    pooled = pool(dr.states);
    v.multiplier = dr.multiplier.row(0);
  } else {
    pooled = pool(hs);
    v.multiplier = Eigen::RowVectorXd::Ones(hidden.cols());
  }
  v.norm = pooled.norm();
  try {
    v.unit = normalize(pooled).coords().transpose();
  } catch (const DegenerateInputError& e) {
    throw NumericError("cl", std::string("contrastive embedding collapsed: ") + e.what());
  }
  return v;
}

Eigen::MatrixXd stack(const std::vector<View>& views, Eigen::Index dim) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(views.size()), dim);
  for (std::size_t i = 0; i < views.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = views[i].unit;
  return m;
}

// Chain d(loss)/d(unit) back through normalization and dropout into the
// clean hidden-state rows.
void backprop_views(const std::vector<View>& views, const Eigen::MatrixXd& d_units, double scale,
                    Eigen::MatrixXd& d_hidden) {
  for (std::size_t i = 0; i < views.size(); ++i) {
    const View& v = views[i];
    const Eigen::RowVectorXd du = scale * d_units.row(static_cast<Eigen::Index>(i));
    const Eigen::RowVectorXd dv = (du - v.unit * v.unit.dot(du)) / v.norm;
    d_hidden.row(v.row) += dv.cwiseProduct(v.multiplier);
  }
}

struct ClDirection {
  std::vector<View> anchors, positives, negatives;
  ContrastiveBatch batch;
};

// Anchors and positives are two independent dropout views of the same rows;
// negatives are clean views. The dpo variant pairs anchor i with
// negatives[pairing[i mod |pairing|]].
ClDirection build_direction(const Eigen::MatrixXd& hidden, Eigen::Index anchor_begin,
                            Eigen::Index anchor_count, Eigen::Index neg_begin,
                            Eigen::Index neg_count, const TrainConfig& cfg, Rng& rng) {
  ClDirection d;
  for (Eigen::Index i = 0; i < anchor_count; ++i) {
    d.anchors.push_back(make_view(hidden, anchor_begin + i, cfg.dropout, rng));
    d.positives.push_back(make_view(hidden, anchor_begin + i, cfg.dropout, rng));
  }
  if (cfg.cl.variant == ClVariant::kDpo) {
    const auto pairing = rng.permutation(static_cast<std::size_t>(neg_count));
    for (Eigen::Index i = 0; i < anchor_count; ++i) {
      const auto j = static_cast<Eigen::Index>(pairing[static_cast<std::size_t>(i) % pairing.size()]);
      d.negatives.push_back(make_view(hidden, neg_begin + j, std::nullopt, rng));
    }
  } else {
    for (Eigen::Index j = 0; j < neg_count; ++j) {
      d.negatives.push_back(make_view(hidden, neg_begin + j, std::nullopt, rng));
    }
  }
  d.batch.anchors = stack(d.anchors, hidden.cols());
  d.batch.positives = stack(d.positives, hidden.cols());
  d.batch.negatives = stack(d.negatives, hidden.cols());
  return d;
}

// Mean softmax cross-entropy of `rows` of logits and its gradient w.r.t.
// those logits.
double cross_entropy(const Eigen::MatrixXd& logits, Eigen::Index begin, Eigen::Index count,
                     const std::vector<int>& labels, Eigen::MatrixXd& d_logits, double weight) {
  double sum = 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::RowVectorXd z = logits.row(begin + i);
    const double top = z.maxCoeff();
    const Eigen::RowVectorXd e = (z.array() - top).exp().matrix();
    const double s = e.sum();
    const int y = labels[static_cast<std::size_t>(i)];
    sum += std::log(s) + top - z[y];
    Eigen::RowVectorXd g = e / s;
    g[y] -= 1.0;
    d_logits.row(begin + i) += weight * inv * g;
  }
  return sum * inv;
}

void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) {
    throw NumericError(term, std::string("non-finite ") + term + " loss");
  }
}

Eigen::MatrixXd stacked_inputs(const SyntheticData& data) {
  Eigen::MatrixXd x(data.retain.inputs.rows() + data.forget.inputs.rows(),
                    data.retain.inputs.cols());
  x << data.retain.inputs, data.forget.inputs;
  return x;
}

LossAndGrads evaluate(const ToyEncoder& enc, const SyntheticData& data, const TrainConfig& cfg,
                      std::uint64_t draw_seed, bool with_cl) {
  const Eigen::Index nr = data.retain.inputs.rows();
  const Eigen::Index nf = data.forget.inputs.rows();
  if (nr < 1 || nf < 1) {
    throw ValidationError("training batch needs retain and forget samples");
  }
  if (static_cast<Eigen::Index>(data.retain.labels.size()) != nr ||
      static_cast<Eigen::Index>(data.forget.labels.size()) != nf) {
    throw ValidationError("label count does not match sample count");
  }
  for (int y : data.retain.labels)
    if (y < 0 || y >= enc.n_classes()) throw ValidationError("retain label out of range");
  for (int y : data.forget.labels)
    if (y < 0 || y >= enc.n_classes()) throw ValidationError("forget label out of range");

  const Eigen::MatrixXd x = stacked_inputs(data);
  const ForwardPass fp = forward(enc, x);
  const int depth = enc.depth();
  const int c = cfg.cl_layer();
  if (c < 0 || c >= depth) {
    throw ValidationError("layer_from_end exceeds encoder depth");
  }

  LossAndGrads out;
  Eigen::MatrixXd d_logits = Eigen::MatrixXd::Zero(fp.logits.rows(), fp.logits.cols());
  if (cfg.base_retain == RetainObjective::kCrossEntropy) {
    out.loss.retain =
        cross_entropy(fp.logits, 0, nr, data.retain.labels, d_logits, cfg.cl.alpha);
  }
  if (cfg.base_forget == ForgetObjective::kNegatedCrossEntropy) {
    out.loss.forget =
        -cross_entropy(fp.logits, nr, nf, data.forget.labels, d_logits, -cfg.cl.gamma);
  }
  require_finite(out.loss.retain, "retain");
  require_finite(out.loss.forget, "forget");

  const Eigen::MatrixXd& hc = fp.hidden[static_cast<std::size_t>(c)];
  out.cl_hidden_grad = Eigen::MatrixXd::Zero(hc.rows(), hc.cols());
  Rng rng(Rng::derive(draw_seed, "train/cl"));
  if (with_cl) {
    const ClDirection fwd = build_direction(hc, nr, nf, 0, nr, cfg, rng);
    ClLossGrad g = cl_loss_grad(fwd.batch, cfg.cl.tau, cfg.cl.variant);
    double cl = g.loss;
    const double share = cfg.cl.symmetric ? 0.5 : 1.0;
    const double w = cfg.cl.lambda * share;
    const bool all = cfg.flow == GradientFlow::kAll;
    backprop_views(fwd.anchors, g.d_anchors, w, out.cl_hidden_grad);
    if (all) {
      backprop_views(fwd.positives, g.d_positives, w, out.cl_hidden_grad);
      backprop_views(fwd.negatives, g.d_negatives, w, out.cl_hidden_grad);
    }
    if (cfg.cl.symmetric) {
      const ClDirection swp = build_direction(hc, 0, nr, nr, nf, cfg, rng);
      ClLossGrad gs = cl_loss_grad(swp.batch, cfg.cl.tau, cfg.cl.variant);
      cl = 0.5 * (cl + gs.loss);
      backprop_views(swp.anchors, gs.d_anchors, w, out.cl_hidden_grad);
      if (all) {
        backprop_views(swp.positives, gs.d_positives, w, out.cl_hidden_grad);
        backprop_views(swp.negatives, gs.d_negatives, w, out.cl_hidden_grad);
      }
    }
    out.loss.cl = cl;
  }
  require_finite(out.loss.cl, "cl");
  out.loss.total = combined_loss(out.loss.retain, out.loss.forget, out.loss.cl, cfg.cl);
  require_finite(out.loss.total, "total");

  // Reverse pass.
  out.grads.layers.resize(enc.layers.size());
  const Eigen::MatrixXd& top = fp.hidden.back();
  out.grads.head.weight = d_logits.transpose() * top;
  out.grads.head.bias = d_logits.colwise().sum().transpose();
  Eigen::MatrixXd d_h = d_logits * enc.head.weight;
  for (int l = depth - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    if (l == c) d_h += out.cl_hidden_grad;
    const Eigen::MatrixXd& h = fp.hidden[ul];
    const Eigen::MatrixXd d_pre = d_h.cwiseProduct((1.0 - h.array().square()).matrix());
    const Eigen::MatrixXd& below = l == 0 ? x : fp.hidden[ul - 1];
    out.grads.layers[ul].weight = d_pre.transpose() * below;
    out.grads.layers[ul].bias = d_pre.colwise().sum().transpose();
    if (l > 0) d_h = d_pre * enc.layers[ul].weight;
  }
  return out;
}

}  // namespace

std::string_view to_string(RetainObjective v) {
  return v == RetainObjective::kCrossEntropy ? "cross_entropy" : "none";
}
std::string_view to_string(ForgetObjective v) {
  return v == ForgetObjective::kNegatedCrossEntropy ? "negated_cross_entropy" : "none";
}
std::string_view to_string(GradientFlow v) {
  return v == GradientFlow::kAll ? "all" : "anchors_only";
}
RetainObjective parse_retain_objective(std::string_view s) {
  if (s == "cross_entropy") return RetainObjective::kCrossEntropy;
  if (s == "none") return RetainObjective::kNone;
  throw ValidationError("unknown retain objective '" + std::string(s) + "'");
}
ForgetObjective parse_forget_objective(std::string_view s) {
  if (s == "negated_cross_entropy") return ForgetObjective::kNegatedCrossEntropy;
  if (s == "none") return ForgetObjective::kNone;
  throw ValidationError("unknown forget objective '" + std::string(s) + "'");
}
GradientFlow parse_gradient_flow(std::string_view s) {
  if (s == "all") return GradientFlow::kAll;
  if (s == "anchors_only") return GradientFlow::kAnchorsOnly;
  throw ValidationError("unknown gradient flow '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  cl.validate();
  dropout.validate();
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be positive and finite");
  if (steps < 0) throw ValidationError("steps must be >= 0");
  if (finetune_steps < 0) throw ValidationError("finetune_steps must be >= 0");
  if (record_every < 1) throw ValidationError("record_every must be >= 1");
  if (n_projections < 1) throw ValidationError("n_projections must be >= 1");
  if (hidden_dims.empty()) throw ValidationError("encoder needs at least one hidden layer");
  for (int d : hidden_dims)
    if (d < 1) throw ValidationError("hidden dimensions must be >= 1");
  if (cl.layer_from_end > static_cast<int>(hidden_dims.size())) {
    throw ValidationError("layer_from_end " + std::to_string(cl.layer_from_end) +
                          " exceeds encoder depth " + std::to_string(hidden_dims.size()));
  }
}

int TrainConfig::cl_layer() const {
  return static_cast<int>(hidden_dims.size()) - cl.layer_from_end;
}

LossAndGrads loss_and_grads(const ToyEncoder& enc, const SyntheticData& data,
                            const TrainConfig& cfg, std::uint64_t draw_seed) {
  cfg.cl.validate();
  cfg.dropout.validate();
  if (static_cast<std::size_t>(enc.depth()) != cfg.hidden_dims.size()) {
    throw ValidationError("encoder depth does not match config hidden_dims");
  }
  return evaluate(enc, data, cfg, draw_seed, true);
}

double loss_value(const ToyEncoder& enc, const SyntheticData& data, const TrainConfig& cfg,
                  std::uint64_t draw_seed) {
  return loss_and_grads(enc, data, cfg, draw_seed).loss.total;
}

Eigen::MatrixXd final_embeddings(const ToyEncoder& enc,
                                 const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  Eigen::MatrixXd h = forward(enc, inputs).hidden.back();
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    h.row(i) = normalize(h.row(i).transpose()).coords().transpose();
  }
  return h;
}

Displacement displacement_stats(const Eigen::Ref<const Eigen::MatrixXd>& retain_before,
                                const Eigen::Ref<const Eigen::MatrixXd>& retain_after,
                                const Eigen::Ref<const Eigen::MatrixXd>& forget_before,
                                const Eigen::Ref<const Eigen::MatrixXd>& forget_after) {
  if (retain_before.rows() != retain_after.rows() || retain_before.cols() != retain_after.cols() ||
      forget_before.rows() != forget_after.rows() || forget_before.cols() != forget_after.cols()) {
    throw ValidationError("displacement needs aligned before/after sets");
  }
  if (retain_before.rows() < 1 || forget_before.rows() < 1) {
    throw ValidationError("displacement needs non-empty sets");
  }
  Displacement d;
  d.retain_shift = (retain_after - retain_before).rowwise().norm().mean();
  d.forget_shift = (forget_after - forget_before).rowwise().norm().mean();
  if (d.retain_shift > 0.0) {
    d.ratio = d.forget_shift / d.retain_shift;
  } else if (d.forget_shift > 0.0) {
    d.ratio_infinite = true;
  } else {
    d.ratio_undefined = true;
  }
  return d;
}

RunReport train(const TrainConfig& cfg, const SyntheticTask& task) {
  cfg.validate();
  task.validate();

  auto report = std::make_shared<RunReport>();
  report->config = cfg;
  report->task = task;

  Rng init_rng = Rng::substream(cfg.seed, "encoder/init");
  ToyEncoder enc = ToyEncoder::random(task.input_dim, cfg.hidden_dims, task.n_classes(), init_rng);
  const SyntheticData data = generate_synthetic(task, &enc);
  report->data_attempts = data.attempts;

  // Finetune on everything: plain cross-entropy on R u F.
  if (cfg.finetune_steps > 0) {
    TrainConfig ft = cfg;
    ft.cl.alpha = 1.0;
    ft.cl.gamma = 0.0;
    ft.cl.lambda = 0.0;
    ft.base_forget = ForgetObjective::kNone;
    SyntheticData all;
    all.retain.inputs.resize(data.retain.inputs.rows() + data.forget.inputs.rows(), task.input_dim);
    all.retain.inputs << data.retain.inputs, data.forget.inputs;
    all.retain.labels = data.retain.labels;
    all.retain.labels.insert(all.retain.labels.end(), data.forget.labels.begin(),
                             data.forget.labels.end());
    all.forget = data.forget;
    for (int t = 0; t < cfg.finetune_steps; ++t) {
      const LossAndGrads lg = evaluate(enc, all, ft, 0, false);
      enc.assign(enc.flatten() - cfg.eta * lg.grads.flatten());
    }
  }

  const SeparationConfig sep{cfg.n_projections, Rng::derive(cfg.seed, "separation"),
                             default_bandwidth_scales(), std::nullopt};
  report->initial_retain = final_embeddings(enc, data.retain.inputs);
  report->initial_forget = final_embeddings(enc, data.forget.inputs);
  report->timeline.push_back(
      {0, separation_report(report->initial_forget, report->initial_retain, sep)});

  const std::uint64_t draw_root = Rng::derive(cfg.seed, "train/steps");
  for (int t = 0; t < cfg.steps; ++t) {
    LossAndGrads lg;
    try {
      lg = loss_and_grads(enc, data, cfg, Rng::derive(draw_root, static_cast<std::uint64_t>(t)));
    } catch (const NumericError& e) {
      throw TrainingDiverged(e.term(), "step " + std::to_string(t) + ": " + e.what(), report);
    }
    report->losses.push_back({t, lg.loss});
    if (std::abs(lg.loss.total) > kDivergenceLimit) {
      throw TrainingDiverged("total",
                             "step " + std::to_string(t) + ": objective magnitude " +
                                 std::to_string(lg.loss.total) + " exceeds limit",
                             report);
    }
    enc.assign(enc.flatten() - cfg.eta * lg.grads.flatten());
    report->completed_steps = t + 1;
    if ((t + 1) % cfg.record_every == 0) {
      report->timeline.push_back({t + 1, separation_report(final_embeddings(enc, data.forget.inputs),
                                                           final_embeddings(enc, data.retain.inputs),
                                                           sep)});
    }
  }

  report->final_retain = final_embeddings(enc, data.retain.inputs);
  report->final_forget = final_embeddings(enc, data.forget.inputs);
  report->displacement = displacement_stats(report->initial_retain, report->final_retain,
                                             report->initial_forget, report->final_forget);
  return *report;
}

std::vector<AblationEntry> layer_ablation(const TrainConfig& cfg, const SyntheticTask& task,
                                          std::span<const int> layers_from_end) {
  for (int k : layers_from_end) {
    if (k < 1 || k > static_cast<int>(cfg.hidden_dims.size())) {
      throw ValidationError("ablation layer " + std::to_string(k) + " outside 1.." +
                            std::to_string(cfg.hidden_dims.size()));
    }
  }
  std::vector<AblationEntry> out;
  for (int k : layers_from_end) {
    TrainConfig c = cfg;
    c.cl.layer_from_end = k;
    out.push_back({k, train(c, task)});
  }
  return out;
}

}  // namespace clreg
