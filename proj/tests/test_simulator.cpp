#include <cmath>

#include <gtest/gtest.h>

#include "clreg/error.hpp"
#include "clreg/simulator.hpp"
#include "oracles.hpp"

using namespace clreg;

namespace {

SyntheticTask small_task(std::uint64_t seed) {
  SyntheticTask t;
  t.input_dim = 4;
  t.n_retain = 12;
  t.n_forget = 6;
  t.retain_clusters = {{Eigen::Vector4d(2, 0, 0, 0), 0}, {Eigen::Vector4d(0, 2, 0, 0), 1}};
  t.forget_clusters = {{Eigen::Vector4d(1, 0, 2, 0), 0}};
  t.seed = seed;
  return t;
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.hidden_dims = {8, 6, 5};
  c.finetune_steps = 20;
  c.steps = 10;
  c.record_every = 5;
  c.n_projections = 16;
  return c;
}

double fd_relative_error(const TrainConfig& cfg, std::uint64_t seed) {
  const SyntheticData data = generate_synthetic(small_task(seed));
  Rng rng(seed);
  const ToyEncoder enc = ToyEncoder::random(4, cfg.hidden_dims, 2, rng);
  const Eigen::VectorXd g = loss_and_grads(enc, data, cfg, 77).grads.flatten();
  const Eigen::VectorXd fd = oracle::central_difference(
      [&](const Eigen::VectorXd& theta) {
        ToyEncoder e = enc;
        e.assign(theta);
        return loss_value(e, data, cfg, 77);
      },
      enc.flatten(), 1e-6);
  return (g - fd).norm() / std::max(fd.norm(), 1e-8);
}

}  // namespace

TEST(ToyEncoder, FlattenAssignRoundTrip) {
  Rng rng(1);
  const std::vector<int> hidden{5, 3};
  ToyEncoder enc = ToyEncoder::random(4, hidden, 3, rng);
  EXPECT_EQ(enc.parameter_count(), std::size_t(4 * 5 + 5 + 5 * 3 + 3 + 3 * 3 + 3));
  const Eigen::VectorXd flat = enc.flatten();
  ToyEncoder other = ToyEncoder::zeros(4, hidden, 3);
  other.assign(flat);
  EXPECT_EQ(other.flatten(), flat);
  EXPECT_EQ(other.layers[0].weight, enc.layers[0].weight);
  EXPECT_THROW(other.assign(Eigen::VectorXd::Zero(3)), ValidationError);
}

TEST(ToyEncoder, ValidateCatchesBrokenChains) {
  ToyEncoder enc = ToyEncoder::zeros(3, std::vector<int>{4}, 2);
  EXPECT_NO_THROW(enc.validate());
  enc.head.weight = Eigen::MatrixXd::Zero(2, 5);
  EXPECT_THROW(enc.validate(), ValidationError);
}

TEST(Forward, ShapesAndTanhRange) {
  Rng rng(2);
  const ToyEncoder enc = ToyEncoder::random(3, std::vector<int>{6, 4}, 2, rng);
  const ForwardPass fp = forward(enc, Eigen::MatrixXd::Random(5, 3) * 10.0);
  ASSERT_EQ(fp.hidden.size(), 2u);
  EXPECT_EQ(fp.hidden[1].rows(), 5);
  EXPECT_EQ(fp.hidden[1].cols(), 4);
  EXPECT_EQ(fp.logits.cols(), 2);
  EXPECT_LE(fp.hidden[0].cwiseAbs().maxCoeff(), 1.0);
  EXPECT_THROW(forward(enc, Eigen::MatrixXd::Zero(2, 4)), ValidationError);
}

TEST(Objective, GradientMatchesFiniteDifferences) {
  TrainConfig cfg = small_config(0);
  EXPECT_LT(fd_relative_error(cfg, 1), 1e-4);
  cfg.cl.variant = ClVariant::kInfoNce;
  cfg.cl.symmetric = true;
  EXPECT_LT(fd_relative_error(cfg, 2), 1e-4);
  cfg.cl.layer_from_end = 3;
  cfg.base_retain = RetainObjective::kNone;
  EXPECT_LT(fd_relative_error(cfg, 3), 1e-4);
}

TEST(Objective, SameDrawSeedSameValue) {
  const TrainConfig cfg = small_config(0);
  const SyntheticData data = generate_synthetic(small_task(0));
  Rng rng(4);
  const ToyEncoder enc = ToyEncoder::random(4, cfg.hidden_dims, 2, rng);
  EXPECT_EQ(loss_value(enc, data, cfg, 5), loss_value(enc, data, cfg, 5));
  EXPECT_NE(loss_value(enc, data, cfg, 5), loss_value(enc, data, cfg, 6));
}

TEST(Objective, AnchorsOnlyFlowDropsNegativeGradient) {
  TrainConfig cfg = small_config(0);
  cfg.cl.alpha = 0.0;
  cfg.cl.gamma = 0.0;
  const SyntheticData data = generate_synthetic(small_task(0));
  Rng rng(5);
  const ToyEncoder enc = ToyEncoder::random(4, cfg.hidden_dims, 2, rng);
  const LossAndGrads all = loss_and_grads(enc, data, cfg, 3);
  cfg.flow = GradientFlow::kAnchorsOnly;
  const LossAndGrads anchors = loss_and_grads(enc, data, cfg, 3);
  EXPECT_EQ(all.loss.total, anchors.loss.total);
  // Retain rows only ever act as negatives.
  EXPECT_GT(all.cl_hidden_grad.topRows(12).norm(), 0.0);
  EXPECT_EQ(anchors.cl_hidden_grad.topRows(12).norm(), 0.0);
}

TEST(Train, PlainCrossEntropyMatchesReferenceDescent) {
  TrainConfig cfg = small_config(3);
  cfg.cl.gamma = 0.0;
  cfg.cl.lambda = 0.0;
  cfg.base_forget = ForgetObjective::kNone;
  cfg.finetune_steps = 15;
  cfg.steps = 10;
  const SyntheticTask task = small_task(3);
  const RunReport report = train(cfg, task);

  Rng init = Rng::substream(cfg.seed, "encoder/init");
  const ToyEncoder enc = ToyEncoder::random(4, cfg.hidden_dims, 2, init);
  const SyntheticData data = generate_synthetic(task);
  oracle::CePhase finetune;
  finetune.inputs.resize(18, 4);
  finetune.inputs << data.retain.inputs, data.forget.inputs;
  finetune.labels = data.retain.labels;
  finetune.labels.insert(finetune.labels.end(), data.forget.labels.begin(), data.forget.labels.end());
  finetune.steps = cfg.finetune_steps;
  const oracle::CePhase unlearn{data.retain.inputs, data.retain.labels, cfg.steps};
  const auto ref = oracle::plain_ce_descent(enc, {finetune, unlearn}, cfg.eta);

  ASSERT_EQ(report.losses.size(), 10u);
  for (int t = 0; t < 10; ++t) {
    EXPECT_NEAR(report.losses[t].loss.retain, ref[std::size_t(cfg.finetune_steps + t)], 1e-10);
    EXPECT_EQ(report.losses[t].loss.total, report.losses[t].loss.retain);
  }
}

TEST(Train, RepeatedRunsAreIdentical) {
  const RunReport a = train(small_config(7), small_task(7));
  const RunReport b = train(small_config(7), small_task(7));
  ASSERT_EQ(a.losses.size(), b.losses.size());
  for (std::size_t i = 0; i < a.losses.size(); ++i) {
    EXPECT_EQ(a.losses[i].loss.total, b.losses[i].loss.total);
  }
  EXPECT_EQ(a.final_forget, b.final_forget);
  EXPECT_EQ(*a.timeline.back().report.sliced_w2, *b.timeline.back().report.sliced_w2);
}

TEST(Train, TimelineRecordsEveryInterval) {
  TrainConfig cfg = small_config(1);
  cfg.steps = 12;
  cfg.record_every = 4;
  const RunReport r = train(cfg, small_task(1));
  ASSERT_EQ(r.timeline.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.timeline[i].step, int(4 * i));
  EXPECT_EQ(r.completed_steps, 12);
  EXPECT_EQ(r.final_retain.rows(), 12);
  EXPECT_NEAR(r.final_forget.row(0).norm(), 1.0, 1e-12);
}

TEST(Train, DivergenceCarriesPartialReport) {
  TrainConfig cfg = small_config(2);
  cfg.finetune_steps = 0;
  cfg.eta = 50.0;
  cfg.cl.gamma = 100.0;
  cfg.steps = 200;
  try {
    train(cfg, small_task(2));
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_FALSE(e.term().empty());
    EXPECT_LT(e.partial().completed_steps, 200);
    EXPECT_GE(e.partial().losses.size(), std::size_t(e.partial().completed_steps));
  }
}

TEST(Train, LayerAblationVariesOnlyTheLayer) {
  const std::vector<int> layers{1, 2, 3};
  const auto runs = layer_ablation(small_config(4), small_task(4), layers);
  ASSERT_EQ(runs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(runs[i].layer_from_end, layers[i]);
    EXPECT_EQ(runs[i].report.config.cl.layer_from_end, layers[i]);
  }
  EXPECT_EQ(runs[0].report.initial_forget, runs[2].report.initial_forget);
  EXPECT_NE(runs[0].report.final_forget, runs[2].report.final_forget);
}

TEST(TrainConfig, RejectsBadValues) {
  TrainConfig cfg;
  cfg.cl.layer_from_end = 4;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.eta = 0.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.record_every = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  EXPECT_EQ(TrainConfig{}.cl_layer(), 2);
}

TEST(Synthetic, ClustersAssignedRoundRobin) {
  const SyntheticTask t = small_task(0);
  const SyntheticData d = generate_synthetic(t);
  ASSERT_EQ(d.retain.inputs.rows(), 12);
  ASSERT_EQ(d.forget.inputs.rows(), 6);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(d.retain.labels[std::size_t(i)], i % 2);
  EXPECT_EQ(d.attempts, 1);
  EXPECT_EQ(t.n_classes(), 2);
}

TEST(Synthetic, UnreachableEntanglementIsAConfigError) {
  SyntheticTask t = small_task(0);
  t.min_entanglement = 1e9;
  t.max_redraws = 2;
  Rng rng(0);
  const ToyEncoder probe = ToyEncoder::random(4, std::vector<int>{5}, 2, rng);
  EXPECT_THROW(generate_synthetic(t, &probe), ConfigError);
}

TEST(Synthetic, ValidationErrors) {
  SyntheticTask t = small_task(0);
  t.n_forget = 20;
  EXPECT_THROW(t.validate(), ValidationError);
  t = small_task(0);
  t.retain_clusters[0].mean = Eigen::Vector3d::Zero();
  EXPECT_THROW(t.validate(), ValidationError);
  t = small_task(0);
  t.forget_stddev = 0.0;
  EXPECT_THROW(t.validate(), ValidationError);
}

TEST(Displacement, RatioAndEdgeCases) {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd r1 = z, f1 = z;
  r1(0, 0) = 1.0;   // mean retain shift 0.5
  f1.col(1).setConstant(3.0);  // mean forget shift 3
  const Displacement d = displacement_stats(z, r1, z, f1);
  EXPECT_DOUBLE_EQ(d.retain_shift, 0.5);
  EXPECT_DOUBLE_EQ(d.forget_shift, 3.0);
  EXPECT_DOUBLE_EQ(*d.ratio, 6.0);
  EXPECT_TRUE(displacement_stats(z, z, z, f1).ratio_infinite);
  EXPECT_TRUE(displacement_stats(z, z, z, z).ratio_undefined);
  EXPECT_THROW(displacement_stats(z, Eigen::MatrixXd::Zero(3, 2), z, z), ValidationError);
}

TEST(Pca, RecoversDominantAxis) {
  Rng rng(1);
  Eigen::MatrixXd pts(200, 3);
  for (int i = 0; i < 200; ++i) pts.row(i) << 5.0 * rng.normal(), rng.normal(), 0.1 * rng.normal();
  const PcaModel m = pca_fit(pts, 2);
  EXPECT_GT(std::abs(m.components(0, 0)), 0.99);
  EXPECT_GT(m.components(0, 0), 0.0);
  EXPECT_GT(m.variances[0], m.variances[1]);
  EXPECT_NEAR(m.components.col(0).dot(m.components.col(1)), 0.0, 1e-12);
  EXPECT_FALSE(m.rank_deficient);
  const Eigen::MatrixXd proj = m.project(pts);
  EXPECT_NEAR(proj.col(0).mean(), 0.0, 1e-12);
}

TEST(Pca, FlagsRankDeficiency) {
  Eigen::MatrixXd pts(4, 3);
  pts << 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0;
  const PcaModel m = pca_fit(pts, 2);
  EXPECT_TRUE(m.rank_deficient);
  EXPECT_EQ(m.components.col(1).norm(), 0.0);
  EXPECT_THROW(pca_fit(pts, 4), ValidationError);
}
