#pragma once

// Desk-scale unlearning experiment: a small tanh encoder trained on synthetic
// forget/retain clusters with a base unlearning objective plus the
// contrastive regularizer at a selectable layer.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clreg/contrastive.hpp"
#include "clreg/error.hpp"
#include "clreg/geometry.hpp"
#include "clreg/rng.hpp"
#include "clreg/separation.hpp"

namespace clreg {

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// tanh layers followed by a linear classification head.
struct ToyEncoder {
  std::vector<Layer> layers;
  Layer head;

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int depth() const { return static_cast<int>(layers.size()); }
  int n_classes() const { return static_cast<int>(head.weight.rows()); }

  /// Throws ValidationError unless L >= 1, dimensions chain and all
  /// parameters are finite.
  void validate() const;

  /// Weights ~ N(0, 1/fan_in), zero biases.
  static ToyEncoder random(int input_dim, std::span<const int> hidden_dims, int n_classes,
                           Rng& rng);
  static ToyEncoder zeros(int input_dim, std::span<const int> hidden_dims, int n_classes);

  std::size_t parameter_count() const;
  /// Flat parameter view in a fixed order: per layer weight (column-major)
  /// then bias, then the head.
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::Ref<const Eigen::VectorXd>& flat);
};

struct ForwardPass {
  std::vector<Eigen::MatrixXd> hidden;  // hidden[l]: N x d_l output of layer l
  Eigen::MatrixXd logits;               // N x classes
};

/// Rows of `inputs` are samples.
ForwardPass forward(const ToyEncoder& enc, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

struct Cluster {
  Eigen::VectorXd mean;
  int label = 0;
};

struct SyntheticTask {
  int input_dim = 8;
  int n_retain = 96;
  int n_forget = 24;
  std::vector<Cluster> retain_clusters;
  std::vector<Cluster> forget_clusters;
  double retain_stddev = 0.6;
  double forget_stddev = 0.6;
  std::uint64_t seed = 0;
  // Re-draw the data until the probe encoder's final-layer entanglement
  // exceeds this value.
  double min_entanglement = 0.0;
  int max_redraws = 16;

  void validate() const;
  int n_classes() const;
};

/// The task used when a run config leaves it unspecified.
SyntheticTask default_task();

struct LabeledSet {
  Eigen::MatrixXd inputs;  // N x input_dim
  std::vector<int> labels;
};

struct SyntheticData {
  LabeledSet retain;
  LabeledSet forget;
  int attempts = 1;
  std::optional<double> probe_entanglement;
};

/// Point i of a population goes to cluster i mod K. With a probe encoder the
/// draw is repeated (fresh sub-stream per attempt) until the final-layer
/// entanglement exceeds task.min_entanglement; ConfigError after
/// task.max_redraws attempts.
SyntheticData generate_synthetic(const SyntheticTask& task, const ToyEncoder* probe = nullptr);

enum class RetainObjective { kCrossEntropy, kNone };
enum class ForgetObjective { kNegatedCrossEntropy, kNone };
enum class GradientFlow { kAll, kAnchorsOnly };

std::string_view to_string(RetainObjective v);
std::string_view to_string(ForgetObjective v);
std::string_view to_string(GradientFlow v);
RetainObjective parse_retain_objective(std::string_view s);
ForgetObjective parse_forget_objective(std::string_view s);
GradientFlow parse_gradient_flow(std::string_view s);

struct TrainConfig {
  ClConfig cl;
  double eta = 0.05;
  int steps = 40;
  // Plain cross-entropy epochs on R u F before unlearning starts; the
  // resulting encoder plays the finetuned model.
  int finetune_steps = 300;
  RetainObjective base_retain = RetainObjective::kCrossEntropy;
  ForgetObjective base_forget = ForgetObjective::kNegatedCrossEntropy;
  GradientFlow flow = GradientFlow::kAll;
  DropoutPolicy dropout;
  std::vector<int> hidden_dims{32, 32, 16};
  std::uint64_t seed = 0;
  int record_every = 5;
  int n_projections = 256;

  void validate() const;
  /// 0-based index of the hidden layer the regularizer reads.
  int cl_layer() const;
};

struct LossBreakdown {
  double retain = 0.0;
  double forget = 0.0;
  double cl = 0.0;
  double total = 0.0;
};

struct LossAndGrads {
  LossBreakdown loss;
  ToyEncoder grads;
  // d(lambda * L_CL) / d(clean hidden states at the regularized layer),
  // rows ordered [retain; forget].
  Eigen::MatrixXd cl_hidden_grad;
};

/// Full objective alpha*CE(R) + gamma*(-CE(F)) + lambda*L_CL and its exact
/// gradient. Dropout rates, masks and negative pairings are drawn from a
/// stream seeded by `draw_seed`, so equal seeds give the same objective.
/// Throws NumericError naming the term if any loss is non-finite.
LossAndGrads loss_and_grads(const ToyEncoder& enc, const SyntheticData& data,
                            const TrainConfig& cfg, std::uint64_t draw_seed);

double loss_value(const ToyEncoder& enc, const SyntheticData& data, const TrainConfig& cfg,
                  std::uint64_t draw_seed);

struct Displacement {
  double retain_shift = 0.0;
  double forget_shift = 0.0;
  // forget/retain; empty when retain_shift is zero.
  std::optional<double> ratio;
  bool ratio_infinite = false;   // retain did not move, forget did
  bool ratio_undefined = false;  // neither moved
};

Displacement displacement_stats(const Eigen::Ref<const Eigen::MatrixXd>& retain_before,
                                const Eigen::Ref<const Eigen::MatrixXd>& retain_after,
                                const Eigen::Ref<const Eigen::MatrixXd>& forget_before,
                                const Eigen::Ref<const Eigen::MatrixXd>& forget_after);

struct StepLoss {
  int step = 0;
  LossBreakdown loss;
};

struct TimelineEntry {
  int step = 0;
  SeparationReport report;
};

struct RunReport {
  TrainConfig config;
  SyntheticTask task;
  int data_attempts = 1;
  std::vector<StepLoss> losses;
  std::vector<TimelineEntry> timeline;
  Displacement displacement;
  // Unit final-layer embeddings after finetuning and after unlearning.
  Eigen::MatrixXd initial_retain, initial_forget;
  Eigen::MatrixXd final_retain, final_forget;
  int completed_steps = 0;
};

/// Raised when the objective leaves the finite range or exceeds 1e6 in
/// magnitude; carries the report up to the failing step.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(std::string term, const std::string& what,
                   std::shared_ptr<const RunReport> partial)
      : NumericError(std::move(term), what), partial_(std::move(partial)) {}

  const RunReport& partial() const { return *partial_; }

 private:
  std::shared_ptr<const RunReport> partial_;
};

inline constexpr double kDivergenceLimit = 1e6;

/// L2-normalized final-layer hidden states of each row.
Eigen::MatrixXd final_embeddings(const ToyEncoder& enc,
                                 const Eigen::Ref<const Eigen::MatrixXd>& inputs);

RunReport train(const TrainConfig& cfg, const SyntheticTask& task);

struct AblationEntry {
  int layer_from_end = 1;
  RunReport report;
};

/// Identical runs differing only in cfg.cl.layer_from_end.
std::vector<AblationEntry> layer_ablation(const TrainConfig& cfg, const SyntheticTask& task,
                                          std::span<const int> layers_from_end);

struct PcaModel {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;  // d x k, columns in descending variance
  Eigen::VectorXd variances;   // k
  bool rank_deficient = false;

  Eigen::MatrixXd project(const Eigen::Ref<const Eigen::MatrixXd>& points) const;
};

/// Top-k covariance eigenvectors; each component's largest-magnitude loading
/// is positive. Components beyond the covariance rank are zero and flagged.
PcaModel pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& points, int k = 2);

Eigen::MatrixXd pca_project(const Eigen::Ref<const Eigen::MatrixXd>& points, int k = 2);

}  // namespace clreg
