#include <algorithm>
#include <string>

#include "clreg/error.hpp"
#include "clreg/simulator.hpp"

namespace clreg {
namespace {

void check_clusters(const std::vector<Cluster>& cs, int dim, const char* who) {
  if (cs.empty()) {
    throw ValidationError(std::string(who) + " needs at least one cluster");
  }
  for (const auto& c : cs) {
    if (c.mean.size() != dim) {
      throw ValidationError(std::string(who) + " cluster mean has dimension " +
                            std::to_string(c.mean.size()) + ", expected " +
                            std::to_string(dim));
    }
    if (!c.mean.allFinite() || c.label < 0) {
      throw ValidationError(std::string(who) + " cluster needs a finite mean and label >= 0");
    }
  }
}

LabeledSet draw_population(int n, const std::vector<Cluster>& clusters, double stddev,
                           int dim, Rng& rng) {
  LabeledSet out;
  out.inputs.resize(n, dim);
  out.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Cluster& c = clusters[static_cast<std::size_t>(i) % clusters.size()];
    for (int j = 0; j < dim; ++j) {
      out.inputs(i, j) = c.mean[j] + stddev * rng.normal();
    }
    out.labels[static_cast<std::size_t>(i)] = c.label;
  }
  return out;
}

}  // namespace

void SyntheticTask::validate() const {
  if (input_dim < 1) throw ValidationError("input_dim must be >= 1");
  if (n_forget < 2) throw ValidationError("n_forget must be >= 2");
  if (n_retain <= n_forget) throw ValidationError("n_retain must exceed n_forget");
  if (!(retain_stddev > 0.0) || !(forget_stddev > 0.0)) {
    throw ValidationError("cluster stddevs must be positive");
  }
  if (max_redraws < 1) throw ValidationError("max_redraws must be >= 1");
  check_clusters(retain_clusters, input_dim, "retain");
  check_clusters(forget_clusters, input_dim, "forget");
}

int SyntheticTask::n_classes() const {
  int top = 0;
  for (const auto& c : retain_clusters) top = std::max(top, c.label);
  for (const auto& c : forget_clusters) top = std::max(top, c.label);
  return top + 1;
}

SyntheticTask default_task() {
  SyntheticTask t;
  t.input_dim = 8;
  t.n_retain = 96;
  t.n_forget = 24;
  auto axis = [&](int k, double scale) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(t.input_dim);
    v[k] = scale;
    return v;
  };
  t.retain_clusters = {{axis(0, 2.0), 0}, {axis(1, 2.0), 1}, {axis(2, 2.0), 2}};
  // Class-0 points that also carry a direction no retain point uses.
  t.forget_clusters = {{axis(0, 0.5) + axis(3, 4.0), 0}};
  t.retain_stddev = 0.5;
  t.forget_stddev = 0.8;
  t.min_entanglement = 1.0;
  return t;
}

SyntheticData generate_synthetic(const SyntheticTask& task, const ToyEncoder* probe) {
  task.validate();
  if (probe != nullptr && probe->input_dim() != task.input_dim) {
    throw ValidationError("probe encoder input dimension does not match the task");
  }
  for (int attempt = 0; attempt < task.max_redraws; ++attempt) {
    Rng rng(Rng::derive(Rng::derive(task.seed, "task/data"), static_cast<std::uint64_t>(attempt)));
    SyntheticData data;
    data.retain = draw_population(task.n_retain, task.retain_clusters, task.retain_stddev,
                                  task.input_dim, rng);
    data.forget = draw_population(task.n_forget, task.forget_clusters, task.forget_stddev,
                                  task.input_dim, rng);
    data.attempts = attempt + 1;
    if (probe == nullptr) {
      return data;
    }
    const auto e = entanglement(final_embeddings(*probe, data.forget.inputs),
                                final_embeddings(*probe, data.retain.inputs));
    // Coincident means count as maximally entangled.
    if (!e || *e > task.min_entanglement) {
      data.probe_entanglement = e;
      return data;
    }
  }
  throw ConfigError("synthetic data never reached entanglement above " +
                    std::to_string(task.min_entanglement) + " in " +
                    std::to_string(task.max_redraws) + " draws");
}

}  // namespace clreg
