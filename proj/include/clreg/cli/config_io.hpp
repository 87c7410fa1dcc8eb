#pragma once

// JSON run configuration for `clreg simulate`. Every field is optional and
// falls back to the TrainConfig / default_task() defaults; unknown keys are
// rejected. A single top-level "seed" drives both data and training.
//
//   {
//     "seed": 0,
//     "cl":    {"tau", "variant", "symmetric", "alpha", "gamma", "lambda",
//               "layer_from_end"},
//     "train": {"eta", "steps", "finetune_steps", "base_retain", "base_forget",
//               "gradient_flow", "hidden_dims", "record_every", "n_projections",
//               "dropout": {"mu", "sigma", "lo", "hi"}},
//     "task":  {"input_dim", "n_retain", "n_forget", "retain_stddev",
//               "forget_stddev", "min_entanglement", "max_redraws",
//               "retain_clusters": [{"mean": [...], "label": 0}, ...],
//               "forget_clusters": [...]}
//   }

#include <filesystem>
#include <string>

#include <json.hpp>

#include "clreg/scoring.hpp"
#include "clreg/simulator.hpp"

namespace clreg::cli {

struct RunConfigFile {
  TrainConfig train;
  SyntheticTask task = default_task();

  void validate() const;
};

/// Throws ValidationError on schema violations.
RunConfigFile run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfigFile& cfg);

RunConfigFile load_run_config(const std::filesystem::path& path);

/// Input of `clreg score`:
///   {"metrics": [{"name", "m_ul", "m_ft", "m_rt", "log_scale"}, ...],
///    "utility_values": [...], "auc": {"ul", "rt"}}
/// utility_values and auc are optional.
ScoreInputs score_inputs_from_json(const nlohmann::json& j);
ScoreInputs load_score_inputs(const std::filesystem::path& path);

}  // namespace clreg::cli
