#include "clreg/cli/report_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "clreg/cli/config_io.hpp"
#include "clreg/error.hpp"

namespace clreg::cli {
namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

json matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json losses(const LossBreakdown& l) {
  return {{"retain", l.retain}, {"forget", l.forget}, {"cl", l.cl}, {"total", l.total}};
}

}  // namespace

json to_json(const SeparationReport& r) {
  return {
      {"entanglement", opt(r.entanglement)},
      {"mk_mmd", opt(r.mk_mmd)},
      {"sliced_w2", opt(r.sliced_w2)},
      {"cross_similarity", opt(r.cross_similarity)},
      {"bandwidths", r.bandwidths},
      {"bandwidth_fallback", r.bandwidth_fallback},
      {"n_projections", r.n_projections},
      {"seed", r.seed},
      {"notes", r.notes},
  };
}

json to_json(const ScoreReport& r) {
  json progs = json::object();
  for (const auto& [name, v] : r.progs) progs[name] = v;
  return {
      {"progs", progs},
      {"degenerate_progs", r.degenerate_progs},
      {"forget_score", r.forget_score},
      {"model_utility", opt(r.model_utility)},
      {"unlearning_score", opt(r.unlearning_score)},
      {"priv_leak", opt(r.priv_leak)},
  };
}

json to_json(const Displacement& d) {
  return {
      {"retain_shift", d.retain_shift},
      {"forget_shift", d.forget_shift},
      {"ratio", opt(d.ratio)},
      {"ratio_infinite", d.ratio_infinite},
      {"ratio_undefined", d.ratio_undefined},
  };
}

json to_json(const RunReport& r) {
  json loss_rows = json::array();
  for (const auto& s : r.losses) {
    json row = losses(s.loss);
    row["step"] = s.step;
    loss_rows.push_back(std::move(row));
  }
  json timeline = json::array();
  for (const auto& e : r.timeline) {
    timeline.push_back({{"step", e.step}, {"report", to_json(e.report)}});
  }
  return {
      {"format_version", kReportFormatVersion},
      {"config", to_json(RunConfigFile{r.config, r.task})},
      {"data_attempts", r.data_attempts},
      {"completed_steps", r.completed_steps},
      {"losses", loss_rows},
      {"timeline", timeline},
      {"displacement", to_json(r.displacement)},
      {"embeddings",
       {{"initial_retain", matrix(r.initial_retain)},
        {"initial_forget", matrix(r.initial_forget)},
        {"final_retain", matrix(r.final_retain)},
        {"final_forget", matrix(r.final_forget)}}},
  };
}

json to_json(const TrialSummary& s) {
  return {
      {"name", s.name},
      {"trials", s.trials},
      {"passed", s.passed},
      {"counterexample", s.counterexample ? json(*s.counterexample) : json(nullptr)},
  };
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw ValidationError("failed writing " + path.string());
}

std::string csv_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "nan";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), *v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace clreg::cli
