#include "clreg/cli/commands.hpp"

#include <fstream>
#include <functional>
#include <ostream>

#include "clreg/cli/config_io.hpp"
#include "clreg/cli/report_io.hpp"
#include "clreg/error.hpp"
#include "clreg/scoring.hpp"
#include "clreg/separation.hpp"
#include "clreg/simulator.hpp"
#include "clreg/theory.hpp"

namespace clreg::cli {
namespace {

using nlohmann::json;

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "numeric error (" << e.term() << "): " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

std::ofstream open_text(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void write_timeline(const std::filesystem::path& path, const RunReport& r) {
  std::ofstream out = open_text(path);
  out << "step,entanglement,mk_mmd,sliced_w2,cross_similarity\n";
  for (const auto& e : r.timeline) {
    out << e.step << ',' << csv_number(e.report.entanglement) << ','
        << csv_number(e.report.mk_mmd) << ',' << csv_number(e.report.sliced_w2) << ','
        << csv_number(e.report.cross_similarity) << '\n';
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

Eigen::MatrixXd padded(const Eigen::MatrixXd& coords) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(coords.rows(), 2);
  out.leftCols(coords.cols()) = coords;
  return out;
}

void write_pca(const std::filesystem::path& path, const Eigen::MatrixXd& before,
               const Eigen::MatrixXd& after) {
  std::ofstream out = open_text(path);
  out << "index,before_pc1,before_pc2,after_pc1,after_pc2\n";
  for (Eigen::Index i = 0; i < before.rows(); ++i) {
    out << i << ',' << csv_number(before(i, 0)) << ',' << csv_number(before(i, 1)) << ','
        << csv_number(after(i, 0)) << ',' << csv_number(after(i, 1)) << '\n';
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

void write_outputs(const std::filesystem::path& dir, const RunReport& r) {
  write_json(dir / "run_report.json", to_json(r));
  write_timeline(dir / "separation_timeline.csv", r);

  // One basis for all four point sets so before/after and forget/retain
  // coordinates are directly comparable.
  const Eigen::Index n_r = r.initial_retain.rows();
  const Eigen::Index n_f = r.initial_forget.rows();
  Eigen::MatrixXd all(2 * (n_r + n_f), r.initial_retain.cols());
  all << r.initial_retain, r.final_retain, r.initial_forget, r.final_forget;
  const int k = static_cast<int>(std::min<Eigen::Index>(2, all.cols()));
  const PcaModel pca = pca_fit(all, k);
  write_pca(dir / "pca_retain.csv", padded(pca.project(r.initial_retain)),
            padded(pca.project(r.final_retain)));
  write_pca(dir / "pca_forget.csv", padded(pca.project(r.initial_forget)),
            padded(pca.project(r.final_forget)));
}

}  // namespace

std::string version_string() {
  return std::string("clreg ") + kVersion + " (embedding format " +
         std::to_string(kEmbeddingFormatVersion) + ", report format " + kReportFormatVersion +
         ")";
}

int cmd_metrics(const MetricsOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.projections < 1) throw ValidationError("--projections must be >= 1");
    const Eigen::MatrixXd forget = read_embeddings(opt.forget, opt.format);
    const Eigen::MatrixXd retain = read_embeddings(opt.retain, opt.format);
    if (forget.cols() != retain.cols()) {
      throw ValidationError("forget embeddings have dimension " + std::to_string(forget.cols()) +
                            " but retain embeddings have dimension " +
                            std::to_string(retain.cols()));
    }
    SeparationConfig cfg;
    cfg.n_projections = opt.projections;
    cfg.seed = opt.seed;
    const SeparationReport report = separation_report(forget, retain, cfg);
    if (!report.any_metric()) {
      for (const auto& n : report.notes) err << "note: " << n << '\n';
      err << "no separation metric could be computed\n";
      return kExitNumeric;
    }
    json j = to_json(report);
    j["format_version"] = kReportFormatVersion;
    j["n_forget"] = forget.rows();
    j["n_retain"] = retain.rows();
    j["dim"] = forget.cols();
    write_json(opt.output, j);
    out << "wrote " << opt.output.string() << '\n';
    return kExitOk;
  });
}

int cmd_score(const ScoreOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScoreInputs in = load_score_inputs(opt.metrics);
    const ScoreReport report = score(in);
    json j = to_json(report);
    j["format_version"] = kReportFormatVersion;
    write_json(opt.output, j);
    out << "wrote " << opt.output.string() << '\n';
    return kExitOk;
  });
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfigFile cfg = opt.config ? load_run_config(*opt.config) : RunConfigFile{};
    cfg.validate();
    std::filesystem::create_directories(opt.output_dir);
    try {
      const RunReport report = train(cfg.train, cfg.task);
      write_outputs(opt.output_dir, report);
    } catch (const TrainingDiverged& e) {
      json diag = {
          {"error", e.what()},
          {"term", e.term()},
          {"completed_steps", e.partial().completed_steps},
          {"partial_report", to_json(e.partial())},
      };
      write_json(opt.output_dir / "diagnostics.json", diag);
      err << "training diverged (" << e.term() << "): " << e.what() << "; see "
          << (opt.output_dir / "diagnostics.json").string() << '\n';
      return kExitNumeric;
    }
    out << "wrote " << opt.output_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_verify_theory(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    TheoryOptions t;
    t.trials = opt.trials;
    t.separation_trials = opt.separation_trials.value_or(std::max(1, opt.trials / 5));
    t.seed = opt.seed;
    t.gradient_scale = opt.gradient_scale;
    t.validate();
    bool all_ok = true;
    for (const TrialSummary& s : verify_theory(t)) {
      out << s.name << ": " << s.passed << "/" << s.trials << " passed\n";
      if (!s.ok()) {
        all_ok = false;
        out << "  counterexample: " << s.counterexample.value_or("?") << '\n';
      }
    }
    return all_ok ? kExitOk : kExitNumeric;
  });
}

}  // namespace clreg::cli
