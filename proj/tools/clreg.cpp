#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "clreg/cli/commands.hpp"

namespace cli = clreg::cli;

int main(int argc, char** argv) {
  CLI::App app{"Contrastive separation metrics, unlearning scores and a toy unlearning simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::version_string());

  cli::MetricsOptions metrics;
  std::string format = "csv";
  auto* m = app.add_subcommand("metrics", "Separation metrics between two embedding files");
  m->add_option("--forget", metrics.forget, "Forget-set embeddings")->required();
  m->add_option("--retain", metrics.retain, "Retain-set embeddings")->required();
  m->add_option("--format", format, "Embedding file format")
      ->check(CLI::IsMember({"csv", "bin"}))
      ->capture_default_str();
  m->add_option("--projections", metrics.projections, "Sliced W2 projections")
      ->capture_default_str();
  m->add_option("--seed", metrics.seed, "Projection seed")->capture_default_str();
  m->add_option("-o,--output", metrics.output, "Report JSON path")->required();

  cli::ScoreOptions score;
  auto* s = app.add_subcommand("score", "Forget/utility aggregation from metric values");
  s->add_option("--metrics", score.metrics, "Metrics JSON")->required();
  s->add_option("-o,--output", score.output, "Report JSON path")->required();

  cli::SimulateOptions simulate;
  std::string config;
  auto* sim = app.add_subcommand("simulate", "Run the toy unlearning simulator");
  sim->add_option("--config", config, "Run configuration JSON (defaults when omitted)");
  sim->add_option("-o,--output", simulate.output_dir, "Output directory")->required();

  cli::VerifyOptions verify;
  auto* v = app.add_subcommand("verify-theory", "Seeded property checks of the contrastive step");
  v->add_option("--trials", verify.trials, "Trials per suite")->capture_default_str();
  v->add_option("--seed", verify.seed, "Base seed")->capture_default_str();
  v->add_option("--separation-trials", verify.separation_trials,
                "Cluster configurations for the separation suite (default trials/5)");
  v->add_option("--gradient-scale", verify.gradient_scale,
                "Multiply the analytic gradient (negative control)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitInput;
  }

  try {
    if (m->parsed()) {
      metrics.format = cli::parse_embedding_format(format);
      return cli::cmd_metrics(metrics, std::cout, std::cerr);
    }
    if (s->parsed()) return cli::cmd_score(score, std::cout, std::cerr);
    if (sim->parsed()) {
      if (!config.empty()) simulate.config = config;
      return cli::cmd_simulate(simulate, std::cout, std::cerr);
    }
    return cli::cmd_verify_theory(verify, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitInput;
  }
}
