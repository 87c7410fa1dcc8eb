#pragma once

// Subcommands of the `clreg` tool. Each returns the process exit code:
// 0 success, 1 invalid input or I/O failure, 2 numeric failure.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "clreg/cli/embedding_io.hpp"

namespace clreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumeric = 2;

inline constexpr const char* kVersion = "0.1.0";

struct MetricsOptions {
  std::filesystem::path forget;
  std::filesystem::path retain;
  EmbeddingFormat format = EmbeddingFormat::kCsv;
  int projections = 256;
  std::uint64_t seed = 0;
  std::filesystem::path output;
};

struct ScoreOptions {
  std::filesystem::path metrics;
  std::filesystem::path output;
};

struct SimulateOptions {
  std::optional<std::filesystem::path> config;  // defaults when empty
  std::filesystem::path output_dir;
};

struct VerifyOptions {
  int trials = 1000;
  std::uint64_t seed = 0;
  // Separation-increase configurations; trials / 5 (at least 1) when unset.
  std::optional<int> separation_trials;
  double gradient_scale = 1.0;
};

/// Writes the separation report JSON. Exit 2 only when no metric at all
/// could be computed.
int cmd_metrics(const MetricsOptions& opt, std::ostream& out, std::ostream& err);

int cmd_score(const ScoreOptions& opt, std::ostream& out, std::ostream& err);

/// Writes run_report.json, separation_timeline.csv, pca_forget.csv and
/// pca_retain.csv into the output directory. On divergence writes
/// diagnostics.json instead and returns 2.
int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err);

/// Prints one line per suite; on failure prints the first counterexample of
/// each failing suite and returns 2.
int cmd_verify_theory(const VerifyOptions& opt, std::ostream& out, std::ostream& err);

std::string version_string();

}  // namespace clreg::cli
