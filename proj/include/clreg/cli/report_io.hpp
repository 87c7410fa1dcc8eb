#pragma once

// JSON views of the library's reports. Missing optional values and
// degenerate metrics are written as null.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "clreg/scoring.hpp"
#include "clreg/separation.hpp"
#include "clreg/simulator.hpp"
#include "clreg/theory.hpp"

namespace clreg::cli {

inline constexpr const char* kReportFormatVersion = "1";

nlohmann::json to_json(const SeparationReport& r);
nlohmann::json to_json(const ScoreReport& r);
nlohmann::json to_json(const RunReport& r);
nlohmann::json to_json(const TrialSummary& s);
nlohmann::json to_json(const Displacement& d);

/// Two-space indented dump followed by a newline. Throws ValidationError when
/// the file cannot be written.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Shortest round-trip decimal, or "nan" for an empty optional.
std::string csv_number(const std::optional<double>& v);

}  // namespace clreg::cli
