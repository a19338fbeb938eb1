#pragma once

// Library entry points behind the command-line tool.

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "avatarsim/analytics.hpp"
#include "avatarsim/kernel.hpp"

namespace avatarsim {

struct RunArtifacts {
  RunResult result;
  analytics::StylizedFactsReport report;
  std::string report_json;
};

RunArtifacts run_with_report(const ScenarioConfig& config, const RunOptions& options = {});

/// Writes the four archive files, plus the panel CSVs when with_csv is set.
void write_artifacts(const std::filesystem::path& dir, const RunArtifacts& artifacts, bool with_csv);

/// Reads an archive, checks snapshot consistency against the tape, and
/// rebuilds the report. Throws ArchiveError on any inconsistency, including
/// a rebuilt report that differs from the archived report.json.
RunArtifacts regenerate_report(const std::filesystem::path& dir);

struct CheckResult {
  bool ok = false;
  std::string canonical;   // set when ok
  std::string diagnostic;  // "line:col: kind error: message" when not ok
};

CheckResult check_avatar(std::string_view source);

std::string leaderboard_text(const std::vector<analytics::LeaderboardEntry>& board);
std::string leaderboard_csv(const std::vector<analytics::LeaderboardEntry>& board);
std::string leaderboard_json(const std::vector<analytics::LeaderboardEntry>& board);

}  // namespace avatarsim
