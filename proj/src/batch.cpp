#include "avatarsim/batch.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "avatarsim/dsl/parser.hpp"

namespace avatarsim {

RunArtifacts run_with_report(const ScenarioConfig& config, const RunOptions& options) {
  RunArtifacts a;
  a.result = run(config, options);
  a.report = analytics::build_report(a.result);
  a.report_json = analytics::report_to_json(a.report);
  return a;
}

void write_artifacts(const std::filesystem::path& dir, const RunArtifacts& a, bool with_csv) {
  write_archive(dir, a.result, a.report_json);
  if (with_csv) {
    for (const auto& [name, text] : analytics::report_csvs(a.report)) write_text_file(dir / name, text);
  }
}

RunArtifacts regenerate_report(const std::filesystem::path& dir) {
  RunArtifacts a;
  a.result = read_archive(dir);
  verify_snapshots(a.result);
  a.report = analytics::build_report(a.result);
  a.report_json = analytics::report_to_json(a.report);
  if (std::filesystem::exists(dir / "report.json") && read_text_file(dir / "report.json") != a.report_json) {
    throw ArchiveError("regenerated report differs from the archived report.json");
  }
  return a;
}

CheckResult check_avatar(std::string_view source) {
  CheckResult r;
  try {
    const auto spec = dsl::parse(source);
    r.canonical = dsl::print(spec);
    r.ok = true;
  } catch (const dsl::AvatarError& e) {
    r.diagnostic = e.what();
  }
  return r;
}

std::string leaderboard_text(const std::vector<analytics::LeaderboardEntry>& board) {
  std::ostringstream os;
  os << "rank  family                average_wealth\n";
  for (const auto& e : board) {
    char line[160];
    std::snprintf(line, sizeof line, "%4d  %-20s  %.2f\n", e.rank, e.name.c_str(), e.average_wealth);
    os << line;
  }
  return os.str();
}

std::string leaderboard_csv(const std::vector<analytics::LeaderboardEntry>& board) {
  std::string s = "rank,family,name,total_wealth,n_agents,average_wealth\n";
  for (const auto& e : board) {
    s += std::to_string(e.rank) + "," + std::to_string(e.family) + "," + e.name + "," +
         std::to_string(e.total_wealth) + "," + std::to_string(e.n_agents) + "," +
         nlohmann::json(e.average_wealth).dump() + "\n";
  }
  return s;
}

std::string leaderboard_json(const std::vector<analytics::LeaderboardEntry>& board) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : board) {
    j.push_back({{"rank", e.rank},
                 {"family", e.family},
                 {"name", e.name},
                 {"total_wealth", e.total_wealth},
                 {"n_agents", e.n_agents},
                 {"average_wealth", e.average_wealth}});
  }
  return j.dump(2) + "\n";
}

}  // namespace avatarsim
