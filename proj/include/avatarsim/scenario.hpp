#pragma once

// Scenario configuration and its JSON form.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "avatarsim/params.hpp"
#include "avatarsim/strategies.hpp"
#include "avatarsim/types.hpp"

namespace avatarsim {

/// Invalid scenario. `path` locates the offending field, e.g.
/// "families[2].params.qmax".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct ParamOverride {
  std::string name;
  Distribution dist;
  friend bool operator==(const ParamOverride&, const ParamOverride&) = default;
};

struct FamilyConfig {
  std::string name;
  /// Exactly one of archetype / avatar_source is set after loading.
  std::optional<strategies::Archetype> archetype;
  std::optional<std::string> avatar_source;
  std::vector<ParamOverride> params;  // replaces declared distributions by name
  std::int64_t n_agents = 1;
  Money initial_cash = 0;
  Qty initial_shares = 0;

  friend bool operator==(const FamilyConfig&, const FamilyConfig&) = default;
};

struct RunLength {
  enum class Kind : std::uint8_t { Transactions, SimTime };
  Kind kind = Kind::Transactions;
  std::int64_t value = 1000;  // trades, or microticks

  friend bool operator==(const RunLength&, const RunLength&) = default;
};

struct ScenarioConfig {
  std::vector<FamilyConfig> families;
  Price initial_reference_price = 1000;
  double news_rate = 0.0;   // arrivals per time unit
  double news_sigma = 0.0;
  SimTime message_latency = 0;
  RunLength run_length;
  std::uint64_t master_seed = 0;
  std::int64_t snapshot_interval = 1000;  // transactions between holdings snapshots
  /// Cancel an agent's resting orders when it next wakes.
  bool orders_good_till_wake = true;
  /// Hard stop for transaction-length runs whose market stalls.
  SimTime max_sim_time = 100'000 * kMicroticksPerUnit;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws ConfigError. Relative avatar_path entries resolve against base_dir
/// and are inlined as avatar_source. A top-level "run_info" key is ignored.
ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Reads and parses a scenario file; a missing or unreadable file is a ConfigError.
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical JSON with every field explicit and avatar sources inlined.
nlohmann::json scenario_to_json(const ScenarioConfig& config);

/// Checks the cross-field invariants (n_agents >= 1, unique names, positive
/// run length, ...). scenario_from_json calls this.
void validate(const ScenarioConfig& config);

/// Per-family parameter declarations: the archetype schema or the script's
/// params, with the family's overrides applied. Throws ConfigError for
/// overrides naming unknown parameters or invalid supports. Script families
/// must already parse; AvatarError propagates otherwise.
std::vector<ParamDecl> resolve_params(const FamilyConfig& family, std::size_t family_index,
                                      const std::vector<ParamDecl>& declared);

}  // namespace avatarsim
