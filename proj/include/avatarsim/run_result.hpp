#pragma once

// The record of one simulation run and its on-disk archive.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "avatarsim/market.hpp"
#include "avatarsim/scenario.hpp"

namespace avatarsim {

struct FamilyInfo {
  FamilyId id = 0;
  std::string name;
  std::string kind;  // archetype name, or "avatar"
  AgentId first_agent = 0;
  std::int64_t n_agents = 0;
  Money initial_cash = 0;
  Qty initial_shares = 0;

  friend bool operator==(const FamilyInfo&, const FamilyInfo&) = default;
};

/// Agent ids are dense and assigned family by family in scenario order.
std::vector<FamilyInfo> family_layout(const ScenarioConfig& config);

/// Holdings of every agent after the first `trade_count` trades of the tape.
struct Snapshot {
  std::int64_t index = 0;
  std::int64_t trade_count = 0;
  SimTime time = 0;
  std::vector<Money> cash;  // by agent id
  std::vector<Qty> shares;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct RunStats {
  std::int64_t events = 0;
  std::int64_t wakes = 0;
  std::int64_t news_events = 0;
  std::int64_t messages_delivered = 0;
  std::int64_t messages_dropped = 0;  // unknown recipient
  std::int64_t fills_delivered = 0;
  std::int64_t orders_submitted = 0;
  std::int64_t orders_rejected = 0;
  std::int64_t actions_dropped = 0;  // qty < 1
  std::int64_t handler_errors = 0;
  SimTime end_time = 0;
  std::string end_reason;  // "transactions", "sim_time" or "max_sim_time"

  friend bool operator==(const RunStats&, const RunStats&) = default;
};

struct RunResult {
  ScenarioConfig config;  // includes the seed actually used
  std::vector<FamilyInfo> families;
  std::vector<Trade> tape;
  std::vector<Snapshot> snapshots;
  std::vector<Account> final_accounts;
  RunStats stats;
  std::vector<std::string> diagnostics;  // first handler errors, "time agent: message"

  std::int64_t agent_count() const;
  FamilyId family_of(AgentId agent) const;
  std::vector<Price> prices() const;
  std::vector<Qty> volumes() const;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kTapeHeader = "trade_id,time,price,qty,buy_agent,sell_agent,aggressor";
inline constexpr std::string_view kSnapshotsHeader = "snapshot,trade_count,time,agent_id,family,cash,shares";

std::string tape_csv(const RunResult& result);
std::string snapshots_csv(const RunResult& result);

/// config.json: the resolved scenario plus a "run_info" object with stats.
std::string config_json(const RunResult& result);

/// Everything that determines equality of two runs, as one string.
std::string serialize(const RunResult& result);

/// Replays the tape from the initial endowments and compares every snapshot.
/// Throws ArchiveError naming the first mismatch.
void verify_snapshots(const RunResult& result);

/// Writes tape.csv, snapshots.csv, config.json and report.json into dir.
void write_archive(const std::filesystem::path& dir, const RunResult& result, const std::string& report_json);

/// Reads tape, snapshots and config back. final_accounts are taken from the
/// last snapshot; diagnostics are not archived. Throws ArchiveError when a
/// file is missing or malformed, and ConfigError for a bad config.json.
RunResult read_archive(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace avatarsim
