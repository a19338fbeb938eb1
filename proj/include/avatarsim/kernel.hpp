#pragma once

// Deterministic discrete-event simulation of one market run.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avatarsim/agent.hpp"
#include "avatarsim/dsl/ast.hpp"
#include "avatarsim/dsl/compiler.hpp"
#include "avatarsim/run_result.hpp"
#include "avatarsim/scenario.hpp"

namespace avatarsim {

/// An avatar script of one family failed to parse or type-check.
class FamilyAvatarError : public std::runtime_error {
 public:
  FamilyAvatarError(std::size_t family_index, std::string family, const dsl::AvatarError& error)
      : std::runtime_error("family '" + family + "': " + error.what()),
        family_index_(family_index),
        family_(std::move(family)),
        error_(error) {}

  std::size_t family_index() const noexcept { return family_index_; }
  const std::string& family() const noexcept { return family_; }
  const dsl::AvatarError& error() const noexcept { return error_; }

 private:
  std::size_t family_index_;
  std::string family_;
  dsl::AvatarError error_;
};

/// A family resolved to something that can produce agents.
struct PreparedFamily {
  FamilyInfo info;
  std::vector<ParamDecl> params;  // declared order, overrides applied
  std::optional<strategies::Archetype> archetype;
  std::shared_ptr<const dsl::Program> program;  // set for script families
  std::uint64_t seed = 0;
};

/// Parses, checks and resolves every family. Throws FamilyAvatarError or ConfigError.
std::vector<PreparedFamily> prepare_families(const ScenarioConfig& config);

/// Samples each member's parameters and builds its agent.
std::vector<std::unique_ptr<Agent>> instantiate(const PreparedFamily& family, std::size_t family_index);

std::uint64_t family_seed(std::uint64_t master_seed, std::string_view family_name);
std::uint64_t news_seed(std::uint64_t master_seed);

/// Wake interval: exponential(rate) time units in microticks, at least 1.
SimTime wake_delay(double rate, Rng& clock);

enum class AgentEvent : std::uint8_t { Wake, News, Message, Fill };

std::string_view to_string(AgentEvent e) noexcept;

/// One handler invocation, reported to RunOptions::observer after the
/// handler returns and before its actions reach the market.
struct DispatchRecord {
  AgentId agent;
  AgentEvent event;
  double value;  // news or message value
  Qty fill_qty;  // signed, Fill only
  const MarketView& view;
  const HandlerResult& result;
};

struct RunOptions {
  std::function<void(const DispatchRecord&)> observer;
  std::size_t max_diagnostics = 100;
};

/// Runs a scenario to completion. Same config and seed give an identical
/// RunResult. Throws ConfigError, FamilyAvatarError, or EngineError when an
/// invariant breaks.
RunResult run(const ScenarioConfig& config, const RunOptions& options = {});

}  // namespace avatarsim
