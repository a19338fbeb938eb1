#pragma once

// Recorded agent inputs for replaying one family outside the kernel. A
// fixture holds the market history of a run and, for every handler call of
// the family's members, the event and the view the agent saw. Replaying it
// into a native archetype and into its script twin compares their action
// streams on identical inputs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avatarsim/agent.hpp"
#include "avatarsim/dsl/compiler.hpp"
#include "avatarsim/kernel.hpp"

namespace avatarsim::testing {

struct FixtureStep {
  AgentEvent event = AgentEvent::Wake;
  double value = 0.0;
  Qty fill_qty = 0;
  MarketView view;  // history pointer is rebound to the fixture's history
  std::vector<Action> actions;  // what the recorded agent returned
  bool failed = false;
};

struct MemberFixture {
  std::int64_t member = 0;
  AgentId agent = 0;
  std::vector<Value> params;
  std::uint64_t decision_seed = 0;
  std::vector<FixtureStep> steps;
};

struct FamilyFixture {
  std::string family;
  std::optional<strategies::Archetype> archetype;
  std::vector<MemberFixture> members;
};

struct Fixture {
  MarketHistory history;
  std::vector<FamilyFixture> families;  // one per scenario family

  std::size_t step_count() const;
};

/// Runs the scenario once and records every family.
Fixture record_fixture(const ScenarioConfig& config);

/// Replays a member's steps into a fresh agent and its own decision stream.
std::vector<HandlerResult> replay(const Fixture& fixture, const MemberFixture& member, Agent& agent);

struct TwinReport {
  std::size_t members = 0;
  std::size_t steps = 0;
  std::size_t actions = 0;
  std::optional<std::string> mismatch;  // first difference, if any

  bool ok() const { return !mismatch.has_value(); }
};

/// Replays an archetype family into the native agent and into agents built
/// from the twin program with the same parameter values, and compares both
/// against the recording and each other.
TwinReport compare_twin(const Fixture& fixture, const FamilyFixture& family, const dsl::Program& twin);

}  // namespace avatarsim::testing
