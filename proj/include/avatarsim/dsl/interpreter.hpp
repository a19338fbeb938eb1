#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "avatarsim/agent.hpp"
#include "avatarsim/dsl/compiler.hpp"

namespace avatarsim::dsl {

/// One sampled realization of an avatar.
struct AgentInstance {
  std::int64_t member = 0;  // index within the family
  std::vector<Value> params;
  std::vector<Value> state;
  double wake_rate = kDefaultWakeRate;
  double news_sens = kDefaultNewsSens;
};

/// Samples n instances from the program's parameter distributions and
/// evaluates state initializers. Throws DistributionError when a sampled
/// wake_rate is not strictly positive and finite.
std::vector<AgentInstance> instantiate_family(const Program& program, std::int64_t n, std::uint64_t family_seed);

/// Builds one instance from explicit parameter values.
AgentInstance make_instance(const Program& program, std::vector<Value> params, std::int64_t member = 0);

/// An agent driven by a compiled avatar script.
class ScriptAgent final : public Agent {
 public:
  ScriptAgent(std::shared_ptr<const Program> program, AgentInstance instance);

  HandlerResult on_wake(const MarketView& view, Rng& rng) override;
  HandlerResult on_news(double value, const MarketView& view, Rng& rng) override;
  HandlerResult on_message(double value, const MarketView& view, Rng& rng) override;
  HandlerResult on_fill(Qty signed_qty, const MarketView& view, Rng& rng) override;
  bool handles_fills() const override;

  double wake_rate() const override { return instance_.wake_rate; }
  double news_sens() const override { return instance_.news_sens; }

  const AgentInstance& instance() const noexcept { return instance_; }

 private:
  HandlerResult dispatch(EventKind event, Value argument, const MarketView& view, Rng& rng);

  std::shared_ptr<const Program> program_;
  AgentInstance instance_;
};

}  // namespace avatarsim::dsl
