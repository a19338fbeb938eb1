#pragma once

// Built-in strategy archetypes. Each has a DSL twin under corpus/archetypes/
// that declares the same parameters and produces the same actions.

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "avatarsim/agent.hpp"
#include "avatarsim/params.hpp"

namespace avatarsim::strategies {

enum class Archetype : std::uint8_t { Random, Momentum, Oscillatory, Bollinger, VolumeSeeker };

inline constexpr Archetype kAllArchetypes[] = {Archetype::Random, Archetype::Momentum, Archetype::Oscillatory,
                                               Archetype::Bollinger, Archetype::VolumeSeeker};

std::string_view name(Archetype a) noexcept;
std::optional<Archetype> archetype_from_name(std::string_view name) noexcept;

/// Parameter declarations with default distributions, in the order the DSL
/// twin declares them.
const std::vector<ParamDecl>& param_schema(Archetype a);

struct RandomParams {
  double p_buy = 0.5;
  double spread = 0.05;
  Qty qmax = 10;
  double news_sens = 0.0;
};

struct MomentumParams {
  std::int64_t lookback = 10;
  double threshold = 0.01;
  Qty qty = 5;
};

struct OscillatoryParams {
  SimTime period = 10 * kMicroticksPerUnit;
  Qty qty = 5;
};

struct BollingerParams {
  std::int64_t window = 20;
  double k = 2.0;
  Qty qty = 5;
};

struct VolumeSeekerParams {
  std::int64_t window = 20;
  double multiplier = 2.0;
  Qty qty = 5;
};

/// Running mean of volume(W) sampled at the agent's past wakes.
struct VolumeMemory {
  Qty sum = 0;
  std::int64_t count = 0;
};

/// One limit order per wake around the reference price scaled by
/// exp(news_sens * news), where news is the sum received since the last wake.
/// Draw order: side, price perturbation, quantity.
std::vector<Action> random_decide(const RandomParams& p, const MarketView& view, Rng& rng, double news);

/// Trades with the sign of the L-tick log return once it exceeds ±threshold.
std::vector<Action> momentum_decide(const MomentumParams& p, const MarketView& view);

/// Buys in the first half of each period, sells in the second.
std::vector<Action> oscillatory_decide(const OscillatoryParams& p, const MarketView& view);

/// Mean reversion outside sma(W) ± k·std(W).
std::vector<Action> bollinger_decide(const BollingerParams& p, const MarketView& view);

/// Follows the last return when volume(W) spikes above multiplier × its running mean.
std::vector<Action> volume_seeker_decide(const VolumeSeekerParams& p, const MarketView& view, VolumeMemory& memory);

/// Native agent for an archetype, with parameter values in param_schema order.
/// Throws std::invalid_argument when a value violates the archetype's bounds.
std::unique_ptr<Agent> make_agent(Archetype a, const std::vector<Value>& params);

}  // namespace avatarsim::strategies
