#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "avatarsim/market_view.hpp"
#include "avatarsim/rng.hpp"
#include "avatarsim/types.hpp"

namespace avatarsim {

struct SubmitLimit {
  Side side;
  Price price;
  Qty qty;
  friend bool operator==(const SubmitLimit&, const SubmitLimit&) = default;
};

struct SubmitMarket {
  Side side;
  Qty qty;
  friend bool operator==(const SubmitMarket&, const SubmitMarket&) = default;
};

struct CancelAll {
  friend bool operator==(const CancelAll&, const CancelAll&) = default;
};

struct SendMessage {
  std::int64_t to;
  double value;
  friend bool operator==(const SendMessage&, const SendMessage&) = default;
};

using Action = std::variant<SubmitLimit, SubmitMarket, CancelAll, SendMessage>;

std::string to_string(const Action& action);

/// Outcome of one handler invocation. On error the actions are discarded.
struct HandlerResult {
  std::vector<Action> actions;
  std::optional<std::string> error;
};

/// A trading agent: a native archetype or an instantiated avatar script.
/// Handlers are invoked by the kernel; `rng` is the agent's own decision
/// stream.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual HandlerResult on_wake(const MarketView& view, Rng& rng) = 0;
  virtual HandlerResult on_news(double value, const MarketView& view, Rng& rng);
  virtual HandlerResult on_message(double value, const MarketView& view, Rng& rng);
  /// signed_qty > 0 for shares bought, < 0 for shares sold.
  virtual HandlerResult on_fill(Qty signed_qty, const MarketView& view, Rng& rng);

  /// Whether the kernel needs to deliver own-fill notifications.
  virtual bool handles_fills() const { return false; }

  virtual double wake_rate() const = 0;
  virtual double news_sens() const = 0;
};

}  // namespace avatarsim
