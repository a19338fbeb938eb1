#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "avatarsim/types.hpp"

namespace avatarsim {

/// Transaction-tick history of the market: one price and quantity per trade,
/// with prefix sums so windowed statistics are O(1) and exact.
class MarketHistory {
 public:
  MarketHistory() {
    sum_price_.push_back(0);
    sum_price_sq_.push_back(0);
    sum_qty_.push_back(0);
  }

  void append(Price price, Qty qty) {
    prices_.push_back(price);
    qtys_.push_back(qty);
    sum_price_.push_back(sum_price_.back() + price);
    sum_price_sq_.push_back(sum_price_sq_.back() + static_cast<__int128>(price) * price);
    sum_qty_.push_back(sum_qty_.back() + qty);
  }

  std::size_t size() const noexcept { return prices_.size(); }
  const std::vector<Price>& prices() const noexcept { return prices_; }
  const std::vector<Qty>& quantities() const noexcept { return qtys_; }

  // Window helpers over the first `n` trades; callers guarantee w <= n.
  __int128 price_sum(std::size_t n, std::size_t w) const { return sum_price_[n] - sum_price_[n - w]; }
  __int128 price_sq_sum(std::size_t n, std::size_t w) const {
    return sum_price_sq_[n] - sum_price_sq_[n - w];
  }
  Qty qty_sum(std::size_t n, std::size_t w) const { return sum_qty_[n] - sum_qty_[n - w]; }

 private:
  std::vector<Price> prices_;
  std::vector<Qty> qtys_;
  std::vector<__int128> sum_price_;
  std::vector<__int128> sum_price_sq_;
  std::vector<Qty> sum_qty_;
};

/// Read-only context an agent decides in. Windowed accessors look at the
/// last w transaction ticks and return nullopt (the script-level `nil`)
/// when the history is too short.
struct MarketView {
  const MarketHistory* history = nullptr;
  std::size_t visible_trades = 0;  // prefix of history the agent may see
  std::optional<Price> best_bid;
  std::optional<Price> best_ask;
  SimTime time = 0;
  Price initial_price = 0;
  std::int64_t agent_count = 0;

  AgentId self = 0;
  FamilyId family = 0;
  Money cash = 0;
  Qty shares = 0;
  Money available_cash = 0;
  Qty available_shares = 0;

  std::optional<Price> last_price() const {
    if (visible_trades == 0) return std::nullopt;
    return history->prices()[visible_trades - 1];
  }

  /// Last trade price, or the scenario's initial reference price before any trade.
  Price ref_price() const { return visible_trades == 0 ? initial_price : *last_price(); }

  std::optional<double> mid() const {
    if (!best_bid || !best_ask) return std::nullopt;
    return (static_cast<double>(*best_bid) + static_cast<double>(*best_ask)) / 2.0;
  }

  /// Mark-to-market wealth at the reference price.
  Money wealth() const { return cash + shares * ref_price(); }

  std::optional<double> sma(std::int64_t w) const {
    if (w < 1 || static_cast<std::size_t>(w) > visible_trades) return std::nullopt;
    const auto n = static_cast<std::size_t>(w);
    return static_cast<double>(history->price_sum(visible_trades, n)) / static_cast<double>(w);
  }

  /// Population standard deviation of the last w prices, computed from exact
  /// integer sums: sqrt(w·Σp² − (Σp)²) / w.
  std::optional<double> stdev(std::int64_t w) const {
    if (w < 1 || static_cast<std::size_t>(w) > visible_trades) return std::nullopt;
    const auto n = static_cast<std::size_t>(w);
    const __int128 s = history->price_sum(visible_trades, n);
    const __int128 sq = history->price_sq_sum(visible_trades, n);
    const __int128 num = static_cast<__int128>(w) * sq - s * s;
    return std::sqrt(static_cast<double>(num)) / static_cast<double>(w);
  }

  /// ln(p_last / p_{last-w}); needs w+1 visible prices.
  std::optional<double> log_return(std::int64_t w) const {
    if (w < 1 || static_cast<std::size_t>(w) + 1 > visible_trades) return std::nullopt;
    const auto& p = history->prices();
    const double last = static_cast<double>(p[visible_trades - 1]);
    const double first = static_cast<double>(p[visible_trades - 1 - static_cast<std::size_t>(w)]);
    return std::log(last / first);
  }

  std::optional<Qty> volume(std::int64_t w) const {
    if (w < 1 || static_cast<std::size_t>(w) > visible_trades) return std::nullopt;
    return history->qty_sum(visible_trades, static_cast<std::size_t>(w));
  }
};

}  // namespace avatarsim
