#pragma once

// Single-instrument limit order book with continuous double-auction matching
// under price-time priority, plus cash/share accounts with reservations.

#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "avatarsim/types.hpp"

namespace avatarsim {

enum class OrderKind : std::uint8_t { Limit, Market };

struct Order {
  OrderId id = 0;
  AgentId agent = 0;
  Side side = Side::Buy;
  OrderKind kind = OrderKind::Limit;
  Price price = 0;  // unused for market orders
  Qty qty = 0;
  Qty remaining = 0;
  SimTime submit_time = 0;
  std::int64_t submit_seq = 0;
};

struct Trade {
  TradeId id = 0;
  OrderId buy_order = 0;
  OrderId sell_order = 0;
  AgentId buy_agent = 0;
  AgentId sell_agent = 0;
  Price price = 0;
  Qty qty = 0;
  SimTime time = 0;
  Side aggressor = Side::Buy;

  friend bool operator==(const Trade&, const Trade&) = default;
};

struct Account {
  AgentId agent = 0;
  Money cash = 0;  // total, including the reserved part
  Qty shares = 0;  // total, including the reserved part
  Money reserved_cash = 0;
  Qty reserved_shares = 0;

  Money available_cash() const noexcept { return cash - reserved_cash; }
  Qty available_shares() const noexcept { return shares - reserved_shares; }

  friend bool operator==(const Account&, const Account&) = default;
};

enum class RejectReason : std::uint8_t {
  None,
  InsufficientFunds,
  InsufficientShares,
  BadPrice,
  BadQty,
  NoLiquidity,
  UnknownAgent,
};

std::string_view to_string(RejectReason r) noexcept;

/// Raised when an engine invariant (conservation, reservation cover) breaks.
class EngineError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct LimitResult {
  enum class Status : std::uint8_t { Rested, FullyFilled, Rejected };
  Status status = Status::Rejected;
  OrderId order_id = 0;  // set when Rested
  RejectReason reason = RejectReason::None;
  std::vector<Trade> trades;
};

struct MarketResult {
  enum class Status : std::uint8_t { FullyFilled, PartiallyFilledRemainderCanceled, Rejected };
  Status status = Status::Rejected;
  Qty canceled = 0;
  RejectReason reason = RejectReason::None;
  std::vector<Trade> trades;
};

enum class CancelResult : std::uint8_t { Canceled, NotFound, NotOwner };

/// Cash and share ledger indexed by agent id (ids are dense from 0).
class Accounts {
 public:
  Accounts() = default;
  explicit Accounts(std::vector<Account> accounts);

  AgentId add(Money cash, Qty shares);

  bool contains(AgentId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < accounts_.size();
  }
  const Account& operator[](AgentId id) const { return accounts_.at(static_cast<std::size_t>(id)); }
  Account& operator[](AgentId id) { return accounts_.at(static_cast<std::size_t>(id)); }

  std::size_t size() const noexcept { return accounts_.size(); }
  std::span<const Account> all() const noexcept { return accounts_; }

  Money total_cash() const noexcept;
  Qty total_shares() const noexcept;

 private:
  std::vector<Account> accounts_;
};

/// Applies one fill. The buyer's reservation shrinks by
/// buyer_reserved_price * qty (the limit it reserved at), the seller's by qty.
/// Holdings move at the trade price, so Σcash and Σshares are unchanged.
void settle(Accounts& accounts, const Trade& trade, Price buyer_reserved_price);

class OrderBook {
 public:
  using Level = std::list<Order>;
  using BidLevels = std::map<Price, Level, std::greater<>>;
  using AskLevels = std::map<Price, Level, std::less<>>;

  std::optional<Price> best_bid() const;
  std::optional<Price> best_ask() const;

  /// Total resting quantity at a price on one side.
  Qty depth_at(Side side, Price price) const;

  const Order* find(OrderId id) const;
  std::size_t order_count() const noexcept { return index_.size(); }

  /// Resting orders of one side in priority order.
  std::vector<Order> orders(Side side) const;

  const BidLevels& bids() const noexcept { return bids_; }
  const AskLevels& asks() const noexcept { return asks_; }

 private:
  friend class Exchange;

  struct Locator {
    Side side;
    Price price;
    Level::iterator it;
  };

  void insert(const Order& order);
  void erase(OrderId id);
  Order* front(Side side);  // best resting order of a side, or nullptr

  BidLevels bids_;
  AskLevels asks_;
  std::unordered_map<OrderId, Locator> index_;
};

/// Order book plus accounts: the single public market of a run.
class Exchange {
 public:
  Exchange() = default;
  explicit Exchange(Accounts accounts) : accounts_(std::move(accounts)) {}

  AgentId add_account(Money cash, Qty shares);

  LimitResult submit_limit(AgentId agent, Side side, Price price, Qty qty, SimTime time);
  MarketResult submit_market(AgentId agent, Side side, Qty qty, SimTime time);
  CancelResult cancel(AgentId agent, OrderId id);

  /// Cancels every resting order of an agent; returns how many were removed.
  std::size_t cancel_all(AgentId agent);

  const OrderBook& book() const noexcept { return book_; }
  const Accounts& accounts() const noexcept { return accounts_; }

  /// Resting order ids of an agent, in submission order.
  std::span<const OrderId> resting_orders(AgentId agent) const;

  TradeId trade_count() const noexcept { return next_trade_id_ - 1; }

 private:
  // Matches an incoming order against the opposite side. With budget_limited
  // (market buys) each fill is capped by the buyer's available cash and
  // matching stops at the first unaffordable unit.
  void match(Order& incoming, bool budget_limited, std::vector<Trade>& trades);
  void remove_resting(const Order& order);
  void track(AgentId agent, OrderId id);
  void untrack(AgentId agent, OrderId id);

  OrderBook book_;
  Accounts accounts_;
  std::vector<std::vector<OrderId>> resting_by_agent_;
  std::int64_t next_seq_ = 1;
  TradeId next_trade_id_ = 1;
};

}  // namespace avatarsim
