#include "avatarsim/market.hpp"

#include <algorithm>
#include <string>

namespace avatarsim {

std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::None: return "None";
    case RejectReason::InsufficientFunds: return "InsufficientFunds";
    case RejectReason::InsufficientShares: return "InsufficientShares";
    case RejectReason::BadPrice: return "BadPrice";
    case RejectReason::BadQty: return "BadQty";
    case RejectReason::NoLiquidity: return "NoLiquidity";
    case RejectReason::UnknownAgent: return "UnknownAgent";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Accounts

Accounts::Accounts(std::vector<Account> accounts) : accounts_(std::move(accounts)) {
  for (std::size_t i = 0; i < accounts_.size(); ++i) {
    if (accounts_[i].agent != static_cast<AgentId>(i)) {
      throw std::invalid_argument("account ids must be dense and ordered");
    }
  }
}

AgentId Accounts::add(Money cash, Qty shares) {
  if (cash < 0 || shares < 0) throw std::invalid_argument("negative initial holdings");
  const auto id = static_cast<AgentId>(accounts_.size());
  accounts_.push_back(Account{id, cash, shares, 0, 0});
  return id;
}

Money Accounts::total_cash() const noexcept {
  Money total = 0;
  for (const auto& a : accounts_) total += a.cash;
  return total;
}

Qty Accounts::total_shares() const noexcept {
  Qty total = 0;
  for (const auto& a : accounts_) total += a.shares;
  return total;
}

void settle(Accounts& accounts, const Trade& trade, Price buyer_reserved_price) {
  if (trade.qty < 1 || trade.price < 1 || buyer_reserved_price < trade.price) {
    throw EngineError("settle: malformed trade " + std::to_string(trade.id));
  }
  Account& buyer = accounts[trade.buy_agent];
  Account& seller = accounts[trade.sell_agent];
  const Money notional = trade.price * trade.qty;
  const Money release = buyer_reserved_price * trade.qty;
  if (buyer.reserved_cash < release || seller.reserved_shares < trade.qty) {
    throw EngineError("settle: reservation does not cover trade " + std::to_string(trade.id));
  }
  buyer.reserved_cash -= release;
  seller.reserved_shares -= trade.qty;
  buyer.cash -= notional;
  buyer.shares += trade.qty;
  seller.cash += notional;
  seller.shares -= trade.qty;
  if (buyer.cash < buyer.reserved_cash || seller.shares < seller.reserved_shares) {
    throw EngineError("settle: negative available holdings after trade " + std::to_string(trade.id));
  }
}

// ---------------------------------------------------------------------------
// OrderBook

std::optional<Price> OrderBook::best_bid() const {
  if (bids_.empty()) return std::nullopt;
  return bids_.begin()->first;
}

std::optional<Price> OrderBook::best_ask() const {
  if (asks_.empty()) return std::nullopt;
  return asks_.begin()->first;
}

Qty OrderBook::depth_at(Side side, Price price) const {
  auto sum = [](const Level& level) {
    Qty q = 0;
    for (const auto& o : level) q += o.remaining;
    return q;
  };
  if (side == Side::Buy) {
    auto it = bids_.find(price);
    return it == bids_.end() ? 0 : sum(it->second);
  }
  auto it = asks_.find(price);
  return it == asks_.end() ? 0 : sum(it->second);
}

const Order* OrderBook::find(OrderId id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &*it->second.it;
}

std::vector<Order> OrderBook::orders(Side side) const {
  std::vector<Order> out;
  out.reserve(index_.size());
  auto collect = [&out](const auto& levels) {
    for (const auto& [price, level] : levels) out.insert(out.end(), level.begin(), level.end());
  };
  if (side == Side::Buy) {
    collect(bids_);
  } else {
    collect(asks_);
  }
  return out;
}

void OrderBook::insert(const Order& order) {
  Level& level = order.side == Side::Buy ? bids_[order.price] : asks_[order.price];
  level.push_back(order);
  index_.emplace(order.id, Locator{order.side, order.price, std::prev(level.end())});
}

void OrderBook::erase(OrderId id) {
  auto it = index_.find(id);
  if (it == index_.end()) return;
  const Locator loc = it->second;
  index_.erase(it);
  if (loc.side == Side::Buy) {
    auto lvl = bids_.find(loc.price);
    lvl->second.erase(loc.it);
    if (lvl->second.empty()) bids_.erase(lvl);
  } else {
    auto lvl = asks_.find(loc.price);
    lvl->second.erase(loc.it);
    if (lvl->second.empty()) asks_.erase(lvl);
  }
}

Order* OrderBook::front(Side side) {
  if (side == Side::Buy) return bids_.empty() ? nullptr : &bids_.begin()->second.front();
  return asks_.empty() ? nullptr : &asks_.begin()->second.front();
}

// ---------------------------------------------------------------------------
// Exchange

AgentId Exchange::add_account(Money cash, Qty shares) {
  const AgentId id = accounts_.add(cash, shares);
  return id;
}

std::span<const OrderId> Exchange::resting_orders(AgentId agent) const {
  if (agent < 0 || static_cast<std::size_t>(agent) >= resting_by_agent_.size()) return {};
  return resting_by_agent_[static_cast<std::size_t>(agent)];
}

void Exchange::track(AgentId agent, OrderId id) {
  const auto idx = static_cast<std::size_t>(agent);
  if (resting_by_agent_.size() <= idx) resting_by_agent_.resize(accounts_.size());
  resting_by_agent_[idx].push_back(id);
}

void Exchange::untrack(AgentId agent, OrderId id) {
  auto& ids = resting_by_agent_[static_cast<std::size_t>(agent)];
  ids.erase(std::find(ids.begin(), ids.end(), id));
}

void Exchange::remove_resting(const Order& order) {
  const AgentId agent = order.agent;
  const OrderId id = order.id;
  untrack(agent, id);
  book_.erase(id);
}

void Exchange::match(Order& incoming, bool budget_limited, std::vector<Trade>& trades) {
  const Side passive = opposite(incoming.side);
  while (incoming.remaining > 0) {
    Order* resting = book_.front(passive);
    if (resting == nullptr) break;
    if (incoming.kind == OrderKind::Limit) {
      if (incoming.side == Side::Buy && resting->price > incoming.price) break;
      if (incoming.side == Side::Sell && resting->price < incoming.price) break;
    }
    Qty q = std::min(incoming.remaining, resting->remaining);
    Price buyer_reserved_price = resting->price;
    if (budget_limited) {
      Account& buyer = accounts_[incoming.agent];
      q = std::min(q, buyer.available_cash() / resting->price);
      if (q == 0) break;
      buyer.reserved_cash += resting->price * q;
    } else if (incoming.side == Side::Buy) {
      buyer_reserved_price = incoming.price;
    }

    Trade t;
    t.id = next_trade_id_++;
    t.price = resting->price;
    t.qty = q;
    t.time = incoming.submit_time;
    t.aggressor = incoming.side;
    if (incoming.side == Side::Buy) {
      t.buy_order = incoming.id;
      t.buy_agent = incoming.agent;
      t.sell_order = resting->id;
      t.sell_agent = resting->agent;
    } else {
      t.buy_order = resting->id;
      t.buy_agent = resting->agent;
      t.sell_order = incoming.id;
      t.sell_agent = incoming.agent;
    }
    settle(accounts_, t, buyer_reserved_price);
    trades.push_back(t);

    incoming.remaining -= q;
    resting->remaining -= q;
    if (resting->remaining == 0) remove_resting(*resting);
  }
}

LimitResult Exchange::submit_limit(AgentId agent, Side side, Price price, Qty qty, SimTime time) {
  LimitResult result;
  auto reject = [&result](RejectReason r) {
    result.status = LimitResult::Status::Rejected;
    result.reason = r;
    return result;
  };
  if (!accounts_.contains(agent)) return reject(RejectReason::UnknownAgent);
  if (qty < 1) return reject(RejectReason::BadQty);
  if (price < 1) return reject(RejectReason::BadPrice);

  Account& acct = accounts_[agent];
  if (side == Side::Buy) {
    if (price > acct.available_cash() / qty) return reject(RejectReason::InsufficientFunds);
    acct.reserved_cash += price * qty;
  } else {
    if (acct.available_shares() < qty) return reject(RejectReason::InsufficientShares);
    acct.reserved_shares += qty;
  }

  Order order;
  order.id = next_seq_;
  order.submit_seq = next_seq_++;
  order.agent = agent;
  order.side = side;
  order.kind = OrderKind::Limit;
  order.price = price;
  order.qty = qty;
  order.remaining = qty;
  order.submit_time = time;

  match(order, false, result.trades);
  if (order.remaining > 0) {
    book_.insert(order);
    track(agent, order.id);
    result.status = LimitResult::Status::Rested;
    result.order_id = order.id;
  } else {
    result.status = LimitResult::Status::FullyFilled;
  }
  return result;
}

MarketResult Exchange::submit_market(AgentId agent, Side side, Qty qty, SimTime time) {
  MarketResult result;
  auto reject = [&result](RejectReason r) {
    result.status = MarketResult::Status::Rejected;
    result.reason = r;
    return result;
  };
  if (!accounts_.contains(agent)) return reject(RejectReason::UnknownAgent);
  if (qty < 1) return reject(RejectReason::BadQty);
  const bool no_liquidity = side == Side::Buy ? book_.asks().empty() : book_.bids().empty();
  if (no_liquidity) return reject(RejectReason::NoLiquidity);

  Account& acct = accounts_[agent];
  if (side == Side::Sell) {
    if (acct.available_shares() < qty) return reject(RejectReason::InsufficientShares);
    acct.reserved_shares += qty;
  }

  Order order;
  order.id = next_seq_;
  order.submit_seq = next_seq_++;
  order.agent = agent;
  order.side = side;
  order.kind = OrderKind::Market;
  order.qty = qty;
  order.remaining = qty;
  order.submit_time = time;

  match(order, side == Side::Buy, result.trades);
  if (side == Side::Sell) accounts_[agent].reserved_shares -= order.remaining;

  if (result.trades.empty()) return reject(RejectReason::InsufficientFunds);
  if (order.remaining == 0) {
    result.status = MarketResult::Status::FullyFilled;
  } else {
    result.status = MarketResult::Status::PartiallyFilledRemainderCanceled;
    result.canceled = order.remaining;
  }
  return result;
}

CancelResult Exchange::cancel(AgentId agent, OrderId id) {
  const Order* order = book_.find(id);
  if (order == nullptr) return CancelResult::NotFound;
  if (order->agent != agent) return CancelResult::NotOwner;
  Account& acct = accounts_[agent];
  if (order->side == Side::Buy) {
    acct.reserved_cash -= order->price * order->remaining;
  } else {
    acct.reserved_shares -= order->remaining;
  }
  remove_resting(*order);
  return CancelResult::Canceled;
}

std::size_t Exchange::cancel_all(AgentId agent) {
  if (agent < 0 || static_cast<std::size_t>(agent) >= resting_by_agent_.size()) return 0;
  // Copy: cancel() mutates the tracked list.
  const std::vector<OrderId> ids = resting_by_agent_[static_cast<std::size_t>(agent)];
  for (OrderId id : ids) cancel(agent, id);
  return ids.size();
}

}  // namespace avatarsim
