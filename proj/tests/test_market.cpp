#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "avatarsim/market.hpp"
#include "avatarsim/rng.hpp"
#include "avatarsim/testing/oracle_suite.hpp"
#include "avatarsim/testing/reference_matcher.hpp"

using namespace avatarsim;
using LS = LimitResult::Status;
using MS = MarketResult::Status;

namespace {

// Greedy walk over ask levels for a budget-limited market buy: take as many
// units of each level as the remaining cash covers, stop at the first level
// where not even one unit is affordable.
struct Fill {
  Price price;
  Qty qty;
};
std::vector<Fill> affordable_walk(const std::vector<Fill>& asks, Qty want, Money cash) {
  std::vector<Fill> out;
  for (const auto& level : asks) {
    if (want == 0) break;
    const Qty q = std::min({want, level.qty, cash / level.price});
    if (q == 0) break;
    out.push_back({level.price, q});
    want -= q;
    cash -= q * level.price;
  }
  return out;
}

Money total_cash(const Exchange& ex) { return ex.accounts().total_cash(); }
Qty total_shares(const Exchange& ex) { return ex.accounts().total_shares(); }

}  // namespace

TEST(Limit, RestsOnEmptyBook) {
  Exchange ex;
  const AgentId a = ex.add_account(10000, 0);
  const auto r = ex.submit_limit(a, Side::Buy, 100, 10, 0);
  EXPECT_EQ(r.status, LS::Rested);
  EXPECT_TRUE(r.trades.empty());
  EXPECT_EQ(ex.book().best_bid(), 100);
  EXPECT_EQ(ex.accounts()[a].reserved_cash, 1000);
}

TEST(Limit, ExecutesAtRestingPrice) {
  Exchange ex;
  const AgentId a = ex.add_account(0, 10);
  const AgentId b = ex.add_account(10000, 0);
  ex.submit_limit(a, Side::Sell, 100, 10, 0);
  const auto r = ex.submit_limit(b, Side::Buy, 101, 4, 1);
  EXPECT_EQ(r.status, LS::FullyFilled);
  ASSERT_EQ(r.trades.size(), 1u);
  EXPECT_EQ(r.trades[0].price, 100);
  EXPECT_EQ(r.trades[0].qty, 4);
  EXPECT_EQ(ex.book().depth_at(Side::Sell, 100), 6);
  // Buyer reserved 101 per share but paid 100: nothing stays reserved.
  EXPECT_EQ(ex.accounts()[b].cash, 10000 - 400);
  EXPECT_EQ(ex.accounts()[b].reserved_cash, 0);
}

TEST(Limit, PriceTimePriorityAcrossLevels) {
  Exchange ex;
  const AgentId a = ex.add_account(0, 5);
  const AgentId b = ex.add_account(0, 5);
  const AgentId c = ex.add_account(100000, 0);
  ex.submit_limit(a, Side::Sell, 100, 5, 0);
  const auto rb = ex.submit_limit(b, Side::Sell, 101, 5, 1);
  const auto r = ex.submit_limit(c, Side::Buy, 101, 8, 2);
  ASSERT_EQ(r.trades.size(), 2u);
  EXPECT_EQ(r.trades[0].price, 100);
  EXPECT_EQ(r.trades[0].qty, 5);
  EXPECT_EQ(r.trades[1].price, 101);
  EXPECT_EQ(r.trades[1].qty, 3);
  ASSERT_NE(ex.book().find(rb.order_id), nullptr);
  EXPECT_EQ(ex.book().find(rb.order_id)->remaining, 2);
}

TEST(Limit, EarlierOrderFirstAtEqualPrice) {
  Exchange ex;
  const AgentId a = ex.add_account(0, 5);
  const AgentId b = ex.add_account(0, 5);
  const AgentId c = ex.add_account(100000, 0);
  ex.submit_limit(b, Side::Sell, 100, 5, 0);
  ex.submit_limit(a, Side::Sell, 100, 5, 1);
  const auto r = ex.submit_limit(c, Side::Buy, 100, 3, 2);
  ASSERT_EQ(r.trades.size(), 1u);
  EXPECT_EQ(r.trades[0].sell_agent, b);
}

TEST(Limit, Rejections) {
  Exchange ex;
  const AgentId a = ex.add_account(999, 3);
  EXPECT_EQ(ex.submit_limit(a, Side::Buy, 100, 10, 0).reason, RejectReason::InsufficientFunds);
  EXPECT_EQ(ex.submit_limit(a, Side::Sell, 100, 4, 0).reason, RejectReason::InsufficientShares);
  EXPECT_EQ(ex.submit_limit(a, Side::Buy, 0, 1, 0).reason, RejectReason::BadPrice);
  EXPECT_EQ(ex.submit_limit(a, Side::Buy, 10, 0, 0).reason, RejectReason::BadQty);
  EXPECT_EQ(ex.submit_limit(7, Side::Buy, 10, 1, 0).reason, RejectReason::UnknownAgent);
  // Reserved cash is not available to a second order.
  EXPECT_EQ(ex.submit_limit(a, Side::Buy, 100, 9, 0).status, LS::Rested);
  EXPECT_EQ(ex.submit_limit(a, Side::Buy, 1, 100, 0).reason, RejectReason::InsufficientFunds);
}

TEST(Market, DepthBoundCancelsRemainder) {
  Exchange ex;
  const AgentId a = ex.add_account(0, 6);
  const AgentId b = ex.add_account(100000, 0);
  ex.submit_limit(a, Side::Sell, 100, 6, 0);
  const auto r = ex.submit_market(b, Side::Buy, 10, 1);
  EXPECT_EQ(r.status, MS::PartiallyFilledRemainderCanceled);
  EXPECT_EQ(r.canceled, 4);
  ASSERT_EQ(r.trades.size(), 1u);
  EXPECT_EQ(r.trades[0].qty, 6);
  EXPECT_EQ(ex.book().order_count(), 0u);
}

TEST(Market, NoLiquidity) {
  Exchange ex;
  const AgentId a = ex.add_account(1000, 0);
  EXPECT_EQ(ex.submit_market(a, Side::Buy, 5, 0).reason, RejectReason::NoLiquidity);
}

TEST(Market, SellNeedsShares) {
  Exchange ex;
  const AgentId a = ex.add_account(10000, 0);
  const AgentId b = ex.add_account(0, 2);
  ex.submit_limit(a, Side::Buy, 100, 5, 0);
  EXPECT_EQ(ex.submit_market(b, Side::Sell, 3, 1).reason, RejectReason::InsufficientShares);
}

TEST(Market, BudgetLimitedWalkMatchesOracle) {
  const std::vector<Fill> asks = {{100, 5}, {110, 5}};
  const auto expect = affordable_walk(asks, 10, 830);
  ASSERT_EQ(expect.size(), 2u);
  EXPECT_EQ(expect[0].qty, 5);
  EXPECT_EQ(expect[1].qty, 3);

  Exchange ex;
  const AgentId s = ex.add_account(0, 10);
  const AgentId b = ex.add_account(830, 0);
  for (const auto& l : asks) ex.submit_limit(s, Side::Sell, l.price, l.qty, 0);
  const auto r = ex.submit_market(b, Side::Buy, 10, 1);
  ASSERT_EQ(r.trades.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(r.trades[i].price, expect[i].price);
    EXPECT_EQ(r.trades[i].qty, expect[i].qty);
  }
  EXPECT_EQ(r.status, MS::PartiallyFilledRemainderCanceled);
  EXPECT_EQ(r.canceled, 2);
  EXPECT_EQ(ex.accounts()[b].cash, 0);
  EXPECT_EQ(ex.accounts()[b].shares, 8);
}

TEST(Market, BudgetWalkRandomLevels) {
  Rng rng(11);
  for (int round = 0; round < 300; ++round) {
    std::vector<Fill> asks;
    Price p = rng.uniform_int(1, 50);
    const int levels = static_cast<int>(rng.uniform_int(1, 5));
    for (int i = 0; i < levels; ++i) {
      asks.push_back({p, rng.uniform_int(1, 8)});
      p += rng.uniform_int(1, 20);
    }
    const Qty want = rng.uniform_int(1, 30);
    const Money cash = rng.uniform_int(asks[0].price, 2000);
    Exchange ex;
    const AgentId s = ex.add_account(0, 1000);
    const AgentId b = ex.add_account(cash, 0);
    for (const auto& l : asks) ex.submit_limit(s, Side::Sell, l.price, l.qty, 0);
    const auto r = ex.submit_market(b, Side::Buy, want, 1);
    const auto expect = affordable_walk(asks, want, cash);
    ASSERT_EQ(r.trades.size(), expect.size()) << "round " << round;
    for (std::size_t i = 0; i < expect.size(); ++i) {
      EXPECT_EQ(r.trades[i].price, expect[i].price);
      EXPECT_EQ(r.trades[i].qty, expect[i].qty);
    }
    EXPECT_GE(ex.accounts()[b].cash, 0);
  }
}

TEST(Cancel, ReleasesReservation) {
  Exchange ex;
  const AgentId a = ex.add_account(10000, 0);
  const AgentId b = ex.add_account(10000, 0);
  const auto r = ex.submit_limit(a, Side::Buy, 100, 10, 0);
  EXPECT_EQ(ex.cancel(b, r.order_id), CancelResult::NotOwner);
  EXPECT_EQ(ex.cancel(a, r.order_id), CancelResult::Canceled);
  EXPECT_EQ(ex.accounts()[a].reserved_cash, 0);
  EXPECT_EQ(ex.cancel(a, r.order_id), CancelResult::NotFound);
}

TEST(Cancel, PartiallyFilledReleasesRemainder) {
  Exchange ex;
  const AgentId a = ex.add_account(0, 10);
  const AgentId b = ex.add_account(10000, 0);
  const auto r = ex.submit_limit(a, Side::Sell, 100, 10, 0);
  ex.submit_market(b, Side::Buy, 4, 1);
  EXPECT_EQ(ex.accounts()[a].reserved_shares, 6);
  EXPECT_EQ(ex.cancel_all(a), 1u);
  EXPECT_EQ(ex.accounts()[a].reserved_shares, 0);
  EXPECT_EQ(ex.cancel(a, r.order_id), CancelResult::NotFound);
}

TEST(Settle, Arithmetic) {
  Accounts acc;
  const AgentId buyer = acc.add(1000, 0);
  const AgentId seller = acc.add(0, 10);
  acc[buyer].reserved_cash = 400;
  acc[seller].reserved_shares = 4;
  Trade t;
  t.buy_agent = buyer;
  t.sell_agent = seller;
  t.price = 100;
  t.qty = 4;
  settle(acc, t, 100);
  EXPECT_EQ(acc[buyer].cash, 600);
  EXPECT_EQ(acc[buyer].shares, 4);
  EXPECT_EQ(acc[seller].cash, 400);
  EXPECT_EQ(acc[seller].shares, 6);
  EXPECT_EQ(acc.total_cash(), 1000);
  EXPECT_EQ(acc.total_shares(), 10);
}

TEST(Settle, SelfTradeIsNeutral) {
  Exchange ex;
  const AgentId a = ex.add_account(5000, 10);
  const Account before = ex.accounts()[a];
  ex.submit_limit(a, Side::Sell, 100, 5, 0);
  const auto r = ex.submit_limit(a, Side::Buy, 100, 5, 1);
  ASSERT_EQ(r.trades.size(), 1u);
  EXPECT_EQ(ex.accounts()[a], before);
}

TEST(Settle, UncoveredFillAborts) {
  Accounts acc;
  const AgentId buyer = acc.add(1000, 0);
  const AgentId seller = acc.add(0, 10);
  Trade t;
  t.buy_agent = buyer;
  t.sell_agent = seller;
  t.price = 100;
  t.qty = 4;
  EXPECT_THROW(settle(acc, t, 100), EngineError);
}

// Invariants after every operation of a random stream: book uncrossed,
// resting orders positive, holdings non-negative, reservations covered,
// totals conserved.
TEST(Properties, RandomStreamInvariants) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    Exchange ex;
    for (int a = 0; a < 5; ++a) ex.add_account(rng.uniform_int(0, 5000), rng.uniform_int(0, 50));
    const Money cash0 = total_cash(ex);
    const Qty shares0 = total_shares(ex);
    for (int step = 0; step < 2000; ++step) {
      const AgentId a = static_cast<AgentId>(rng.uniform_int(0, 4));
      const Side side = rng.bernoulli(0.5) ? Side::Buy : Side::Sell;
      const double u = rng.uniform01();
      if (u < 0.6) {
        ex.submit_limit(a, side, rng.uniform_int(90, 110), rng.uniform_int(1, 10), step);
      } else if (u < 0.8) {
        ex.submit_market(a, side, rng.uniform_int(1, 15), step);
      } else {
        ex.cancel_all(a);
      }
      const auto bid = ex.book().best_bid();
      const auto ask = ex.book().best_ask();
      if (bid && ask) ASSERT_LT(*bid, *ask);
      for (Side s : {Side::Buy, Side::Sell}) {
        for (const auto& o : ex.book().orders(s)) ASSERT_GE(o.remaining, 1);
      }
      for (const auto& acc : ex.accounts().all()) {
        ASSERT_GE(acc.cash, 0);
        ASSERT_GE(acc.shares, 0);
        ASSERT_GE(acc.available_cash(), 0);
        ASSERT_GE(acc.available_shares(), 0);
      }
      ASSERT_EQ(total_cash(ex), cash0);
      ASSERT_EQ(total_shares(ex), shares0);
    }
  }
}

TEST(Properties, BookOrderIsPriceThenTime) {
  Rng rng(3);
  Exchange ex;
  const AgentId a = ex.add_account(1'000'000, 1000);
  for (int i = 0; i < 200; ++i) {
    const Side side = rng.bernoulli(0.5) ? Side::Buy : Side::Sell;
    const Price p = side == Side::Buy ? rng.uniform_int(50, 99) : rng.uniform_int(101, 150);
    ex.submit_limit(a, side, p, 1, i);
  }
  const auto bids = ex.book().orders(Side::Buy);
  for (std::size_t i = 1; i < bids.size(); ++i) {
    EXPECT_TRUE(bids[i - 1].price > bids[i].price ||
                (bids[i - 1].price == bids[i].price && bids[i - 1].submit_seq < bids[i].submit_seq));
  }
  const auto asks = ex.book().orders(Side::Sell);
  for (std::size_t i = 1; i < asks.size(); ++i) {
    EXPECT_TRUE(asks[i - 1].price < asks[i].price ||
                (asks[i - 1].price == asks[i].price && asks[i - 1].submit_seq < asks[i].submit_seq));
  }
}

TEST(Reference, AgreesOnSmallExamples) {
  avatarsim::testing::ReferenceMatcher ref({{0, 10}, {830, 0}});
  ref.submit_limit(0, Side::Sell, 100, 5, 0);
  ref.submit_limit(0, Side::Sell, 110, 5, 0);
  const auto r = ref.submit_market(1, Side::Buy, 10, 1);
  ASSERT_EQ(r.trades.size(), 2u);
  EXPECT_EQ(r.trades[1].qty, 3);
  EXPECT_EQ(r.canceled, 2);
}

TEST(Reference, StreamsAgree) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = avatarsim::testing::run_matcher_stream(seed, 3000);
    EXPECT_TRUE(r.ok()) << *r.mismatch;
    EXPECT_GT(r.trades, 0u);
  }
}

// The lockstep comparison must notice a divergence: the same stream with one
// extra order given to only one side has to produce different tapes.
TEST(Reference, DivergenceIsDetected) {
  Exchange ex;
  ex.add_account(10000, 50);
  ex.add_account(10000, 50);
  avatarsim::testing::ReferenceMatcher ref({{10000, 50}, {10000, 50}});
  ex.submit_limit(0, Side::Sell, 100, 5, 0);
  ref.submit_limit(0, Side::Sell, 100, 5, 0);
  ref.submit_limit(0, Side::Sell, 99, 5, 0);
  const auto x = ex.submit_limit(1, Side::Buy, 100, 3, 1);
  const auto y = ref.submit_limit(1, Side::Buy, 100, 3, 1);
  ASSERT_EQ(x.trades.size(), 1u);
  ASSERT_EQ(y.trades.size(), 1u);
  EXPECT_NE(x.trades[0], y.trades[0]);
}
