#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "avatarsim/kernel.hpp"

using namespace avatarsim;

namespace {

FamilyConfig archetype_family(std::string name, strategies::Archetype a, std::int64_t n, Money cash, Qty shares,
                              std::vector<ParamOverride> params = {}) {
  FamilyConfig f;
  f.name = std::move(name);
  f.archetype = a;
  f.n_agents = n;
  f.initial_cash = cash;
  f.initial_shares = shares;
  f.params = std::move(params);
  return f;
}

FamilyConfig script_family(std::string name, std::string source, std::int64_t n, Money cash = 1000,
                           Qty shares = 10) {
  FamilyConfig f;
  f.name = std::move(name);
  f.avatar_source = std::move(source);
  f.n_agents = n;
  f.initial_cash = cash;
  f.initial_shares = shares;
  return f;
}

ScenarioConfig mixed_market(std::uint64_t seed, std::int64_t transactions = 3000) {
  using strategies::Archetype;
  using D = Distribution;
  ScenarioConfig c;
  c.families = {
      archetype_family("random", Archetype::Random, 40, 50000, 50,
                       {{"spread", D::uniform(0.0, 0.02)}, {"news_sens", D::uniform(0.0, 1.0)}}),
      archetype_family("momentum", Archetype::Momentum, 10, 50000, 50, {{"lookback", D::uniform_int(2, 10)}}),
      archetype_family("bollinger", Archetype::Bollinger, 10, 50000, 50),
  };
  c.initial_reference_price = 1000;
  c.news_rate = 0.5;
  c.news_sigma = 0.01;
  c.run_length = {RunLength::Kind::Transactions, transactions};
  c.master_seed = seed;
  c.snapshot_interval = 250;
  return c;
}

constexpr const char* kIdle = R"(avatar "idle" {})";

}  // namespace

TEST(Run, NeverActingFamilyLeavesAccountsUnchanged) {
  ScenarioConfig c;
  c.families = {script_family("idle", kIdle, 1)};
  c.run_length = {RunLength::Kind::SimTime, 50 * kMicroticksPerUnit};
  const auto r = run(c);
  EXPECT_TRUE(r.tape.empty());
  EXPECT_TRUE(r.prices().empty());
  ASSERT_EQ(r.final_accounts.size(), 1u);
  EXPECT_EQ(r.final_accounts[0].cash, 1000);
  EXPECT_EQ(r.final_accounts[0].shares, 10);
  EXPECT_EQ(r.stats.end_reason, "sim_time");
}

TEST(Run, SameSeedSameResult) {
  const auto a = run(mixed_market(7));
  const auto b = run(mixed_market(7));
  EXPECT_EQ(serialize(a), serialize(b));
  EXPECT_EQ(tape_csv(a), tape_csv(b));
  EXPECT_NE(tape_csv(a), tape_csv(run(mixed_market(8))));
}

TEST(Run, ConservationAndSnapshotConsistency) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = mixed_market(seed);
    const auto r = run(c);
    ASSERT_EQ(r.tape.size(), 3000u);
    Money cash0 = 0, cash1 = 0;
    Qty shares0 = 0, shares1 = 0;
    for (const auto& f : r.families) {
      cash0 += f.initial_cash * f.n_agents;
      shares0 += f.initial_shares * f.n_agents;
    }
    for (const auto& acc : r.final_accounts) {
      cash1 += acc.cash;
      shares1 += acc.shares;
      EXPECT_GE(acc.cash, 0);
      EXPECT_GE(acc.shares, 0);
    }
    EXPECT_EQ(cash0, cash1);
    EXPECT_EQ(shares0, shares1);
    EXPECT_NO_THROW(verify_snapshots(r));
    EXPECT_EQ(r.snapshots.size(), 3000u / 250u + 1u);
  }
}

TEST(Run, DispatchIsTimeOrdered) {
  SimTime last = -1;
  bool ordered = true;
  RunOptions opts;
  opts.observer = [&](const DispatchRecord& d) {
    if (d.view.time < last) ordered = false;
    last = d.view.time;
  };
  run(mixed_market(2, 500), opts);
  EXPECT_TRUE(ordered);
  EXPECT_GT(last, 0);
}

TEST(Run, IdleFamilyDoesNotPerturbOthers) {
  auto base = mixed_market(3, 1500);
  auto extended = base;
  extended.families.push_back(script_family("idle", kIdle, 25));
  const auto a = run(base);
  const auto b = run(extended);
  EXPECT_EQ(a.prices(), b.prices());
  EXPECT_EQ(a.volumes(), b.volumes());
}

TEST(Run, TamperedSnapshotDetected) {
  auto r = run(mixed_market(4, 600));
  r.snapshots[1].cash[0] += 1;
  EXPECT_THROW(verify_snapshots(r), ArchiveError);
}

TEST(Wake, FloorAndMean) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(wake_delay(1e12, rng), 1);
  constexpr int n = 100000;
  const double rate = 4.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(wake_delay(rate, rng));
  const double mean = sum / n;
  const double expect = kMicroticksPerUnit / rate;
  EXPECT_NEAR(mean, expect, 3.0 * expect / std::sqrt(n));
  Rng a(5), b(5);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(wake_delay(1.0, a), wake_delay(1.0, b));
}

TEST(News, NoNewsAtZeroRate) {
  ScenarioConfig c;
  c.families = {script_family("idle", kIdle, 1)};
  c.run_length = {RunLength::Kind::SimTime, 100 * kMicroticksPerUnit};
  EXPECT_EQ(run(c).stats.news_events, 0);
}

TEST(News, ArrivalCountAndMean) {
  ScenarioConfig c;
  c.families = {script_family("idle", kIdle, 1)};
  const double rate = 2.0, sigma = 0.3;
  const std::int64_t T = 20000;
  c.news_rate = rate;
  c.news_sigma = sigma;
  c.run_length = {RunLength::Kind::SimTime, T * kMicroticksPerUnit};
  c.master_seed = 11;
  std::vector<double> values;
  RunOptions opts;
  opts.observer = [&](const DispatchRecord& d) {
    if (d.event == AgentEvent::News) values.push_back(d.value);
  };
  const auto r = run(c, opts);
  const double expect = rate * static_cast<double>(T);
  EXPECT_NEAR(static_cast<double>(r.stats.news_events), expect, 3.0 * std::sqrt(expect));
  ASSERT_EQ(values.size(), static_cast<std::size_t>(r.stats.news_events));
  double sum = 0.0;
  for (double v : values) sum += v;
  EXPECT_NEAR(sum / static_cast<double>(values.size()), 0.0, 3.0 * sigma / std::sqrt(values.size()));
}

TEST(News, BroadcastToEveryAgent) {
  ScenarioConfig c;
  c.families = {script_family("idle", kIdle, 4)};
  c.news_rate = 1.0;
  c.news_sigma = 0.1;
  c.run_length = {RunLength::Kind::SimTime, 50 * kMicroticksPerUnit};
  std::vector<int> per_agent(4, 0);
  RunOptions opts;
  opts.observer = [&](const DispatchRecord& d) {
    if (d.event == AgentEvent::News) per_agent[static_cast<std::size_t>(d.agent)]++;
  };
  const auto r = run(c, opts);
  for (int n : per_agent) EXPECT_EQ(n, r.stats.news_events);
}

namespace {

// Agent 0 sends two messages per wake to agent 1; agent 1 reports each
// message by its value through the observer.
constexpr const char* kSender = R"(avatar "pair" {
  on wake {
    if my.id == 0 {
      send(1, 1.0)
      send(1, 2.0)
    }
  }
  on message(m) {
    cancel_all()
  }
})";

struct Delivery {
  SimTime time;
  double value;
};

std::vector<std::pair<SimTime, std::vector<Delivery>>> message_trace(SimTime latency) {
  ScenarioConfig c;
  c.families = {script_family("pair", kSender, 2)};
  c.message_latency = latency;
  c.run_length = {RunLength::Kind::SimTime, 5 * kMicroticksPerUnit};
  std::vector<std::pair<SimTime, std::vector<Delivery>>> wakes;
  RunOptions opts;
  opts.observer = [&](const DispatchRecord& d) {
    if (d.event == AgentEvent::Wake && d.agent == 0) wakes.push_back({d.view.time, {}});
    if (d.event == AgentEvent::Message) {
      EXPECT_EQ(d.agent, 1);
      wakes.back().second.push_back({d.view.time, d.value});
    }
  };
  run(c, opts);
  return wakes;
}

}  // namespace

TEST(Messages, LatencyAndOrder) {
  for (SimTime latency : {SimTime{0}, SimTime{5}}) {
    const auto trace = message_trace(latency);
    ASSERT_FALSE(trace.empty());
    for (const auto& [sent, deliveries] : trace) {
      if (deliveries.empty()) continue;  // run ended before delivery
      ASSERT_EQ(deliveries.size(), 2u);
      EXPECT_EQ(deliveries[0].time, sent + latency);
      EXPECT_EQ(deliveries[0].value, 1.0);
      EXPECT_EQ(deliveries[1].value, 2.0);
    }
  }
}

TEST(Config, RejectsInvalidScenarios) {
  auto c = mixed_market(1);
  c.families[0].n_agents = 0;
  EXPECT_THROW(run(c), ConfigError);
  c = mixed_market(1);
  c.run_length.value = 0;
  EXPECT_THROW(run(c), ConfigError);
  c = mixed_market(1);
  c.families.push_back(script_family("bad", R"(avatar "b" { on wake { x = 1 } })", 1));
  try {
    run(c);
    ADD_FAILURE() << "expected an avatar error";
  } catch (const FamilyAvatarError& e) {
    EXPECT_EQ(e.family(), "bad");
    EXPECT_EQ(e.family_index(), 3u);
  }
}
