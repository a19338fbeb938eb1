#include "avatarsim/testing/oracle_suite.hpp"

#include <ostream>
#include <sstream>

#include "avatarsim/dsl/compiler.hpp"
#include "avatarsim/dsl/parser.hpp"
#include "avatarsim/market.hpp"
#include "avatarsim/rng.hpp"
#include "avatarsim/run_result.hpp"
#include "avatarsim/testing/fixture.hpp"
#include "avatarsim/testing/reference_matcher.hpp"

namespace avatarsim::testing {
namespace {

constexpr int kAgents = 6;

std::string trade_text(const Trade& t) {
  std::ostringstream os;
  os << "#" << t.id << " " << t.buy_agent << "<-" << t.sell_agent << " " << t.qty << "@" << t.price << " orders "
     << t.buy_order << "/" << t.sell_order << " " << to_string(t.aggressor);
  return os.str();
}

std::optional<std::string> diff_trades(const std::vector<Trade>& a, const std::vector<Trade>& b) {
  if (a.size() != b.size()) {
    return "trade count " + std::to_string(a.size()) + " vs reference " + std::to_string(b.size());
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] == b[i])) return "trade " + trade_text(a[i]) + " vs reference " + trade_text(b[i]);
  }
  return std::nullopt;
}

std::optional<std::string> diff_state(const Exchange& ex, const ReferenceMatcher& ref) {
  for (AgentId a = 0; a < kAgents; ++a) {
    const Account& acc = ex.accounts()[a];
    const auto& h = ref.holding(a);
    if (acc.cash != h.cash || acc.shares != h.shares || acc.reserved_cash != ref.reserved_cash(a) ||
        acc.reserved_shares != ref.reserved_shares(a)) {
      return "account " + std::to_string(a) + " differs";
    }
  }
  for (Side side : {Side::Buy, Side::Sell}) {
    const auto x = ex.book().orders(side);
    const auto y = ref.orders(side);
    if (x.size() != y.size()) return std::string(to_string(side)) + " book depth differs";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].id != y[i].id || x[i].agent != y[i].agent || x[i].price != y[i].price ||
          x[i].remaining != y[i].remaining) {
        return std::string(to_string(side)) + " book differs at position " + std::to_string(i);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

StreamResult run_matcher_stream(std::uint64_t seed, int orders) {
  StreamResult r;
  r.seed = seed;
  Rng rng(derive_seed(seed, fnv1a("matcher-stream")));
  Exchange ex;
  std::vector<ReferenceMatcher::Holding> holdings;
  for (int a = 0; a < kAgents; ++a) {
    const Money cash = rng.uniform_int(0, 20000);
    const Qty shares = rng.uniform_int(0, 120);
    ex.add_account(cash, shares);
    holdings.push_back({cash, shares});
  }
  ReferenceMatcher ref(holdings);
  std::vector<Trade> tape;
  std::vector<std::pair<OrderId, AgentId>> rested;
  Price center = 100;

  auto fail = [&](int step, const std::string& op, const std::string& what) {
    r.mismatch = "seed " + std::to_string(seed) + " step " + std::to_string(step) + " " + op + ": " + what;
  };

  for (int step = 0; step < orders; ++step) {
    r.operations++;
    const SimTime time = step;
    center = std::max<Price>(10, center + rng.uniform_int(-1, 1));
    AgentId agent = static_cast<AgentId>(rng.uniform_int(0, kAgents - 1));
    const double u = rng.uniform01();
    if (u < 0.55) {
      const Side side = rng.bernoulli(0.5) ? Side::Buy : Side::Sell;
      Price price = center + rng.uniform_int(-6, 6);
      Qty qty = rng.uniform_int(1, 15);
      const double bad = rng.uniform01();
      if (bad < 0.01) qty = rng.uniform_int(-2, 0);
      if (bad >= 0.01 && bad < 0.02) price = rng.uniform_int(-2, 0);
      if (bad >= 0.02 && bad < 0.025) agent = kAgents;
      const auto x = ex.submit_limit(agent, side, price, qty, time);
      const auto y = ref.submit_limit(agent, side, price, qty, time);
      const std::string op = "limit " + std::string(to_string(side)) + " " + std::to_string(qty) + "@" +
                             std::to_string(price) + " by " + std::to_string(agent);
      if (x.status != y.status || x.reason != y.reason || x.order_id != y.order_id) {
        fail(step, op, "status/reason/order id differ");
        return r;
      }
      if (auto d = diff_trades(x.trades, y.trades)) {
        fail(step, op, *d);
        return r;
      }
      if (x.status == LimitResult::Status::Rested) rested.emplace_back(x.order_id, agent);
      tape.insert(tape.end(), x.trades.begin(), x.trades.end());
    } else if (u < 0.75) {
      const Side side = rng.bernoulli(0.5) ? Side::Buy : Side::Sell;
      Qty qty = rng.uniform_int(1, 25);
      if (rng.uniform01() < 0.01) qty = 0;
      const auto x = ex.submit_market(agent, side, qty, time);
      const auto y = ref.submit_market(agent, side, qty, time);
      const std::string op = "market " + std::string(to_string(side)) + " " + std::to_string(qty) + " by " +
                             std::to_string(agent);
      if (x.status != y.status || x.reason != y.reason || x.canceled != y.canceled) {
        fail(step, op, "status/reason/remainder differ");
        return r;
      }
      if (auto d = diff_trades(x.trades, y.trades)) {
        fail(step, op, *d);
        return r;
      }
      tape.insert(tape.end(), x.trades.begin(), x.trades.end());
    } else if (u < 0.97) {
      OrderId id = rng.uniform_int(0, static_cast<std::int64_t>(step) + 2);
      if (!rested.empty() && rng.bernoulli(0.8)) {
        const auto& pick = rested[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(rested.size()) - 1))];
        id = pick.first;
        if (rng.bernoulli(0.9)) agent = pick.second;
      }
      const auto x = ex.cancel(agent, id);
      const auto y = ref.cancel(agent, id);
      if (x != y) {
        fail(step, "cancel " + std::to_string(id) + " by " + std::to_string(agent), "result differs");
        return r;
      }
    } else {
      const auto x = ex.cancel_all(agent);
      const auto y = ref.cancel_all(agent);
      if (x != y) {
        fail(step, "cancel_all by " + std::to_string(agent), "count differs");
        return r;
      }
    }
    if (step % 97 == 0 || step + 1 == orders) {
      if (auto d = diff_state(ex, ref)) {
        fail(step, "state", *d);
        return r;
      }
    }
  }
  if (auto d = diff_trades(tape, ref.tape())) {
    fail(orders, "tape", *d);
    return r;
  }
  r.trades = tape.size();
  return r;
}

ScenarioConfig twin_fixture_scenario(std::uint64_t seed) {
  using D = Distribution;
  auto family = [](std::string name, strategies::Archetype a, std::vector<ParamOverride> params) {
    FamilyConfig f;
    f.name = std::move(name);
    f.archetype = a;
    f.params = std::move(params);
    f.n_agents = 8;
    f.initial_cash = 20000;
    f.initial_shares = 20;
    return f;
  };
  using strategies::Archetype;
  ScenarioConfig c;
  c.families = {
      family("random", Archetype::Random,
             {{"p_buy", D::uniform(0.3, 0.7)}, {"spread", D::uniform(0.0, 0.03)}, {"qmax", D::uniform_int(1, 12)},
              {"news_sens", D::uniform(-1.0, 2.0)}, {"wake_rate", D::uniform(0.5, 2.0)}}),
      family("momentum", Archetype::Momentum,
             {{"lookback", D::uniform_int(1, 10)}, {"threshold", D::uniform(0.0, 0.005)},
              {"qty", D::uniform_int(1, 6)}}),
      family("oscillatory", Archetype::Oscillatory,
             {{"period", D::uniform_int(1000000, 20000000)}, {"qty", D::uniform_int(1, 6)}}),
      family("bollinger", Archetype::Bollinger,
             {{"window", D::uniform_int(2, 20)}, {"k", D::uniform(0.5, 2.0)}, {"qty", D::uniform_int(1, 6)}}),
      family("volume_seeker", Archetype::VolumeSeeker,
             {{"window", D::uniform_int(1, 5)}, {"multiplier", D::uniform(1.01, 1.5)},
              {"qty", D::uniform_int(1, 6)}}),
  };
  c.initial_reference_price = 1000;
  c.news_rate = 0.5;
  c.news_sigma = 0.01;
  c.run_length = {RunLength::Kind::Transactions, 3000};
  c.master_seed = seed;
  return c;
}

std::filesystem::path twin_path(const std::filesystem::path& corpus_dir, strategies::Archetype a) {
  return corpus_dir / (std::string(strategies::name(a)) + ".avt");
}

OracleSummary run_oracle_suite(const OracleOptions& options, std::ostream& out) {
  OracleSummary s;
  for (int i = 0; i < options.seeds; ++i) {
    const auto r = run_matcher_stream(static_cast<std::uint64_t>(i) + 1, options.orders);
    ++s.streams;
    s.trades += r.trades;
    if (!r.ok()) {
      ++s.stream_failures;
      out << "matcher FAIL " << *r.mismatch << "\n";
    }
  }
  out << "matcher: " << s.streams - s.stream_failures << "/" << s.streams << " streams of " << options.orders
      << " operations agree (" << s.trades << " trades)\n";

  const Fixture fx = record_fixture(twin_fixture_scenario(options.fixture_seed));
  for (const auto& family : fx.families) {
    ++s.twins;
    const auto path = twin_path(options.corpus_dir, *family.archetype);
    try {
      const auto program = dsl::compile(dsl::parse(read_text_file(path)));
      const auto report = compare_twin(fx, family, *program);
      if (report.ok()) {
        out << "twin " << family.family << ": ok (" << report.members << " members, " << report.steps << " steps, "
            << report.actions << " actions)\n";
      } else {
        ++s.twin_failures;
        out << "twin " << family.family << ": FAIL " << *report.mismatch << "\n";
      }
    } catch (const std::exception& e) {
      ++s.twin_failures;
      out << "twin " << family.family << ": FAIL " << path.string() << ": " << e.what() << "\n";
    }
  }
  return s;
}

}  // namespace avatarsim::testing
