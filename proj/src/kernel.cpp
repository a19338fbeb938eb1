#include "avatarsim/kernel.hpp"

#include <cmath>
#include <queue>

#include "avatarsim/dsl/interpreter.hpp"
#include "avatarsim/dsl/parser.hpp"

namespace avatarsim {

std::uint64_t family_seed(std::uint64_t master_seed, std::string_view family_name) {
  return derive_seed(master_seed, fnv1a(family_name));
}

// Family names are non-empty, so the empty-string key is free for the kernel.
std::uint64_t news_seed(std::uint64_t master_seed) { return derive_seed(derive_seed(master_seed, fnv1a("")), 1); }

SimTime wake_delay(double rate, Rng& clock) {
  const double units = clock.exponential(rate);
  const double micro = std::floor(units * static_cast<double>(kMicroticksPerUnit));
  if (!(micro < 1e15)) return static_cast<SimTime>(1e15);
  return std::max<SimTime>(1, static_cast<SimTime>(micro));
}

std::string_view to_string(AgentEvent e) noexcept {
  switch (e) {
    case AgentEvent::Wake: return "wake";
    case AgentEvent::News: return "news";
    case AgentEvent::Message: return "message";
    case AgentEvent::Fill: return "fill";
  }
  return "?";
}

std::vector<PreparedFamily> prepare_families(const ScenarioConfig& config) {
  validate(config);
  const auto layout = family_layout(config);
  std::vector<PreparedFamily> out;
  for (std::size_t i = 0; i < config.families.size(); ++i) {
    const FamilyConfig& f = config.families[i];
    PreparedFamily p;
    p.info = layout[i];
    p.seed = family_seed(config.master_seed, f.name);
    if (f.archetype) {
      p.archetype = f.archetype;
      p.params = resolve_params(f, i, strategies::param_schema(*f.archetype));
    } else {
      try {
        dsl::AvatarSpec spec = dsl::parse(*f.avatar_source);
        spec.params = resolve_params(f, i, spec.params);
        spec.param_pos.resize(spec.params.size());
        p.params = spec.params;
        p.program = dsl::compile(spec);
      } catch (const dsl::AvatarError& e) {
        throw FamilyAvatarError(i, f.name, e);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::unique_ptr<Agent>> instantiate(const PreparedFamily& family, std::size_t family_index) {
  const std::string where = "families[" + std::to_string(family_index) + "]";
  std::vector<std::unique_ptr<Agent>> out;
  out.reserve(static_cast<std::size_t>(family.info.n_agents));
  try {
    auto values = sample_family(family.params, family.info.n_agents, family.seed);
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (family.archetype) {
        out.push_back(strategies::make_agent(*family.archetype, values[k]));
      } else {
        out.push_back(std::make_unique<dsl::ScriptAgent>(
            family.program, dsl::make_instance(*family.program, std::move(values[k]), static_cast<std::int64_t>(k))));
      }
    }
  } catch (const std::invalid_argument& e) {  // includes DistributionError
    throw ConfigError(where, e.what());
  }
  return out;
}

namespace {

enum class EventType : std::uint8_t { EndOfRun, Wake, News, Message, Fill };

struct Event {
  SimTime time = 0;
  std::int64_t seq = 0;
  EventType type = EventType::Wake;
  AgentId agent = 0;
  double value = 0.0;
  Qty qty = 0;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

class Kernel {
 public:
  Kernel(const ScenarioConfig& config, const RunOptions& options) : config_(config), options_(options) {}

  RunResult run() {
    auto families = prepare_families(config_);
    result_.config = config_;
    for (std::size_t i = 0; i < families.size(); ++i) {
      result_.families.push_back(families[i].info);
      auto agents = instantiate(families[i], i);
      for (std::size_t k = 0; k < agents.size(); ++k) {
        const auto id = exchange_.add_account(families[i].info.initial_cash, families[i].info.initial_shares);
        agent_family_.push_back(families[i].info.id);
        clock_.emplace_back(clock_stream_seed(families[i].seed, static_cast<std::int64_t>(k)));
        decision_.emplace_back(decision_stream_seed(families[i].seed, static_cast<std::int64_t>(k)));
        (void)id;
      }
      for (auto& a : agents) agents_.push_back(std::move(a));
    }
    const std::size_t n = agents_.size();
    shadow_cash_.resize(n);
    shadow_shares_.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      const Account& acc = exchange_.accounts()[static_cast<AgentId>(a)];
      shadow_cash_[a] = acc.cash;
      shadow_shares_[a] = acc.shares;
    }
    const Money cash0 = exchange_.accounts().total_cash();
    const Qty shares0 = exchange_.accounts().total_shares();

    const bool by_transactions = config_.run_length.kind == RunLength::Kind::Transactions;
    const SimTime end_time = by_transactions ? config_.max_sim_time : config_.run_length.value;
    push({end_time, 0, EventType::EndOfRun});
    news_rng_ = Rng(news_seed(config_.master_seed));
    if (config_.news_rate > 0.0) push({wake_delay(config_.news_rate, news_rng_), 0, EventType::News});
    for (std::size_t a = 0; a < n; ++a) {
      push({wake_delay(agents_[a]->wake_rate(), clock_[a]), 0, EventType::Wake, static_cast<AgentId>(a)});
    }
    take_snapshot(0);

    while (!queue_.empty()) {
      const Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      if (ev.type == EventType::EndOfRun) {
        result_.stats.end_reason = by_transactions ? "max_sim_time" : "sim_time";
        break;
      }
      ++result_.stats.events;
      process(ev);
      if (by_transactions && static_cast<std::int64_t>(result_.tape.size()) >= config_.run_length.value) {
        result_.stats.end_reason = "transactions";
        break;
      }
    }
    result_.stats.end_time = now_;

    if (result_.snapshots.back().trade_count != static_cast<std::int64_t>(result_.tape.size())) {
      take_snapshot(now_);
    }
    const auto& accounts = exchange_.accounts();
    if (accounts.total_cash() != cash0 || accounts.total_shares() != shares0) {
      throw EngineError("conservation violated: cash " + std::to_string(cash0) + " -> " +
                        std::to_string(accounts.total_cash()) + ", shares " + std::to_string(shares0) + " -> " +
                        std::to_string(accounts.total_shares()));
    }
    for (std::size_t a = 0; a < n; ++a) {
      const Account& acc = accounts[static_cast<AgentId>(a)];
      if (acc.cash != shadow_cash_[a] || acc.shares != shadow_shares_[a]) {
        throw EngineError("agent " + std::to_string(a) + " holdings diverge from the tape replay");
      }
      result_.final_accounts.push_back(acc);
    }
    return std::move(result_);
  }

 private:
  void push(Event e) {
    e.seq = next_seq_++;
    queue_.push(e);
  }

  MarketView view_for(AgentId a) const {
    const Account& acc = exchange_.accounts()[a];
    MarketView v;
    v.history = &history_;
    v.visible_trades = history_.size();
    v.best_bid = exchange_.book().best_bid();
    v.best_ask = exchange_.book().best_ask();
    v.time = now_;
    v.initial_price = config_.initial_reference_price;
    v.agent_count = static_cast<std::int64_t>(agents_.size());
    v.self = a;
    v.family = agent_family_[static_cast<std::size_t>(a)];
    v.cash = acc.cash;
    v.shares = acc.shares;
    v.available_cash = acc.available_cash();
    v.available_shares = acc.available_shares();
    return v;
  }

  void process(const Event& ev) {
    switch (ev.type) {
      case EventType::Wake: {
        const auto a = static_cast<std::size_t>(ev.agent);
        ++result_.stats.wakes;
        if (config_.orders_good_till_wake) exchange_.cancel_all(ev.agent);
        deliver(ev.agent, AgentEvent::Wake, 0.0, 0);
        push({now_ + wake_delay(agents_[a]->wake_rate(), clock_[a]), 0, EventType::Wake, ev.agent});
        break;
      }
      case EventType::News: {
        ++result_.stats.news_events;
        const double value = news_rng_.normal(0.0, config_.news_sigma);
        for (std::size_t a = 0; a < agents_.size(); ++a) deliver(static_cast<AgentId>(a), AgentEvent::News, value, 0);
        push({now_ + wake_delay(config_.news_rate, news_rng_), 0, EventType::News});
        break;
      }
      case EventType::Message:
        ++result_.stats.messages_delivered;
        deliver(ev.agent, AgentEvent::Message, ev.value, 0);
        break;
      case EventType::Fill:
        ++result_.stats.fills_delivered;
        deliver(ev.agent, AgentEvent::Fill, 0.0, ev.qty);
        break;
      case EventType::EndOfRun:
        break;
    }
  }

  void deliver(AgentId a, AgentEvent kind, double value, Qty qty) {
    Agent& agent = *agents_[static_cast<std::size_t>(a)];
    Rng& rng = decision_[static_cast<std::size_t>(a)];
    const MarketView view = view_for(a);
    HandlerResult r;
    switch (kind) {
      case AgentEvent::Wake: r = agent.on_wake(view, rng); break;
      case AgentEvent::News: r = agent.on_news(value, view, rng); break;
      case AgentEvent::Message: r = agent.on_message(value, view, rng); break;
      case AgentEvent::Fill: r = agent.on_fill(qty, view, rng); break;
    }
    if (options_.observer) options_.observer(DispatchRecord{a, kind, value, qty, view, r});
    if (r.error) {
      ++result_.stats.handler_errors;
      if (result_.diagnostics.size() < options_.max_diagnostics) {
        result_.diagnostics.push_back(std::to_string(now_) + " agent " + std::to_string(a) + " " +
                                      std::string(to_string(kind)) + ": " + *r.error);
      }
      return;
    }
    for (const Action& action : r.actions) apply(a, action);
  }

  void apply(AgentId a, const Action& action) {
    if (const auto* lim = std::get_if<SubmitLimit>(&action)) {
      if (lim->qty < 1) {
        ++result_.stats.actions_dropped;
        return;
      }
      ++result_.stats.orders_submitted;
      auto res = exchange_.submit_limit(a, lim->side, lim->price, lim->qty, now_);
      if (res.status == LimitResult::Status::Rejected) ++result_.stats.orders_rejected;
      record(res.trades);
    } else if (const auto* mkt = std::get_if<SubmitMarket>(&action)) {
      if (mkt->qty < 1) {
        ++result_.stats.actions_dropped;
        return;
      }
      ++result_.stats.orders_submitted;
      auto res = exchange_.submit_market(a, mkt->side, mkt->qty, now_);
      if (res.status == MarketResult::Status::Rejected) ++result_.stats.orders_rejected;
      record(res.trades);
    } else if (std::holds_alternative<CancelAll>(action)) {
      exchange_.cancel_all(a);
    } else if (const auto* msg = std::get_if<SendMessage>(&action)) {
      if (msg->to < 0 || msg->to >= static_cast<std::int64_t>(agents_.size())) {
        ++result_.stats.messages_dropped;
        return;
      }
      push({now_ + config_.message_latency, 0, EventType::Message, static_cast<AgentId>(msg->to), msg->value});
    }
  }

  void record(const std::vector<Trade>& trades) {
    for (const Trade& t : trades) {
      result_.tape.push_back(t);
      history_.append(t.price, t.qty);
      const Money value = t.price * t.qty;
      shadow_cash_[static_cast<std::size_t>(t.buy_agent)] -= value;
      shadow_shares_[static_cast<std::size_t>(t.buy_agent)] += t.qty;
      shadow_cash_[static_cast<std::size_t>(t.sell_agent)] += value;
      shadow_shares_[static_cast<std::size_t>(t.sell_agent)] -= t.qty;
      if (static_cast<std::int64_t>(result_.tape.size()) % config_.snapshot_interval == 0) take_snapshot(t.time);
      if (agents_[static_cast<std::size_t>(t.buy_agent)]->handles_fills()) {
        push({now_, 0, EventType::Fill, t.buy_agent, 0.0, t.qty});
      }
      if (agents_[static_cast<std::size_t>(t.sell_agent)]->handles_fills()) {
        push({now_, 0, EventType::Fill, t.sell_agent, 0.0, -t.qty});
      }
    }
  }

  void take_snapshot(SimTime time) {
    Snapshot s;
    s.index = static_cast<std::int64_t>(result_.snapshots.size());
    s.trade_count = static_cast<std::int64_t>(result_.tape.size());
    s.time = time;
    s.cash = shadow_cash_;
    s.shares = shadow_shares_;
    result_.snapshots.push_back(std::move(s));
  }

  const ScenarioConfig& config_;
  const RunOptions& options_;
  RunResult result_;
  Exchange exchange_;
  MarketHistory history_;
  std::vector<std::unique_ptr<Agent>> agents_;
  std::vector<FamilyId> agent_family_;
  std::vector<Rng> clock_;
  std::vector<Rng> decision_;
  Rng news_rng_;
  std::vector<Money> shadow_cash_;
  std::vector<Qty> shadow_shares_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::int64_t next_seq_ = 0;
  SimTime now_ = 0;
};

}  // namespace

RunResult run(const ScenarioConfig& config, const RunOptions& options) {
  Kernel kernel(config, options);
  return kernel.run();
}

}  // namespace avatarsim
