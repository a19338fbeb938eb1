#include "avatarsim/testing/fixture.hpp"

#include <sstream>

#include "avatarsim/dsl/interpreter.hpp"

namespace avatarsim::testing {

std::size_t Fixture::step_count() const {
  std::size_t n = 0;
  for (const auto& f : families) {
    for (const auto& m : f.members) n += m.steps.size();
  }
  return n;
}

Fixture record_fixture(const ScenarioConfig& config) {
  Fixture fx;
  const auto prepared = prepare_families(config);
  std::vector<std::pair<std::size_t, std::size_t>> where;  // agent -> (family, member)
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const auto& p = prepared[i];
    FamilyFixture fam;
    fam.family = p.info.name;
    fam.archetype = p.archetype;
    auto values = sample_family(p.params, p.info.n_agents, p.seed);
    for (std::int64_t k = 0; k < p.info.n_agents; ++k) {
      MemberFixture m;
      m.member = k;
      m.agent = static_cast<AgentId>(p.info.first_agent + k);
      m.params = std::move(values[static_cast<std::size_t>(k)]);
      m.decision_seed = decision_stream_seed(p.seed, k);
      fam.members.push_back(std::move(m));
      where.emplace_back(i, static_cast<std::size_t>(k));
    }
    fx.families.push_back(std::move(fam));
  }

  RunOptions options;
  options.observer = [&](const DispatchRecord& r) {
    const auto [f, k] = where[static_cast<std::size_t>(r.agent)];
    FixtureStep s;
    s.event = r.event;
    s.value = r.value;
    s.fill_qty = r.fill_qty;
    s.view = r.view;
    s.view.history = nullptr;
    s.actions = r.result.actions;
    s.failed = r.result.error.has_value();
    fx.families[f].members[k].steps.push_back(std::move(s));
  };
  const RunResult result = run(config, options);
  for (const auto& t : result.tape) fx.history.append(t.price, t.qty);
  return fx;
}

std::vector<HandlerResult> replay(const Fixture& fixture, const MemberFixture& member, Agent& agent) {
  Rng rng(member.decision_seed);
  std::vector<HandlerResult> out;
  out.reserve(member.steps.size());
  for (const auto& s : member.steps) {
    MarketView view = s.view;
    view.history = &fixture.history;
    switch (s.event) {
      case AgentEvent::Wake: out.push_back(agent.on_wake(view, rng)); break;
      case AgentEvent::News: out.push_back(agent.on_news(s.value, view, rng)); break;
      case AgentEvent::Message: out.push_back(agent.on_message(s.value, view, rng)); break;
      case AgentEvent::Fill: out.push_back(agent.on_fill(s.fill_qty, view, rng)); break;
    }
  }
  return out;
}

namespace {

std::string describe(const std::vector<Action>& actions) {
  std::string s = "[";
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i > 0) s += ", ";
    s += to_string(actions[i]);
  }
  return s + "]";
}

}  // namespace

TwinReport compare_twin(const Fixture& fixture, const FamilyFixture& family, const dsl::Program& twin) {
  TwinReport report;
  if (!family.archetype) {
    report.mismatch = "family '" + family.family + "' is not an archetype family";
    return report;
  }
  auto program = std::make_shared<const dsl::Program>(twin);
  for (const auto& m : family.members) {
    ++report.members;
    auto native = strategies::make_agent(*family.archetype, m.params);
    dsl::ScriptAgent script(program, dsl::make_instance(*program, m.params, m.member));
    const auto a = replay(fixture, m, *native);
    const auto b = replay(fixture, m, script);
    for (std::size_t i = 0; i < m.steps.size(); ++i) {
      ++report.steps;
      report.actions += m.steps[i].actions.size();
      const auto& rec = m.steps[i];
      auto fail = [&](const std::string& what) {
        std::ostringstream os;
        os << family.family << " member " << m.member << " step " << i << " (" << to_string(rec.event)
           << " at t=" << rec.view.time << "): " << what;
        report.mismatch = os.str();
      };
      if (b[i].error) {
        fail("twin handler error: " + *b[i].error);
        return report;
      }
      if (a[i].actions != rec.actions) {
        fail("native replay " + describe(a[i].actions) + " differs from recording " + describe(rec.actions));
        return report;
      }
      if (b[i].actions != a[i].actions) {
        fail("twin " + describe(b[i].actions) + " differs from native " + describe(a[i].actions));
        return report;
      }
    }
  }
  return report;
}

}  // namespace avatarsim::testing
