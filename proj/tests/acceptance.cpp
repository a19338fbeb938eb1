// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--expect-fail N]...
//
// Exits 0 when every criterion passes or fails only where --expect-fail
// names it; the FAIL line is printed either way.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "avatarsim/batch.hpp"
#include "avatarsim/dsl/parser.hpp"
#include "avatarsim/service/http.hpp"
#include "avatarsim/testing/fixture.hpp"
#include "avatarsim/testing/oracle_suite.hpp"

using namespace avatarsim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kSource = AVATARSIM_SOURCE_DIR;
constexpr int kSeeds = 10;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Independent conservation check: initial endowments from the family
// layout against the final accounts.
struct Conservation {
  int runs = 0;
  int violations = 0;
  std::string first;

  void check(const std::string& label, const RunResult& r) {
    ++runs;
    Money cash0 = 0, cash1 = 0;
    Qty shares0 = 0, shares1 = 0;
    for (const auto& f : r.families) {
      cash0 += f.initial_cash * f.n_agents;
      shares0 += f.initial_shares * f.n_agents;
    }
    bool negative = false;
    for (const auto& a : r.final_accounts) {
      cash1 += a.cash;
      shares1 += a.shares;
      negative = negative || a.cash < 0 || a.shares < 0;
    }
    bool snapshots_ok = true;
    try {
      verify_snapshots(r);
    } catch (const ArchiveError&) {
      snapshots_ok = false;
    }
    if (cash0 != cash1 || shares0 != shares1 || negative || !snapshots_ok) {
      if (violations++ == 0) first = label;
    }
  }
};

Conservation g_conservation;
std::vector<RunResult> g_full_runs;

ScenarioConfig scenario(const char* name, std::uint64_t seed) {
  ScenarioConfig c = load_scenario(kSource / "scenarios" / name);
  c.master_seed = seed;
  return c;
}

Verdict criterion_full_scale() {
  const auto c = scenario("full_scale.json", 1);
  const auto t0 = std::chrono::steady_clock::now();
  RunArtifacts a = run_with_report(c);
  const double secs = seconds_since(t0);
  RunArtifacts b = run_with_report(c);
  g_conservation.check("full_scale seed 1", a.result);
  std::int64_t agents = 0;
  for (const auto& f : a.result.families) agents += f.n_agents;
  const bool identical = serialize(a.result) == serialize(b.result) && tape_csv(a.result) == tape_csv(b.result) &&
                         snapshots_csv(a.result) == snapshots_csv(b.result) && a.report_json == b.report_json;
  const bool panels = a.report.acf_raw && a.report.acf_abs && a.report.excess_kurtosis && a.report.qq &&
                      !a.report.prices.empty() && !a.report.wealth.mark.empty();
  Verdict v;
  v.pass = a.result.families.size() == 7 && agents == 7000 && a.result.tape.size() >= 350000 && secs <= 600.0 &&
           identical && panels;
  v.detail = fmt("%zu families, %lld agents, %zu transactions in %.1fs, rerun %s, panels %s", a.result.families.size(),
                 static_cast<long long>(agents), a.result.tape.size(), secs, identical ? "byte-identical" : "DIFFERS",
                 panels ? "complete" : "missing");
  g_full_runs.push_back(std::move(a.result));
  return v;
}

Verdict criterion_oracle() {
  std::ostringstream sink;
  testing::OracleOptions o;
  o.seeds = 100;
  o.orders = 10000;
  int failures = 0;
  std::size_t trades = 0;
  std::string first;
  for (int s = 1; s <= o.seeds; ++s) {
    const auto r = testing::run_matcher_stream(static_cast<std::uint64_t>(s), o.orders);
    trades += r.trades;
    if (!r.ok() && failures++ == 0) first = *r.mismatch;
  }
  Verdict v;
  v.pass = failures == 0;
  v.detail = fmt("%d/%d seeds x %d operations match the reference matcher (%zu trades)", o.seeds - failures, o.seeds,
                 o.orders, trades);
  if (!first.empty()) v.detail += "; first mismatch: " + first;
  return v;
}

struct FactsSeed {
  double raw_within = 0, abs_above = 0, kurtosis = 0, secs = 0;
};

Verdict criterion_stylized_facts() {
  std::vector<FactsSeed> rows;
  int a_ok = 0, b_ok = 0, c_ok = 0;
  double worst_secs = 0;
  std::size_t min_tx = SIZE_MAX;
  for (int s = 1; s <= kSeeds; ++s) {
    const auto c = scenario("stylized_facts.json", static_cast<std::uint64_t>(s));
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run(c);
    const auto rep = analytics::build_report(r, 20);
    FactsSeed row;
    row.secs = seconds_since(t0);
    g_conservation.check("stylized_facts seed " + std::to_string(s), r);
    min_tx = std::min(min_tx, r.tape.size());
    if (rep.acf_raw && rep.acf_abs && rep.excess_kurtosis) {
      row.raw_within = analytics::fraction_within(*rep.acf_raw, *rep.noise_band, 20);
      row.abs_above = analytics::fraction_above(*rep.acf_abs, *rep.noise_band, 20);
      row.kurtosis = *rep.excess_kurtosis;
    }
    a_ok += row.raw_within >= 0.8;
    b_ok += row.abs_above >= 0.5;
    c_ok += row.kurtosis > 1.0;
    worst_secs = std::max(worst_secs, row.secs);
    rows.push_back(row);
  }
  Verdict v;
  v.pass = a_ok >= 8 && b_ok >= 8 && c_ok >= 8 && worst_secs <= 120.0 && min_tx >= 100000;
  v.detail = fmt("(a) raw ACF in band for >=80%% of lags: %d/10; (b) |r| ACF above band for >=50%% of lags: %d/10; "
                 "(c) excess kurtosis > 1: %d/10; slowest seed %.1fs",
                 a_ok, b_ok, c_ok, worst_secs);
  std::string per;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    per += fmt("\n    seed %zu: raw in band %.2f, |r| above band %.2f, kurtosis %.1f", i + 1, rows[i].raw_within,
               rows[i].abs_above, rows[i].kurtosis);
  }
  v.detail += per;
  return v;
}

double stdev(const std::vector<Price>& p, std::size_t lo, std::size_t hi) {
  double m = 0;
  for (std::size_t i = lo; i < hi; ++i) m += static_cast<double>(p[i]);
  m /= static_cast<double>(hi - lo);
  double ss = 0;
  for (std::size_t i = lo; i < hi; ++i) ss += (static_cast<double>(p[i]) - m) * (static_cast<double>(p[i]) - m);
  return std::sqrt(ss / static_cast<double>(hi - lo));
}

Verdict criterion_steady_state() {
  int vol_ok = 0, sd_ok = 0;
  std::string per;
  for (int s = 1; s <= kSeeds; ++s) {
    const auto r = run(scenario("steady_state.json", static_cast<std::uint64_t>(s)));
    g_conservation.check("steady_state seed " + std::to_string(s), r);
    const auto p = r.prices();
    const std::size_t n = p.size(), d = n / 10;
    Qty early = 0, late = 0;
    for (std::size_t i = 0; i < d; ++i) early += r.tape[i].qty;
    for (std::size_t i = n - d; i < n; ++i) late += r.tape[i].qty;
    const double sd1 = stdev(p, 0, n / 2), sd2 = stdev(p, n / 2, n);
    vol_ok += early > late;
    sd_ok += sd2 < sd1;
    per += fmt("\n    seed %d: volume first/last 10%% %lld/%lld, price sd halves %.1f/%.1f", s,
               static_cast<long long>(early), static_cast<long long>(late), sd1, sd2);
  }
  Verdict v;
  v.pass = vol_ok >= 8 && sd_ok >= 8;
  v.detail = fmt("early volume > late volume: %d/10; second-half price sd < first-half: %d/10", vol_ok, sd_ok) + per;
  return v;
}

Verdict criterion_conservation() {
  // Closed mixed markets with script families, across many seeds, on top of
  // every run made for the other criteria.
  for (int s = 1; s <= 20; ++s) {
    g_conservation.check("twin fixture seed " + std::to_string(s),
                         run(testing::twin_fixture_scenario(static_cast<std::uint64_t>(s))));
  }
  Verdict v;
  v.pass = g_conservation.violations == 0 && g_conservation.runs > 0;
  v.detail = fmt("%d/%d runs conserve total cash and shares exactly with non-negative holdings and tape-consistent "
                 "snapshots",
                 g_conservation.runs - g_conservation.violations, g_conservation.runs);
  if (!g_conservation.first.empty()) v.detail += "; first violation: " + g_conservation.first;
  return v;
}

Verdict criterion_twins() {
  int checked = 0, failed = 0;
  std::size_t actions = 0;
  std::string first;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto fx = testing::record_fixture(testing::twin_fixture_scenario(seed));
    for (const auto& family : fx.families) {
      ++checked;
      const auto program =
          dsl::compile(dsl::parse(read_text_file(testing::twin_path(kSource / "corpus/archetypes", *family.archetype))));
      const auto rep = testing::compare_twin(fx, family, *program);
      actions += rep.actions;
      if (!rep.ok() && failed++ == 0) first = family.family + ": " + *rep.mismatch;
    }
  }
  Verdict v;
  v.pass = failed == 0 && checked == 15;
  v.detail = fmt("%d/%d archetype fixtures (5 archetypes x 3 seeds) identical, %zu actions compared", checked - failed,
                 checked, actions);
  if (!first.empty()) v.detail += "; first mismatch: " + first;
  return v;
}

Verdict criterion_analytics() {
  std::vector<std::string> broken;
  double worst_rel = 0.0, worst_tel = 0.0, worst_kurt = 0.0;
  for (const auto& r : g_full_runs) {
    const auto rep = analytics::build_report(r);
    for (std::size_t s = 0; s < rep.wealth.mark.size(); ++s) {
      double sum = 0;
      for (const auto& fam : rep.wealth.relative) sum += fam[s];
      worst_rel = std::max(worst_rel, std::fabs(sum - 1.0));
    }
    if (!rep.acf_raw || (*rep.acf_raw)[0] != 1.0 || !rep.acf_abs || (*rep.acf_abs)[0] != 1.0) {
      broken.push_back("ACF(0)");
    }
    const auto prices = r.prices();
    const auto ret = analytics::log_returns(prices);
    double sum = 0;
    for (double x : ret) sum += x;
    const double expect = std::log(static_cast<double>(prices.back()) / static_cast<double>(prices.front()));
    worst_tel = std::max(worst_tel, std::fabs(sum - expect) / std::max(1.0, std::fabs(expect)));
  }
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    std::vector<double> g(100000);
    for (auto& x : g) x = rng.standard_normal();
    worst_kurt = std::max(worst_kurt, std::fabs(analytics::excess_kurtosis(g)));
  }
  if (worst_rel > 1e-12) broken.push_back("relative wealth sum");
  if (worst_tel > 1e-9) broken.push_back("telescoping");
  if (worst_kurt > 0.1) broken.push_back("Gaussian kurtosis");
  Verdict v;
  v.pass = broken.empty() && !g_full_runs.empty();
  v.detail = fmt("max |sum relative wealth - 1| %.1e, ACF(0) = 1, telescoping error %.1e, max |Gaussian excess "
                 "kurtosis| over 20 samples of 1e5 %.3f",
                 worst_rel, worst_tel, worst_kurt);
  for (const auto& b : broken) v.detail += "; broken: " + b;
  return v;
}

Verdict criterion_service() {
  const fs::path dir = fs::temp_directory_path() / "avatarsim-acceptance-service";
  fs::remove_all(dir);
  Verdict v;
  {
    service::ServiceOptions o;
    o.data_dir = dir;
    service::Service svc(o);
    service::HttpServer server(svc, "127.0.0.1", 0);
    httplib::Client client("127.0.0.1", server.port());
    auto post = [&](const std::string& path, const json& body, const std::string& token = "") {
      httplib::Headers h;
      if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
      auto r = client.Post(path, h, body.dump(), "application/json");
      return r ? std::make_pair(r->status, json::parse(r->body)) : std::make_pair(0, json());
    };
    auto get = [&](const std::string& path) {
      auto r = client.Get(path);
      return r ? std::make_pair(r->status, json::parse(r->body)) : std::make_pair(0, json());
    };
    const json house = json::parse(read_text_file(kSource / "scenarios/stylized_facts.json"))["families"][0];
    auto [st, session] = post("/sessions", {{"title", "acceptance"},
                                            {"scenario",
                                             {{"families", json::array({house})},
                                              {"news_rate", 0.2},
                                              {"news_sigma", 0.002},
                                              {"run_length", {{"transactions", 20000}}}}},
                                            {"agents_per_participant", 50}});
    const std::string sid = session.value("session_id", "");
    std::vector<std::pair<std::string, std::string>> people;
    for (const char* who : {"alice", "bob"}) {
      auto [s2, p] = post("/sessions/" + sid + "/participants", {{"name", who}});
      people.emplace_back(p.value("participant_id", ""), p.value("token", ""));
    }
    const char* sources[] = {"momentum.avt", "bollinger.avt"};
    bool submitted = true;
    for (std::size_t i = 0; i < people.size(); ++i) {
      auto [s3, r] = post("/sessions/" + sid + "/avatars",
                          {{"participant_id", people[i].first},
                           {"source", read_text_file(kSource / "corpus/archetypes" / sources[i])}},
                          people[i].second);
      submitted = submitted && s3 == 201 && r.value("valid", false);
    }
    auto [s4, started] = post("/sessions/" + sid + "/runs", json::object());
    const std::string rid = started.value("run_id", "");
    json record;
    for (int i = 0; i < 1200; ++i) {
      record = get("/runs/" + rid).second;
      if (record.value("status", "") == "Done" || record.value("status", "") == "Failed") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    const auto board = get("/runs/" + rid + "/leaderboard");
    bool board_ok = false, tape_ok = false;
    std::string status = record.value("status", "?");
    if (status == "Done" && board.first == 200) {
      const fs::path archive = record["archive"].get<std::string>();
      const auto archived = read_archive(archive);
      board_ok = board.second == json::parse(leaderboard_json(analytics::leaderboard(archived)));
      ScenarioConfig snapshot = scenario_from_json(record["scenario"]);
      snapshot.master_seed = record["seed"].get<std::uint64_t>();
      tape_ok = tape_csv(run(snapshot)) == read_text_file(archive / "tape.csv");
    }
    v.pass = st == 201 && submitted && s4 == 202 && status == "Done" && board_ok && tape_ok &&
             board.second.size() == 3;
    v.detail = fmt("session %s, 2 participants, run %s %s; leaderboard %s archive recomputation; replayed tape %s",
                   sid.c_str(), rid.c_str(), status.c_str(), board_ok ? "equals" : "DIFFERS from",
                   tape_ok ? "byte-identical" : "DIFFERS");
  }
  fs::remove_all(dir);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_fail;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) expect_fail.insert(std::atoi(argv[++i]));
  }
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> check;
    Verdict verdict;
  };
  // Conservation runs last so it covers the runs made by the others.
  std::vector<Criterion> all = {
      {1, "full-scale run", criterion_full_scale, {}},
      {3, "matching oracle", criterion_oracle, {}},
      {4, "stylized facts", criterion_stylized_facts, {}},
      {5, "steady state", criterion_steady_state, {}},
      {6, "DSL equivalence", criterion_twins, {}},
      {7, "analytics identities", criterion_analytics, {}},
      {8, "service round trip", criterion_service, {}},
      {2, "conservation", criterion_conservation, {}},
  };
  for (auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.verdict = c.check();
    } catch (const std::exception& e) {
      c.verdict = {false, std::string("exception: ") + e.what()};
    }
    std::fprintf(stderr, "criterion %d evaluated in %.1fs\n", c.id, seconds_since(t0));
  }
  std::sort(all.begin(), all.end(), [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
  int unexpected = 0;
  for (const auto& c : all) {
    const bool expected_red = expect_fail.contains(c.id);
    std::printf("criterion %d %s: %s  %s%s\n", c.id, c.name, c.verdict.pass ? "PASS" : "FAIL", c.verdict.detail.c_str(),
                !c.verdict.pass && expected_red ? "\n    (known failure, see README)" : "");
    if (!c.verdict.pass && !expected_red) ++unexpected;
  }
  std::fflush(stdout);
  return unexpected == 0 ? 0 : 1;
}
