#include "avatarsim/run_result.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace avatarsim {

using nlohmann::json;

std::vector<FamilyInfo> family_layout(const ScenarioConfig& config) {
  std::vector<FamilyInfo> out;
  AgentId next = 0;
  for (std::size_t i = 0; i < config.families.size(); ++i) {
    const auto& f = config.families[i];
    FamilyInfo info;
    info.id = static_cast<FamilyId>(i);
    info.name = f.name;
    info.kind = f.archetype ? std::string(strategies::name(*f.archetype)) : "avatar";
    info.first_agent = next;
    info.n_agents = f.n_agents;
    info.initial_cash = f.initial_cash;
    info.initial_shares = f.initial_shares;
    next += static_cast<AgentId>(f.n_agents);
    out.push_back(std::move(info));
  }
  return out;
}

std::int64_t RunResult::agent_count() const {
  if (families.empty()) return 0;
  return families.back().first_agent + families.back().n_agents;
}

FamilyId RunResult::family_of(AgentId agent) const {
  for (const auto& f : families) {
    if (agent >= f.first_agent && agent < f.first_agent + f.n_agents) return f.id;
  }
  return -1;
}

std::vector<Price> RunResult::prices() const {
  std::vector<Price> out;
  out.reserve(tape.size());
  for (const auto& t : tape) out.push_back(t.price);
  return out;
}

std::vector<Qty> RunResult::volumes() const {
  std::vector<Qty> out;
  out.reserve(tape.size());
  for (const auto& t : tape) out.push_back(t.qty);
  return out;
}

namespace {

void put(std::string& s, std::int64_t v) {
  char buf[24];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  s.append(buf, end);
}

template <typename... Ts>
void row(std::string& s, Ts... vs) {
  bool first = true;
  ((first ? void() : s.push_back(','), first = false, put(s, static_cast<std::int64_t>(vs))), ...);
}

// Splits a CSV line of integers (plus an optional trailing word field).
std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::int64_t to_int(std::string_view s, const std::string& where) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ArchiveError(where + ": expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> lines_of(const std::string& text, std::string_view header, const std::string& file) {
  std::vector<std::string_view> lines;
  std::string_view rest = text;
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    if (nl == std::string_view::npos) throw ArchiveError(file + ": missing final newline");
    lines.push_back(rest.substr(0, nl));
    rest.remove_prefix(nl + 1);
  }
  if (lines.empty() || lines.front() != header) throw ArchiveError(file + ": bad header");
  return lines;
}

json stats_to_json(const RunStats& s) {
  return json{{"events", s.events},
              {"wakes", s.wakes},
              {"news_events", s.news_events},
              {"messages_delivered", s.messages_delivered},
              {"messages_dropped", s.messages_dropped},
              {"fills_delivered", s.fills_delivered},
              {"orders_submitted", s.orders_submitted},
              {"orders_rejected", s.orders_rejected},
              {"actions_dropped", s.actions_dropped},
              {"handler_errors", s.handler_errors},
              {"end_time", s.end_time},
              {"end_reason", s.end_reason}};
}

RunStats stats_from_json(const json& j) {
  RunStats s;
  try {
    s.events = j.at("events").get<std::int64_t>();
    s.wakes = j.at("wakes").get<std::int64_t>();
    s.news_events = j.at("news_events").get<std::int64_t>();
    s.messages_delivered = j.at("messages_delivered").get<std::int64_t>();
    s.messages_dropped = j.at("messages_dropped").get<std::int64_t>();
    s.fills_delivered = j.at("fills_delivered").get<std::int64_t>();
    s.orders_submitted = j.at("orders_submitted").get<std::int64_t>();
    s.orders_rejected = j.at("orders_rejected").get<std::int64_t>();
    s.actions_dropped = j.at("actions_dropped").get<std::int64_t>();
    s.handler_errors = j.at("handler_errors").get<std::int64_t>();
    s.end_time = j.at("end_time").get<std::int64_t>();
    s.end_reason = j.at("end_reason").get<std::string>();
  } catch (const json::exception& e) {
    throw ArchiveError(std::string("config.json: bad run_info.stats: ") + e.what());
  }
  return s;
}

}  // namespace

std::string tape_csv(const RunResult& r) {
  std::string s;
  s.reserve(48 * (r.tape.size() + 1));
  s.append(kTapeHeader);
  s.push_back('\n');
  for (const auto& t : r.tape) {
    row(s, t.id, t.time, t.price, t.qty, t.buy_agent, t.sell_agent);
    s.push_back(',');
    s.append(to_string(t.aggressor));
    s.push_back('\n');
  }
  return s;
}

std::string snapshots_csv(const RunResult& r) {
  std::string s;
  const std::size_t n = static_cast<std::size_t>(r.agent_count());
  s.reserve(40 * (r.snapshots.size() * n + 1));
  s.append(kSnapshotsHeader);
  s.push_back('\n');
  std::vector<FamilyId> family(n);
  for (const auto& f : r.families) {
    for (std::int64_t k = 0; k < f.n_agents; ++k) family[static_cast<std::size_t>(f.first_agent + k)] = f.id;
  }
  for (const auto& snap : r.snapshots) {
    for (std::size_t a = 0; a < n; ++a) {
      row(s, snap.index, snap.trade_count, snap.time, a, family[a], snap.cash[a], snap.shares[a]);
      s.push_back('\n');
    }
  }
  return s;
}

std::string config_json(const RunResult& r) {
  json j = scenario_to_json(r.config);
  json families = json::array();
  for (const auto& f : r.families) {
    families.push_back({{"id", f.id},
                        {"name", f.name},
                        {"kind", f.kind},
                        {"first_agent", f.first_agent},
                        {"n_agents", f.n_agents}});
  }
  j["run_info"] = {{"transactions", r.tape.size()},
                   {"snapshots", r.snapshots.size()},
                   {"families", families},
                   {"stats", stats_to_json(r.stats)}};
  return j.dump(2) + "\n";
}

std::string serialize(const RunResult& r) {
  std::string s = config_json(r);
  s += tape_csv(r);
  s += snapshots_csv(r);
  for (const auto& a : r.final_accounts) {
    row(s, a.agent, a.cash, a.shares, a.reserved_cash, a.reserved_shares);
    s.push_back('\n');
  }
  for (const auto& d : r.diagnostics) {
    s += d;
    s.push_back('\n');
  }
  return s;
}

void verify_snapshots(const RunResult& r) {
  const std::size_t n = static_cast<std::size_t>(r.agent_count());
  std::vector<Money> cash(n);
  std::vector<Qty> shares(n);
  for (const auto& f : r.families) {
    for (std::int64_t k = 0; k < f.n_agents; ++k) {
      cash[static_cast<std::size_t>(f.first_agent + k)] = f.initial_cash;
      shares[static_cast<std::size_t>(f.first_agent + k)] = f.initial_shares;
    }
  }
  std::size_t applied = 0;
  for (const auto& snap : r.snapshots) {
    if (snap.trade_count < static_cast<std::int64_t>(applied) ||
        snap.trade_count > static_cast<std::int64_t>(r.tape.size())) {
      throw ArchiveError("snapshot " + std::to_string(snap.index) + ": trade_count out of order");
    }
    if (snap.cash.size() != n || snap.shares.size() != n) {
      throw ArchiveError("snapshot " + std::to_string(snap.index) + ": wrong number of agents");
    }
    for (; applied < static_cast<std::size_t>(snap.trade_count); ++applied) {
      const Trade& t = r.tape[applied];
      if (t.buy_agent < 0 || static_cast<std::size_t>(t.buy_agent) >= n || t.sell_agent < 0 ||
          static_cast<std::size_t>(t.sell_agent) >= n) {
        throw ArchiveError("trade " + std::to_string(t.id) + ": unknown agent");
      }
      const Money value = t.price * t.qty;
      cash[static_cast<std::size_t>(t.buy_agent)] -= value;
      shares[static_cast<std::size_t>(t.buy_agent)] += t.qty;
      cash[static_cast<std::size_t>(t.sell_agent)] += value;
      shares[static_cast<std::size_t>(t.sell_agent)] -= t.qty;
    }
    for (std::size_t a = 0; a < n; ++a) {
      if (snap.cash[a] != cash[a] || snap.shares[a] != shares[a]) {
        throw ArchiveError("snapshot " + std::to_string(snap.index) + ": agent " + std::to_string(a) +
                           " holdings do not match the tape replay");
      }
    }
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ArchiveError("write failed: " + path.string());
}

void write_archive(const std::filesystem::path& dir, const RunResult& r, const std::string& report_json) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ArchiveError("cannot create " + dir.string() + ": " + ec.message());
  write_text_file(dir / "tape.csv", tape_csv(r));
  write_text_file(dir / "snapshots.csv", snapshots_csv(r));
  write_text_file(dir / "config.json", config_json(r));
  write_text_file(dir / "report.json", report_json);
}

RunResult read_archive(const std::filesystem::path& dir) {
  for (const char* f : {"tape.csv", "snapshots.csv", "config.json"}) {
    if (!std::filesystem::exists(dir / f)) throw ArchiveError(std::string("archive is missing ") + f);
  }
  RunResult r;
  json cj;
  try {
    cj = json::parse(read_text_file(dir / "config.json"));
  } catch (const json::parse_error& e) {
    throw ArchiveError(std::string("config.json: ") + e.what());
  }
  r.config = scenario_from_json(cj);
  r.families = family_layout(r.config);
  if (cj.contains("run_info") && cj["run_info"].contains("stats")) r.stats = stats_from_json(cj["run_info"]["stats"]);

  const std::string tape = read_text_file(dir / "tape.csv");
  const auto tape_lines = lines_of(tape, kTapeHeader, "tape.csv");
  r.tape.reserve(tape_lines.size() - 1);
  for (std::size_t i = 1; i < tape_lines.size(); ++i) {
    const std::string where = "tape.csv line " + std::to_string(i + 1);
    const auto f = split(tape_lines[i]);
    if (f.size() != 7) throw ArchiveError(where + ": expected 7 fields");
    Trade t;
    t.id = to_int(f[0], where);
    t.time = to_int(f[1], where);
    t.price = to_int(f[2], where);
    t.qty = to_int(f[3], where);
    t.buy_agent = static_cast<AgentId>(to_int(f[4], where));
    t.sell_agent = static_cast<AgentId>(to_int(f[5], where));
    if (f[6] == "buy") {
      t.aggressor = Side::Buy;
    } else if (f[6] == "sell") {
      t.aggressor = Side::Sell;
    } else {
      throw ArchiveError(where + ": bad aggressor");
    }
    if (t.id != static_cast<TradeId>(i)) throw ArchiveError(where + ": trade ids must be consecutive from 1");
    if (t.price < 1 || t.qty < 1) throw ArchiveError(where + ": price and qty must be positive");
    r.tape.push_back(t);
  }

  const std::string snaps = read_text_file(dir / "snapshots.csv");
  const auto snap_lines = lines_of(snaps, kSnapshotsHeader, "snapshots.csv");
  const std::size_t n = static_cast<std::size_t>(r.agent_count());
  for (std::size_t i = 1; i < snap_lines.size(); ++i) {
    const std::string where = "snapshots.csv line " + std::to_string(i + 1);
    const auto f = split(snap_lines[i]);
    if (f.size() != 7) throw ArchiveError(where + ": expected 7 fields");
    const std::int64_t index = to_int(f[0], where);
    const std::int64_t agent = to_int(f[3], where);
    if (agent == 0) {
      if (index != static_cast<std::int64_t>(r.snapshots.size())) throw ArchiveError(where + ": bad snapshot index");
      Snapshot s;
      s.index = index;
      s.trade_count = to_int(f[1], where);
      s.time = to_int(f[2], where);
      r.snapshots.push_back(std::move(s));
    }
    if (r.snapshots.empty() || index != r.snapshots.back().index ||
        agent != static_cast<std::int64_t>(r.snapshots.back().cash.size()) || agent >= static_cast<std::int64_t>(n)) {
      throw ArchiveError(where + ": rows out of order");
    }
    Snapshot& s = r.snapshots.back();
    if (to_int(f[4], where) != r.family_of(static_cast<AgentId>(agent))) {
      throw ArchiveError(where + ": family does not match the scenario layout");
    }
    s.cash.push_back(to_int(f[5], where));
    s.shares.push_back(to_int(f[6], where));
  }
  for (const auto& s : r.snapshots) {
    if (s.cash.size() != n) throw ArchiveError("snapshot " + std::to_string(s.index) + ": wrong number of agents");
  }
  if (!r.snapshots.empty()) {
    const auto& last = r.snapshots.back();
    for (std::size_t a = 0; a < n; ++a) {
      Account acc;
      acc.agent = static_cast<AgentId>(a);
      acc.cash = last.cash[a];
      acc.shares = last.shares[a];
      r.final_accounts.push_back(acc);
    }
  }
  return r;
}

}  // namespace avatarsim
