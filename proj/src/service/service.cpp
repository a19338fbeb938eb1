#include "avatarsim/service/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "avatarsim/batch.hpp"
#include "avatarsim/dsl/parser.hpp"

namespace avatarsim::service {

std::string_view to_string(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::SessionClosed: return "SessionClosed";
    case ErrorCode::UnknownParticipant: return "UnknownParticipant";
    case ErrorCode::RunInProgress: return "RunInProgress";
    case ErrorCode::NoValidAvatar: return "NoValidAvatar";
    case ErrorCode::RunNotDone: return "RunNotDone";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::Unauthorized: return "Unauthorized";
  }
  return "?";
}

int http_status(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::BadRequest: return 400;
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::UnknownParticipant:
    case ErrorCode::NotFound: return 404;
    case ErrorCode::SessionClosed:
    case ErrorCode::RunInProgress:
    case ErrorCode::NoValidAvatar:
    case ErrorCode::RunNotDone: return 409;
  }
  return 500;
}

json ServiceError::to_json() const {
  json e = {{"code", std::string(to_string(code_))}, {"message", what()}};
  if (!detail_.is_null()) e["detail"] = detail_;
  return {{"error", e}};
}

// ---------------------------------------------------------------------------
// JsonStore

JsonStore::JsonStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

void JsonStore::put(const std::string& collection, const std::string& id, const json& doc) const {
  const auto d = dir(collection);
  std::filesystem::create_directories(d);
  const auto tmp = d / (id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, d / (id + ".json"));
}

std::map<std::string, json> JsonStore::load(const std::string& collection) const {
  std::map<std::string, json> out;
  const auto d = dir(collection);
  if (!std::filesystem::exists(d)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(d)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    out[entry.path().stem().string()] = json::parse(in);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Service

namespace {

constexpr const char* kSessions = "sessions";
constexpr const char* kParticipants = "participants";
constexpr const char* kVersions = "versions";
constexpr const char* kRuns = "runs";

// Scenario keys a run may override; families and the seed stay under service control.
const std::set<std::string>& overridable() {
  static const std::set<std::string> keys = {"run_length",       "news_rate",         "news_sigma",
                                             "message_latency",  "initial_reference_price",
                                             "snapshot_interval", "orders_good_till_wake", "max_sim_time"};
  return keys;
}

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string random_token() {
  std::random_device rd;
  char buf[33];
  for (int i = 0; i < 4; ++i) std::snprintf(buf + 8 * i, 9, "%08x", rd());
  return std::string(buf, 32);
}

std::uint64_t default_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

const json& require_object(const json& body, const std::string& what) {
  if (!body.is_object()) throw ServiceError(ErrorCode::BadRequest, what + " must be a JSON object");
  return body;
}

std::string require_string(const json& body, const std::string& key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw ServiceError(ErrorCode::BadRequest, "'" + key + "' must be a string", {{"path", key}});
  }
  return body[key].get<std::string>();
}

void reject_unknown(const json& body, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : body.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; })) {
      throw ServiceError(ErrorCode::ConfigError, key + ": unknown key", {{"path", key}});
    }
  }
}

ServiceError config_error(const ConfigError& e, const std::string& prefix) {
  const std::string path = e.path().empty() ? prefix : prefix + "." + e.path();
  return ServiceError(ErrorCode::ConfigError, prefix + "." + e.what(), {{"path", path}});
}

std::int64_t positive_int(const json& body, const std::string& key, std::int64_t fallback, std::int64_t min) {
  if (!body.contains(key)) return fallback;
  if (!body[key].is_number_integer() || body[key].get<std::int64_t>() < min) {
    throw ServiceError(ErrorCode::ConfigError, key + ": must be an integer >= " + std::to_string(min),
                       {{"path", key}});
  }
  return body[key].get<std::int64_t>();
}

bool run_active(const json& run) {
  const auto s = run["status"].get<std::string>();
  return s == "Queued" || s == "Running";
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)), store_(options_.data_dir) {
  if (!options_.seed_source) options_.seed_source = default_seed;
  sessions_ = store_.load(kSessions);
  participants_ = store_.load(kParticipants);
  versions_ = store_.load(kVersions);
  runs_ = store_.load(kRuns);
  auto restore = [this](char prefix, const std::map<std::string, json>& records) {
    for (const auto& [id, doc] : records) {
      counters_[prefix] = std::max<std::uint64_t>(counters_[prefix], std::stoull(id.substr(1)));
    }
  };
  restore('s', sessions_);
  restore('p', participants_);
  restore('v', versions_);
  restore('r', runs_);
  // Runs cut off by a restart cannot resume; record them as failed.
  for (auto& [id, run] : runs_) {
    if (!run_active(run)) continue;
    run["status"] = "Failed";
    run["error"] = "interrupted by service restart";
    persist(kRuns, run);
    json& s = sessions_.at(run["session_id"].get<std::string>());
    if (s["status"] == "Running") {
      s["status"] = "Open";
      persist(kSessions, s);
    }
  }
  const int n = std::max(1, options_.workers);
  for (int i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

void Service::persist(const std::string& collection, const json& doc) const {
  store_.put(collection, doc["id"].get<std::string>(), doc);
}

std::string Service::next_id(char prefix) { return prefix + std::to_string(++counters_[prefix]); }

json& Service::session_ref(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(ErrorCode::NotFound, "no session '" + id + "'");
  return it->second;
}

const json& Service::session_ref(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(ErrorCode::NotFound, "no session '" + id + "'");
  return it->second;
}

const json& Service::run_ref(const std::string& id) const {
  auto it = runs_.find(id);
  if (it == runs_.end()) throw ServiceError(ErrorCode::NotFound, "no run '" + id + "'");
  return it->second;
}

std::filesystem::path Service::archive_dir(const std::string& run_id) const {
  return store_.root() / "archives" / run_id;
}

json Service::create_session(const json& body) {
  require_object(body, "session");
  reject_unknown(body, {"title", "scenario", "agents_per_participant", "participant_cash", "participant_shares",
                        "disclosure", "parallel_runs"});
  const std::string title = body.contains("title") ? require_string(body, "title") : "";
  if (!body.contains("scenario")) throw ServiceError(ErrorCode::ConfigError, "scenario: required", {{"path", "scenario"}});
  ScenarioConfig defaults;
  try {
    // Session defaults may have no house families; validate with a stand-in participant family.
    json scenario = body["scenario"];
    const json stand_in = {{"name", "participant stand-in"}, {"archetype", "random"}};
    if (scenario.is_object() && !scenario.contains("families")) scenario["families"] = json::array();
    if (scenario.is_object() && scenario["families"].is_array()) scenario["families"].push_back(stand_in);
    ScenarioConfig probe = scenario_from_json(scenario);
    prepare_families(probe);
    defaults = probe;
    defaults.families.pop_back();
  } catch (const ConfigError& e) {
    throw config_error(e, "scenario");
  } catch (const FamilyAvatarError& e) {
    throw ServiceError(ErrorCode::ConfigError, std::string("scenario: ") + e.what(), {{"path", "scenario.families"}});
  }
  const std::string disclosure = body.contains("disclosure") ? require_string(body, "disclosure") : "full";
  if (disclosure != "full" && disclosure != "public") {
    throw ServiceError(ErrorCode::ConfigError, "disclosure: must be 'full' or 'public'", {{"path", "disclosure"}});
  }
  if (body.contains("parallel_runs") && !body["parallel_runs"].is_boolean()) {
    throw ServiceError(ErrorCode::ConfigError, "parallel_runs: must be a boolean", {{"path", "parallel_runs"}});
  }
  json s;
  s["title"] = title;
  s["scenario"] = scenario_to_json(defaults);
  s["agents_per_participant"] = positive_int(body, "agents_per_participant", 100, 1);
  s["participant_cash"] = positive_int(body, "participant_cash", 100000, 0);
  s["participant_shares"] = positive_int(body, "participant_shares", 100, 0);
  s["disclosure"] = disclosure;
  s["parallel_runs"] = body.value("parallel_runs", false);
  s["status"] = "Open";
  s["participants"] = json::array();
  s["runs"] = json::array();
  s["created_at"] = now_iso();

  std::lock_guard lock(mutex_);
  s["id"] = next_id('s');
  persist(kSessions, s);
  sessions_[s["id"]] = s;
  return {{"session_id", s["id"]}, {"status", "Open"}};
}

json Service::close_session(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  json& s = session_ref(session_id);
  for (const auto& rid : s["runs"]) {
    if (run_active(runs_.at(rid.get<std::string>()))) {
      throw ServiceError(ErrorCode::RunInProgress, "session '" + session_id + "' has a run in progress");
    }
  }
  s["status"] = "Closed";
  persist(kSessions, s);
  return {{"session_id", session_id}, {"status", "Closed"}};
}

json Service::register_participant(const std::string& session_id, const json& body) {
  require_object(body, "participant");
  reject_unknown(body, {"name"});
  const std::string name = require_string(body, "name");
  if (name.empty()) throw ServiceError(ErrorCode::ConfigError, "name: must not be empty", {{"path", "name"}});

  std::lock_guard lock(mutex_);
  json& s = session_ref(session_id);
  if (s["status"] == "Closed") throw ServiceError(ErrorCode::SessionClosed, "session '" + session_id + "' is closed");
  for (const auto& f : s["scenario"]["families"]) {
    if (f["name"] == name) {
      throw ServiceError(ErrorCode::ConfigError, "name: clashes with a house family", {{"path", "name"}});
    }
  }
  for (const auto& pid : s["participants"]) {
    if (participants_.at(pid.get<std::string>())["name"] == name) {
      throw ServiceError(ErrorCode::ConfigError, "name: already registered in this session", {{"path", "name"}});
    }
  }
  json p;
  p["id"] = next_id('p');
  p["session_id"] = session_id;
  p["name"] = name;
  p["token"] = random_token();
  p["versions"] = json::array();
  p["created_at"] = now_iso();
  persist(kParticipants, p);
  participants_[p["id"]] = p;
  s["participants"].push_back(p["id"]);
  persist(kSessions, s);
  return {{"participant_id", p["id"]}, {"token", p["token"]}, {"name", name}};
}

json Service::submit_avatar(const std::string& session_id, const std::string& token, const json& body) {
  require_object(body, "submission");
  reject_unknown(body, {"participant_id", "source", "note"});
  const std::string pid = require_string(body, "participant_id");
  const std::string source = require_string(body, "source");
  const std::string note = body.contains("note") ? require_string(body, "note") : "";

  json diagnostics = json::array();
  std::string canonical;
  try {
    canonical = dsl::print(dsl::parse(source));
  } catch (const dsl::AvatarError& e) {
    diagnostics.push_back({{"line", e.pos().line},
                           {"column", e.pos().column},
                           {"kind", e.kind() == dsl::AvatarError::Kind::Parse ? "parse" : "type"},
                           {"message", e.message()}});
  }

  std::lock_guard lock(mutex_);
  json& s = session_ref(session_id);
  if (s["status"] == "Closed") throw ServiceError(ErrorCode::SessionClosed, "session '" + session_id + "' is closed");
  const auto& roster = s["participants"];
  if (std::find(roster.begin(), roster.end(), json(pid)) == roster.end()) {
    throw ServiceError(ErrorCode::UnknownParticipant, "participant '" + pid + "' is not registered in this session",
                       {{"participant_id", pid}});
  }
  json& p = participants_.at(pid);
  if (p["token"] != token) throw ServiceError(ErrorCode::Unauthorized, "token does not match participant");
  json v;
  v["id"] = next_id('v');
  v["participant_id"] = pid;
  v["session_id"] = session_id;
  v["source"] = source;
  v["note"] = note;
  v["valid"] = diagnostics.empty();
  v["diagnostics"] = diagnostics;
  v["created_at"] = now_iso();
  persist(kVersions, v);
  versions_[v["id"]] = v;
  p["versions"].push_back(v["id"]);
  persist(kParticipants, p);
  return {{"version_id", v["id"]}, {"valid", v["valid"]}, {"diagnostics", diagnostics}};
}

std::optional<json> Service::latest_valid_version(const json& participant) const {
  const auto& ids = participant["versions"];
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    const json& v = versions_.at(it->get<std::string>());
    if (v["valid"].get<bool>()) return v;
  }
  return std::nullopt;
}

json Service::start_run(const std::string& session_id, const json& body) {
  require_object(body, "run request");
  reject_unknown(body, {"overrides"});
  const json overrides = body.value("overrides", json::object());
  require_object(overrides, "overrides");

  std::lock_guard lock(mutex_);
  json& s = session_ref(session_id);
  if (s["status"] == "Closed") throw ServiceError(ErrorCode::SessionClosed, "session '" + session_id + "' is closed");
  if (!s["parallel_runs"].get<bool>()) {
    for (const auto& rid : s["runs"]) {
      if (run_active(runs_.at(rid.get<std::string>()))) {
        throw ServiceError(ErrorCode::RunInProgress, "session '" + session_id + "' already has a run in progress",
                           {{"run_id", rid}});
      }
    }
  }
  json missing = json::array();
  json used = json::object();
  json scenario = s["scenario"];
  for (const auto& pid_json : s["participants"]) {
    const std::string pid = pid_json.get<std::string>();
    const json& p = participants_.at(pid);
    const auto v = latest_valid_version(p);
    if (!v) {
      missing.push_back(pid);
      continue;
    }
    used[pid] = (*v)["id"];
    scenario["families"].push_back({{"name", p["name"]},
                                    {"avatar_source", (*v)["source"]},
                                    {"n_agents", s["agents_per_participant"]},
                                    {"initial_cash", s["participant_cash"]},
                                    {"initial_shares", s["participant_shares"]}});
  }
  if (!missing.empty()) {
    throw ServiceError(ErrorCode::NoValidAvatar, "participants without a valid avatar: " + missing.dump(),
                       {{"participants", missing}});
  }
  std::uint64_t seed = 0;
  for (const auto& [key, value] : overrides.items()) {
    if (key == "seed") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
        throw ServiceError(ErrorCode::ConfigError, "overrides.seed: must be a non-negative integer",
                           {{"path", "overrides.seed"}});
      }
      continue;
    }
    if (!overridable().contains(key)) {
      throw ServiceError(ErrorCode::ConfigError, "overrides." + key + ": not overridable",
                         {{"path", "overrides." + key}});
    }
    scenario[key] = value;
  }
  seed = overrides.contains("seed") ? overrides["seed"].get<std::uint64_t>() : options_.seed_source();
  scenario["master_seed"] = seed;
  ScenarioConfig config;
  try {
    config = scenario_from_json(scenario);
    prepare_families(config);
  } catch (const ConfigError& e) {
    throw config_error(e, "scenario");
  } catch (const FamilyAvatarError& e) {
    throw ServiceError(ErrorCode::ConfigError, e.what(), {{"path", "scenario.families"}});
  }

  json r;
  r["id"] = next_id('r');
  r["session_id"] = session_id;
  r["status"] = "Queued";
  r["versions"] = used;
  r["seed"] = seed;
  r["scenario"] = scenario_to_json(config);
  r["created_at"] = now_iso();
  persist(kRuns, r);
  runs_[r["id"]] = r;
  s["runs"].push_back(r["id"]);
  s["status"] = "Running";
  persist(kSessions, s);
  queue_.push_back({r["id"].get<std::string>()});
  work_cv_.notify_one();
  return {{"run_id", r["id"]}, {"status", "Queued"}, {"seed", seed}};
}

void Service::worker_loop() {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(mutex_);
      work_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_ && queue_.empty()) return;
      job = queue_.front();
      queue_.pop_front();
      ++active_;
    }
    execute(job.run_id);
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    idle_cv_.notify_all();
  }
}

void Service::execute(const std::string& run_id) {
  json scenario;
  {
    std::lock_guard lock(mutex_);
    json& r = runs_.at(run_id);
    r["status"] = "Running";
    r["started_at"] = now_iso();
    persist(kRuns, r);
    scenario = r["scenario"];
  }
  json outcome;
  try {
    const ScenarioConfig config = scenario_from_json(scenario);
    RunArtifacts a = run_with_report(config);
    write_artifacts(archive_dir(run_id), a, true);
    outcome["status"] = "Done";
    outcome["leaderboard"] = json::parse(leaderboard_json(a.report.leaderboard));
    outcome["transactions"] = a.result.tape.size();
    outcome["end_reason"] = a.result.stats.end_reason;
  } catch (const std::exception& e) {
    outcome["status"] = "Failed";
    outcome["error"] = e.what();
  }
  std::lock_guard lock(mutex_);
  json& r = runs_.at(run_id);
  for (const auto& [key, value] : outcome.items()) r[key] = value;
  r["finished_at"] = now_iso();
  persist(kRuns, r);
  json& s = sessions_.at(r["session_id"].get<std::string>());
  const bool busy = std::any_of(s["runs"].begin(), s["runs"].end(),
                                [this](const json& id) { return run_active(runs_.at(id.get<std::string>())); });
  if (!busy && s["status"] == "Running") {
    s["status"] = "Open";
    persist(kSessions, s);
  }
}

void Service::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && active_ == 0; });
}

json Service::get_run(const std::string& run_id) const {
  std::lock_guard lock(mutex_);
  json r = run_ref(run_id);
  // Sources are disclosed only after the run, and never under public disclosure.
  if (r["status"] != "Done" || session_ref(r["session_id"].get<std::string>())["disclosure"] == "public") {
    for (auto& f : r["scenario"]["families"]) f.erase("avatar_source");
  }
  r["archive"] = archive_dir(run_id).string();
  return r;
}

json Service::report(const std::string& run_id) const {
  std::string disclosure;
  {
    std::lock_guard lock(mutex_);
    const json& r = run_ref(run_id);
    if (r["status"] != "Done") {
      throw ServiceError(ErrorCode::RunNotDone, "run '" + run_id + "' is " + r["status"].get<std::string>(),
                         {{"status", r["status"]}});
    }
    disclosure = session_ref(r["session_id"].get<std::string>())["disclosure"];
  }
  json rep = json::parse(read_text_file(archive_dir(run_id) / "report.json"));
  if (disclosure == "public") {
    for (auto& f : rep["families"]) {
      f.erase("shares");
      f.erase("cash");
    }
  }
  return rep;
}

json Service::leaderboard(const std::string& run_id) const {
  std::lock_guard lock(mutex_);
  const json& r = run_ref(run_id);
  if (r["status"] != "Done") {
    throw ServiceError(ErrorCode::RunNotDone, "run '" + run_id + "' is " + r["status"].get<std::string>(),
                       {{"status", r["status"]}});
  }
  return r["leaderboard"];
}

json Service::session_history(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const json& s = session_ref(session_id);
  const bool full = s["disclosure"] == "full";
  json out = s;
  json participants = json::array();
  for (const auto& pid : s["participants"]) {
    const json& p = participants_.at(pid.get<std::string>());
    participants.push_back({{"participant_id", p["id"]}, {"name", p["name"]}, {"versions", p["versions"].size()}});
  }
  out["participants"] = participants;
  json runs = json::array();
  for (const auto& rid : s["runs"]) {
    const json& r = runs_.at(rid.get<std::string>());
    json entry = {{"run_id", r["id"]}, {"status", r["status"]}, {"seed", r["seed"]}, {"versions", r["versions"]},
                  {"created_at", r["created_at"]}};
    if (r.contains("leaderboard")) entry["leaderboard"] = r["leaderboard"];
    if (r.contains("error")) entry["error"] = r["error"];
    if (full && r["status"] == "Done") {
      json sources = json::object();
      for (const auto& [pid, vid] : r["versions"].items()) {
        sources[pid] = versions_.at(vid.get<std::string>())["source"];
      }
      entry["sources"] = sources;
    }
    runs.push_back(entry);
  }
  out["runs"] = runs;
  return out;
}

json Service::participant_versions(const std::string& participant_id, const std::string& token) const {
  std::lock_guard lock(mutex_);
  auto it = participants_.find(participant_id);
  if (it == participants_.end()) {
    throw ServiceError(ErrorCode::NotFound, "no participant '" + participant_id + "'");
  }
  const json& p = it->second;
  const bool owner = p["token"] == token;
  const json& s = session_ref(p["session_id"].get<std::string>());
  std::set<std::string> disclosed;
  if (s["disclosure"] == "full") {
    for (const auto& rid : s["runs"]) {
      const json& r = runs_.at(rid.get<std::string>());
      if (r["status"] == "Done" && r["versions"].contains(participant_id)) {
        disclosed.insert(r["versions"][participant_id].get<std::string>());
      }
    }
  }
  json versions = json::array();
  for (const auto& vid : p["versions"]) {
    json v = versions_.at(vid.get<std::string>());
    if (!owner) {
      v.erase("note");
      if (!disclosed.contains(vid.get<std::string>())) v.erase("source");
    }
    versions.push_back(v);
  }
  return {{"participant_id", participant_id}, {"name", p["name"]}, {"versions", versions}};
}

}  // namespace avatarsim::service
