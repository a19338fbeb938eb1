#pragma once

// Experiment sessions: participants submit avatar versions, runs assemble a
// scenario from the session defaults and each participant's latest valid
// version, and finished runs are archived with their leaderboard. All
// records are JSON documents; the transport lives in http.hpp.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace avatarsim::service {

using nlohmann::json;

enum class ErrorCode : std::uint8_t {
  ConfigError,
  SessionClosed,
  UnknownParticipant,
  RunInProgress,
  NoValidAvatar,
  RunNotDone,
  NotFound,
  BadRequest,
  Unauthorized,
};

std::string_view to_string(ErrorCode c) noexcept;
int http_status(ErrorCode c) noexcept;

class ServiceError : public std::runtime_error {
 public:
  ServiceError(ErrorCode code, const std::string& message, json detail = nullptr)
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const json& detail() const noexcept { return detail_; }

  /// {"error": {"code", "message", "detail"?}}
  json to_json() const;

 private:
  ErrorCode code_;
  json detail_;
};

/// Atomic one-file-per-record JSON persistence under a data directory.
class JsonStore {
 public:
  explicit JsonStore(std::filesystem::path root);

  void put(const std::string& collection, const std::string& id, const json& doc) const;
  std::map<std::string, json> load(const std::string& collection) const;
  std::filesystem::path dir(const std::string& collection) const { return root_ / collection; }
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
};

struct ServiceOptions {
  std::filesystem::path data_dir;
  int workers = 1;
  /// Seed source for runs without an explicit seed override.
  std::function<std::uint64_t()> seed_source;
};

class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// body: {title, scenario, agents_per_participant?, participant_cash?,
  /// participant_shares?, disclosure? "full"|"public", parallel_runs?}
  json create_session(const json& body);
  json close_session(const std::string& session_id);
  /// body: {name}. Returns {participant_id, token}; the token is shown once.
  json register_participant(const std::string& session_id, const json& body);
  /// body: {participant_id, source, note?}; token must match the participant.
  json submit_avatar(const std::string& session_id, const std::string& token, const json& body);
  /// body: {overrides?: {seed?, run_length?, news_rate?, news_sigma?, ...}}
  json start_run(const std::string& session_id, const json& body);

  json get_run(const std::string& run_id) const;
  json report(const std::string& run_id) const;
  json leaderboard(const std::string& run_id) const;
  json session_history(const std::string& session_id) const;
  /// Sources are included for the owner (matching token), and for others
  /// only for versions used in finished runs under full disclosure.
  json participant_versions(const std::string& participant_id, const std::string& token) const;

  std::filesystem::path archive_dir(const std::string& run_id) const;

  /// Blocks until no run is queued or executing.
  void wait_idle();

 private:
  struct Job {
    std::string run_id;
  };

  void worker_loop();
  void execute(const std::string& run_id);
  void persist(const std::string& collection, const json& doc) const;
  std::string next_id(char prefix);
  json& session_ref(const std::string& id);
  const json& session_ref(const std::string& id) const;
  const json& run_ref(const std::string& id) const;
  std::optional<json> latest_valid_version(const json& participant) const;

  ServiceOptions options_;
  JsonStore store_;

  mutable std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;
  std::map<std::string, json> sessions_;
  std::map<std::string, json> participants_;
  std::map<std::string, json> versions_;
  std::map<std::string, json> runs_;
  std::map<char, std::uint64_t> counters_;
  std::deque<Job> queue_;
  int active_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace avatarsim::service
