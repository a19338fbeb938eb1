// avatarsim: batch front end for runs, reports, script checks, the oracle
// corpus and the HTTP service.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "avatarsim/batch.hpp"
#include "avatarsim/dsl/ast.hpp"
#include "avatarsim/service/http.hpp"
#include "avatarsim/testing/oracle_suite.hpp"

using namespace avatarsim;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitAvatar = 2;
constexpr int kExitEngine = 3;

struct RunFlags {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string format = "json";
  bool quiet = false;
  int jobs = 1;
  int sweep = 0;
};

int run_one(const ScenarioConfig& config, const std::filesystem::path& out, const RunFlags& flags,
            bool print_board) {
  const auto start = std::chrono::steady_clock::now();
  RunArtifacts a = run_with_report(config);
  write_artifacts(out, a, flags.format == "csv");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (print_board) {
    if (flags.format == "csv") {
      std::cout << leaderboard_csv(a.report.leaderboard);
    } else {
      std::cout << leaderboard_json(a.report.leaderboard);
    }
  }
  if (!flags.quiet) {
    std::fprintf(stderr, "seed %llu: %zu transactions, end %s at t=%lld, %.2fs -> %s\n",
                 static_cast<unsigned long long>(config.master_seed), a.result.tape.size(),
                 a.result.stats.end_reason.c_str(), static_cast<long long>(a.result.stats.end_time), secs,
                 out.string().c_str());
  }
  return 0;
}

int cmd_run(const RunFlags& flags) {
  ScenarioConfig config = load_scenario(flags.scenario);
  if (flags.seed) config.master_seed = *flags.seed;
  prepare_families(config);  // surface avatar errors before any output
  if (flags.sweep <= 0) return run_one(config, flags.out, flags, true);

  std::atomic<int> next{0};
  std::atomic<int> failures{0};
  std::mutex print_mutex;
  auto worker = [&] {
    for (int i = next++; i < flags.sweep; i = next++) {
      ScenarioConfig c = config;
      c.master_seed = config.master_seed + static_cast<std::uint64_t>(i);
      const auto dir = std::filesystem::path(flags.out) / ("seed-" + std::to_string(c.master_seed));
      try {
        RunArtifacts a = run_with_report(c);
        write_artifacts(dir, a, flags.format == "csv");
        if (!flags.quiet) {
          std::lock_guard lock(print_mutex);
          std::fprintf(stderr, "seed %llu: %zu transactions -> %s\n", static_cast<unsigned long long>(c.master_seed),
                       a.result.tape.size(), dir.string().c_str());
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(print_mutex);
        std::fprintf(stderr, "seed %llu: %s\n", static_cast<unsigned long long>(c.master_seed), e.what());
        ++failures;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::max(1, flags.jobs); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return failures > 0 ? kExitEngine : 0;
}

int cmd_check(const std::string& path) {
  std::string source;
  try {
    source = read_text_file(path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  const CheckResult r = check_avatar(source);
  if (!r.ok) {
    std::cerr << path << ":" << r.diagnostic << "\n";
    return 1;
  }
  std::cout << r.canonical;
  return 0;
}

int cmd_report(const std::string& dir, const std::string& format) {
  try {
    RunArtifacts a = regenerate_report(dir);
    write_text_file(std::filesystem::path(dir) / "report.json", a.report_json);
    for (const auto& [name, text] : analytics::report_csvs(a.report)) {
      write_text_file(std::filesystem::path(dir) / name, text);
    }
    std::cout << (format == "csv" ? leaderboard_csv(a.report.leaderboard) : leaderboard_json(a.report.leaderboard));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "report: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"avatar-based market simulator"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run a scenario and write its archive");
  run->add_option("scenario", run_flags.scenario, "scenario JSON file")->required();
  run->add_option("--seed", run_flags.seed, "override master_seed");
  run->add_option("--out", run_flags.out, "output directory");
  run->add_option("--format", run_flags.format, "leaderboard format; csv also writes panel CSVs")
      ->check(CLI::IsMember({"json", "csv"}));
  run->add_flag("--quiet", run_flags.quiet, "no progress on standard error");
  run->add_option("--jobs", run_flags.jobs, "parallel runs in sweep mode")->check(CLI::PositiveNumber);
  run->add_option("--sweep", run_flags.sweep, "run N consecutive seeds into OUT/seed-<seed>");

  std::string check_path;
  auto* check = app.add_subcommand("check", "validate an avatar script and print its canonical form");
  check->add_option("avatar", check_path, "script (.avt)")->required();

  std::string report_dir, report_format = "json";
  auto* report = app.add_subcommand("report", "rebuild report.json and panel CSVs from an archive");
  report->add_option("archive", report_dir, "archive directory")->required();
  report->add_option("--format", report_format)->check(CLI::IsMember({"json", "csv"}));

  testing::OracleOptions oracle_opts;
  std::string corpus_dir = "corpus/archetypes";
  auto* oracle = app.add_subcommand("oracle", "run the reference-matcher corpus and the DSL twin checks");
  oracle->add_option("--seeds", oracle_opts.seeds, "random order streams");
  oracle->add_option("--orders", oracle_opts.orders, "orders per stream");
  oracle->add_option("--corpus", corpus_dir, "directory of archetype twin scripts");

  service::ServerOptions serve_opts;
  auto* serve = app.add_subcommand("serve", "start the session service");
  serve->add_option("--data", serve_opts.data_dir, "data directory")->required();
  serve->add_option("--host", serve_opts.host);
  serve->add_option("--port", serve_opts.port);
  serve->add_option("--workers", serve_opts.workers)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*check) return cmd_check(check_path);
    if (*report) return cmd_report(report_dir, report_format);
    if (*oracle) {
      oracle_opts.corpus_dir = corpus_dir;
      const auto summary = testing::run_oracle_suite(oracle_opts, std::cout);
      return summary.ok() ? 0 : 1;
    }
    if (*serve) return service::serve(serve_opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FamilyAvatarError& e) {
    std::cerr << "avatar error: " << e.what() << "\n";
    return kExitAvatar;
  } catch (const dsl::AvatarError& e) {
    std::cerr << "avatar error: " << e.what() << "\n";
    return kExitAvatar;
  } catch (const std::exception& e) {
    std::cerr << "engine error: " << e.what() << "\n";
    return kExitEngine;
  }
  return 0;
}
