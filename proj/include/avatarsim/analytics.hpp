#pragma once

// Stylized-facts estimators and the six-panel run report.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "avatarsim/run_result.hpp"

namespace avatarsim::analytics {

enum class ErrorCode : std::uint8_t { EmptySeries, ZeroVariance, InsufficientData };

std::string_view to_string(ErrorCode c) noexcept;

class AnalyticsError : public std::runtime_error {
 public:
  AnalyticsError(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// r_t = ln(p_t / p_{t-1}). EmptySeries for fewer than 2 prices.
std::vector<double> log_returns(std::span<const Price> prices);

/// Biased autocorrelation estimator for lags 0..max_lag.
/// InsufficientData unless size > max_lag; ZeroVariance for a constant series.
std::vector<double> acf(std::span<const double> x, int max_lag);

/// m4 / m2^2 - 3 from central sample moments. Needs n >= 4.
double excess_kurtosis(std::span<const double> x);

double mean(std::span<const double> x);
/// Population variance.
double variance(std::span<const double> x);

/// Standard normal quantile function.
double normal_quantile(double p);

struct QQPoint {
  double normal_q;
  double empirical_q;
  friend bool operator==(const QQPoint&, const QQPoint&) = default;
};

/// Empirical quantiles of the standardized series at levels (i - 0.5)/m,
/// i = 1..m, by linear interpolation between order statistics, paired with
/// standard normal quantiles.
std::vector<QQPoint> qq_data(std::span<const double> x, int n_quantiles);

/// Per-family holdings and wealth at every snapshot. Marks are the last trade
/// price at the snapshot, or the initial reference price before any trade.
struct FamilyWealth {
  std::vector<std::int64_t> trade_count;  // per snapshot
  std::vector<Price> mark;
  std::vector<std::vector<Money>> wealth;  // [family][snapshot]
  std::vector<std::vector<double>> relative;
  std::vector<std::vector<double>> average;
  std::vector<std::vector<Qty>> shares;
  std::vector<std::vector<Money>> cash;
};

Money agent_wealth(Money cash, Qty shares, Price mark);

FamilyWealth family_wealth(const RunResult& run);

struct LeaderboardEntry {
  int rank = 0;  // 1-based
  FamilyId family = 0;
  std::string name;
  Money total_wealth = 0;
  std::int64_t n_agents = 0;
  double average_wealth = 0.0;

  friend bool operator==(const LeaderboardEntry&, const LeaderboardEntry&) = default;
};

/// Families by final average wealth, highest first; exact ties by family id.
std::vector<LeaderboardEntry> leaderboard(const RunResult& run);

struct StylizedFactsReport {
  std::int64_t n_transactions = 0;
  std::int64_t n_returns = 0;
  int max_lag = 50;
  std::optional<double> noise_band;
  std::optional<std::vector<double>> acf_raw;
  std::optional<std::vector<double>> acf_abs;
  std::optional<double> excess_kurtosis;
  std::optional<std::vector<QQPoint>> qq;
  std::vector<Price> prices;
  std::vector<std::string> family_names;
  FamilyWealth wealth;
  std::vector<LeaderboardEntry> leaderboard;
  std::map<std::string, std::string> null_reasons;  // panel -> error code
};

StylizedFactsReport build_report(const RunResult& run, int max_lag = 50);

/// report.json text. Pure: equal reports give identical bytes.
std::string report_to_json(const StylizedFactsReport& report);

/// Panel data as CSV files, keyed by file name.
std::map<std::string, std::string> report_csvs(const StylizedFactsReport& report);

/// Fraction of lags 1..max in [1, acf.size()) whose value lies within ±band.
double fraction_within(const std::vector<double>& acf, double band, int max_lag);
/// Fraction of lags 1..max whose value exceeds +band.
double fraction_above(const std::vector<double>& acf, double band, int max_lag);

}  // namespace avatarsim::analytics
