#include "avatarsim/analytics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

namespace avatarsim::analytics {

using nlohmann::json;

std::string_view to_string(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InsufficientData: return "InsufficientData";
  }
  return "?";
}

std::vector<double> log_returns(std::span<const Price> prices) {
  if (prices.size() < 2) throw AnalyticsError(ErrorCode::EmptySeries, "need at least 2 prices");
  std::vector<double> r(prices.size() - 1);
  for (std::size_t t = 1; t < prices.size(); ++t) {
    if (prices[t] <= 0 || prices[t - 1] <= 0) throw std::invalid_argument("prices must be positive");
    r[t - 1] = std::log(static_cast<double>(prices[t]) / static_cast<double>(prices[t - 1]));
  }
  return r;
}

double mean(std::span<const double> x) {
  if (x.empty()) throw AnalyticsError(ErrorCode::EmptySeries, "empty series");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

std::vector<double> acf(std::span<const double> x, int max_lag) {
  if (max_lag < 0 || x.size() <= static_cast<std::size_t>(max_lag)) {
    throw AnalyticsError(ErrorCode::InsufficientData, "series length must exceed max_lag");
  }
  const double m = mean(x);
  std::vector<double> d(x.size());
  double denom = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    d[t] = x[t] - m;
    denom += d[t] * d[t];
  }
  if (!(denom > 0.0)) throw AnalyticsError(ErrorCode::ZeroVariance, "constant series");
  std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1);
  rho[0] = 1.0;
  for (std::size_t k = 1; k < rho.size(); ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < d.size(); ++t) s += d[t] * d[t + k];
    rho[k] = s / denom;
  }
  return rho;
}

double excess_kurtosis(std::span<const double> x) {
  if (x.size() < 4) throw AnalyticsError(ErrorCode::InsufficientData, "need at least 4 observations");
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw AnalyticsError(ErrorCode::ZeroVariance, "constant series");
  return m4 / (m2 * m2) - 3.0;
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<double>(), p); }

std::vector<QQPoint> qq_data(std::span<const double> x, int n_quantiles) {
  if (n_quantiles < 2 || x.size() < static_cast<std::size_t>(n_quantiles)) {
    throw AnalyticsError(ErrorCode::InsufficientData, "need n >= n_quantiles >= 2");
  }
  const double m = mean(x);
  const double var = variance(x);
  if (!(var > 0.0)) throw AnalyticsError(ErrorCode::ZeroVariance, "constant series");
  const double sd = std::sqrt(var);
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m) / sd;
  std::sort(z.begin(), z.end());
  std::vector<QQPoint> out;
  out.reserve(static_cast<std::size_t>(n_quantiles));
  const double last = static_cast<double>(z.size() - 1);
  for (int i = 1; i <= n_quantiles; ++i) {
    const double p = (i - 0.5) / n_quantiles;
    const double pos = p * last;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, z.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out.push_back({normal_quantile(p), z[lo] + frac * (z[hi] - z[lo])});
  }
  return out;
}

Money agent_wealth(Money cash, Qty shares, Price mark) { return cash + shares * mark; }

FamilyWealth family_wealth(const RunResult& run) {
  FamilyWealth fw;
  const std::size_t nf = run.families.size();
  fw.wealth.assign(nf, {});
  fw.relative.assign(nf, {});
  fw.average.assign(nf, {});
  fw.shares.assign(nf, {});
  fw.cash.assign(nf, {});
  for (const auto& snap : run.snapshots) {
    const Price mark =
        snap.trade_count == 0 ? run.config.initial_reference_price
                              : run.tape[static_cast<std::size_t>(snap.trade_count - 1)].price;
    fw.trade_count.push_back(snap.trade_count);
    fw.mark.push_back(mark);
    Money total = 0;
    std::vector<Money> w(nf, 0);
    for (std::size_t f = 0; f < nf; ++f) {
      const auto& info = run.families[f];
      Money c = 0;
      Qty s = 0;
      for (std::int64_t k = 0; k < info.n_agents; ++k) {
        const auto a = static_cast<std::size_t>(info.first_agent + k);
        c += snap.cash[a];
        s += snap.shares[a];
      }
      w[f] = agent_wealth(c, s, mark);
      total += w[f];
      fw.cash[f].push_back(c);
      fw.shares[f].push_back(s);
    }
    for (std::size_t f = 0; f < nf; ++f) {
      fw.wealth[f].push_back(w[f]);
      fw.relative[f].push_back(total > 0 ? static_cast<double>(w[f]) / static_cast<double>(total) : 0.0);
      fw.average[f].push_back(static_cast<double>(w[f]) / static_cast<double>(run.families[f].n_agents));
    }
  }
  return fw;
}

std::vector<LeaderboardEntry> leaderboard(const RunResult& run) {
  if (run.snapshots.empty()) return {};
  const FamilyWealth fw = family_wealth(run);
  std::vector<LeaderboardEntry> out;
  for (std::size_t f = 0; f < run.families.size(); ++f) {
    LeaderboardEntry e;
    e.family = run.families[f].id;
    e.name = run.families[f].name;
    e.total_wealth = fw.wealth[f].back();
    e.n_agents = run.families[f].n_agents;
    e.average_wealth = fw.average[f].back();
    out.push_back(std::move(e));
  }
  // Exact comparison of total/n without rounding.
  std::sort(out.begin(), out.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
    const __int128 lhs = static_cast<__int128>(a.total_wealth) * b.n_agents;
    const __int128 rhs = static_cast<__int128>(b.total_wealth) * a.n_agents;
    if (lhs != rhs) return lhs > rhs;
    return a.family < b.family;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

StylizedFactsReport build_report(const RunResult& run, int max_lag) {
  StylizedFactsReport rep;
  rep.max_lag = max_lag;
  rep.n_transactions = static_cast<std::int64_t>(run.tape.size());
  rep.prices = run.prices();
  for (const auto& f : run.families) rep.family_names.push_back(f.name);
  rep.wealth = family_wealth(run);
  rep.leaderboard = leaderboard(run);

  auto null_all = [&](ErrorCode code) {
    for (const char* p : {"acf_raw", "acf_abs", "excess_kurtosis", "qq"}) rep.null_reasons[p] = to_string(code);
  };
  if (rep.prices.size() < static_cast<std::size_t>(max_lag) + 2) {
    if (rep.prices.size() >= 2) rep.n_returns = static_cast<std::int64_t>(rep.prices.size()) - 1;
    null_all(rep.prices.size() < 2 ? ErrorCode::EmptySeries : ErrorCode::InsufficientData);
    return rep;
  }
  const auto r = log_returns(rep.prices);
  rep.n_returns = static_cast<std::int64_t>(r.size());
  rep.noise_band = 2.0 / std::sqrt(static_cast<double>(r.size()));
  std::vector<double> abs_r(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) abs_r[i] = std::fabs(r[i]);

  auto attempt = [&](const char* panel, auto&& fn) {
    try {
      fn();
    } catch (const AnalyticsError& e) {
      rep.null_reasons[panel] = to_string(e.code());
    }
  };
  attempt("acf_raw", [&] { rep.acf_raw = acf(r, max_lag); });
  attempt("acf_abs", [&] { rep.acf_abs = acf(abs_r, max_lag); });
  attempt("excess_kurtosis", [&] { rep.excess_kurtosis = excess_kurtosis(r); });
  attempt("qq", [&] { rep.qq = qq_data(r, static_cast<int>(std::min<std::size_t>(99, r.size()))); });
  return rep;
}

std::string report_to_json(const StylizedFactsReport& rep) {
  auto opt = [](const auto& o) -> json { return o ? json(*o) : json(nullptr); };
  json j;
  j["n_transactions"] = rep.n_transactions;
  j["n_returns"] = rep.n_returns;
  j["max_lag"] = rep.max_lag;
  j["noise_band"] = opt(rep.noise_band);
  j["acf_raw"] = opt(rep.acf_raw);
  j["acf_abs"] = opt(rep.acf_abs);
  j["excess_kurtosis"] = opt(rep.excess_kurtosis);
  if (rep.qq) {
    json qq = json::array();
    for (const auto& p : *rep.qq) qq.push_back(json::array({p.normal_q, p.empirical_q}));
    j["qq"] = qq;
  } else {
    j["qq"] = nullptr;
  }
  j["prices"] = rep.prices;
  j["snapshots"] = {{"trade_count", rep.wealth.trade_count}, {"mark", rep.wealth.mark}};
  json fams = json::array();
  for (std::size_t f = 0; f < rep.family_names.size(); ++f) {
    fams.push_back({{"family", f},
                    {"name", rep.family_names[f]},
                    {"wealth", rep.wealth.wealth[f]},
                    {"relative_wealth", rep.wealth.relative[f]},
                    {"average_wealth", rep.wealth.average[f]},
                    {"shares", rep.wealth.shares[f]},
                    {"cash", rep.wealth.cash[f]}});
  }
  j["families"] = fams;
  json lb = json::array();
  for (const auto& e : rep.leaderboard) {
    lb.push_back({{"rank", e.rank},
                  {"family", e.family},
                  {"name", e.name},
                  {"total_wealth", e.total_wealth},
                  {"n_agents", e.n_agents},
                  {"average_wealth", e.average_wealth}});
  }
  j["leaderboard"] = lb;
  j["null_reasons"] = rep.null_reasons;
  return j.dump() + "\n";
}

namespace {

std::string num(double v) {
  json j = v;
  return j.dump();
}

}  // namespace

std::map<std::string, std::string> report_csvs(const StylizedFactsReport& rep) {
  std::map<std::string, std::string> out;
  std::string acf_csv = "lag,acf_raw,acf_abs,noise_band\n";
  if (rep.acf_raw || rep.acf_abs) {
    for (int k = 0; k <= rep.max_lag; ++k) {
      const auto idx = static_cast<std::size_t>(k);
      acf_csv += std::to_string(k) + "," + (rep.acf_raw ? num((*rep.acf_raw)[idx]) : "") + "," +
                 (rep.acf_abs ? num((*rep.acf_abs)[idx]) : "") + "," + num(rep.noise_band.value_or(0.0)) + "\n";
    }
  }
  out["acf.csv"] = acf_csv;
  std::string qq = "normal_q,empirical_q\n";
  if (rep.qq) {
    for (const auto& p : *rep.qq) qq += num(p.normal_q) + "," + num(p.empirical_q) + "\n";
  }
  out["qq.csv"] = qq;
  std::string price = "tick,price\n";
  for (std::size_t i = 0; i < rep.prices.size(); ++i) {
    price += std::to_string(i + 1) + "," + std::to_string(rep.prices[i]) + "\n";
  }
  out["price.csv"] = price;
  std::string fam = "trade_count,family,name,relative_wealth,average_wealth,shares,cash\n";
  for (std::size_t s = 0; s < rep.wealth.trade_count.size(); ++s) {
    for (std::size_t f = 0; f < rep.family_names.size(); ++f) {
      fam += std::to_string(rep.wealth.trade_count[s]) + "," + std::to_string(f) + "," + rep.family_names[f] + "," +
             num(rep.wealth.relative[f][s]) + "," + num(rep.wealth.average[f][s]) + "," +
             std::to_string(rep.wealth.shares[f][s]) + "," + std::to_string(rep.wealth.cash[f][s]) + "\n";
    }
  }
  out["families.csv"] = fam;
  return out;
}

double fraction_within(const std::vector<double>& a, double band, int max_lag) {
  int hits = 0;
  for (int k = 1; k <= max_lag; ++k) hits += std::fabs(a.at(static_cast<std::size_t>(k))) <= band ? 1 : 0;
  return static_cast<double>(hits) / max_lag;
}

double fraction_above(const std::vector<double>& a, double band, int max_lag) {
  int hits = 0;
  for (int k = 1; k <= max_lag; ++k) hits += a.at(static_cast<std::size_t>(k)) > band ? 1 : 0;
  return static_cast<double>(hits) / max_lag;
}

}  // namespace avatarsim::analytics
