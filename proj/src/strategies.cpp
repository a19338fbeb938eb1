#include "avatarsim/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace avatarsim::strategies {

std::string_view name(Archetype a) noexcept {
  switch (a) {
    case Archetype::Random: return "random";
    case Archetype::Momentum: return "momentum";
    case Archetype::Oscillatory: return "oscillatory";
    case Archetype::Bollinger: return "bollinger";
    case Archetype::VolumeSeeker: return "volume_seeker";
  }
  return "?";
}

std::optional<Archetype> archetype_from_name(std::string_view n) noexcept {
  for (Archetype a : kAllArchetypes) {
    if (name(a) == n) return a;
  }
  return std::nullopt;
}

namespace {

ParamDecl real_param(std::string n, double v) { return {std::move(n), ValueType::Real, Distribution::constant(v)}; }
ParamDecl int_param(std::string n, std::int64_t v) {
  return {std::move(n), ValueType::Int, Distribution::constant(static_cast<double>(v))};
}

std::vector<ParamDecl> with_coupling(std::vector<ParamDecl> decls) {
  decls.push_back(real_param(std::string(kWakeRateParam), kDefaultWakeRate));
  decls.push_back(real_param(std::string(kNewsSensParam), kDefaultNewsSens));
  return decls;
}

}  // namespace

const std::vector<ParamDecl>& param_schema(Archetype a) {
  static const std::vector<ParamDecl> random =
      with_coupling({real_param("p_buy", 0.5), real_param("spread", 0.05), int_param("qmax", 10)});
  static const std::vector<ParamDecl> momentum =
      with_coupling({int_param("lookback", 10), real_param("threshold", 0.01), int_param("qty", 5)});
  static const std::vector<ParamDecl> oscillatory =
      with_coupling({int_param("period", 10 * kMicroticksPerUnit), int_param("qty", 5)});
  static const std::vector<ParamDecl> bollinger =
      with_coupling({int_param("window", 20), real_param("k", 2.0), int_param("qty", 5)});
  static const std::vector<ParamDecl> volume_seeker =
      with_coupling({int_param("window", 20), real_param("multiplier", 2.0), int_param("qty", 5)});
  switch (a) {
    case Archetype::Random: return random;
    case Archetype::Momentum: return momentum;
    case Archetype::Oscillatory: return oscillatory;
    case Archetype::Bollinger: return bollinger;
    case Archetype::VolumeSeeker: return volume_seeker;
  }
  throw std::invalid_argument("unknown archetype");
}

// ---------------------------------------------------------------------------
// Decision rules

std::vector<Action> random_decide(const RandomParams& p, const MarketView& view, Rng& rng, double news) {
  const Side side = rng.uniform01() < p.p_buy ? Side::Buy : Side::Sell;
  const double eps = rng.uniform(-p.spread, p.spread);
  const Qty qty = rng.uniform_int(1, p.qmax);
  const double ref = static_cast<double>(view.ref_price()) * std::exp(p.news_sens * news);
  const Price price = std::max<Price>(1, static_cast<Price>(std::round(ref * (1.0 + eps))));
  return {SubmitLimit{side, price, qty}};
}

std::vector<Action> momentum_decide(const MomentumParams& p, const MarketView& view) {
  const auto r = view.log_return(p.lookback);
  if (!r) return {};
  if (*r > p.threshold) {
    if (view.best_ask) return {SubmitLimit{Side::Buy, *view.best_ask, p.qty}};
    return {};
  }
  if (*r < -p.threshold && view.best_bid) return {SubmitLimit{Side::Sell, *view.best_bid, p.qty}};
  return {};
}

std::vector<Action> oscillatory_decide(const OscillatoryParams& p, const MarketView& view) {
  const std::int64_t phase = (2 * view.time / p.period) % 2;
  if (phase == 0) {
    if (view.best_ask) return {SubmitLimit{Side::Buy, *view.best_ask, p.qty}};
    return {};
  }
  if (view.best_bid) return {SubmitLimit{Side::Sell, *view.best_bid, p.qty}};
  return {};
}

std::vector<Action> bollinger_decide(const BollingerParams& p, const MarketView& view) {
  const auto mean = view.sma(p.window);
  const auto sd = view.stdev(p.window);
  if (!mean || !sd || !(*sd > 0.0)) return {};
  const double last = static_cast<double>(*view.last_price());
  if (last > *mean + p.k * *sd) {
    if (view.best_bid) return {SubmitLimit{Side::Sell, *view.best_bid, p.qty}};
    return {};
  }
  if (last < *mean - p.k * *sd && view.best_ask) return {SubmitLimit{Side::Buy, *view.best_ask, p.qty}};
  return {};
}

std::vector<Action> volume_seeker_decide(const VolumeSeekerParams& p, const MarketView& view, VolumeMemory& memory) {
  const auto v = view.volume(p.window);
  if (!v) return {};
  std::vector<Action> out;
  if (memory.count > 0) {
    const double avg = static_cast<double>(memory.sum) / static_cast<double>(memory.count);
    if (avg > 0.0 && static_cast<double>(*v) > p.multiplier * avg) {
      const auto r = view.log_return(1);
      if (r && *r > 0.0 && view.best_ask) {
        out.push_back(SubmitLimit{Side::Buy, *view.best_ask, p.qty});
      } else if (r && *r < 0.0 && view.best_bid) {
        out.push_back(SubmitLimit{Side::Sell, *view.best_bid, p.qty});
      }
    }
  }
  memory.sum += *v;
  memory.count += 1;
  return out;
}

// ---------------------------------------------------------------------------
// Native agents

namespace {

void require(bool ok, std::string_view archetype, const std::string& what) {
  if (!ok) throw std::invalid_argument(std::string(archetype) + ": " + what);
}

class ArchetypeAgent final : public Agent {
 public:
  ArchetypeAgent(Archetype kind, const std::vector<Value>& v) : kind_(kind) {
    const auto& schema = param_schema(kind);
    require(v.size() == schema.size(), name(kind),
            "expected " + std::to_string(schema.size()) + " parameter values");
    const std::size_t n = schema.size();
    wake_rate_ = v[n - 2].as_real();
    news_sens_ = v[n - 1].as_real();
    require(wake_rate_ > 0.0 && std::isfinite(wake_rate_), name(kind), "wake_rate must be > 0");
    require(std::isfinite(news_sens_), name(kind), "news_sens must be finite");
    switch (kind) {
      case Archetype::Random:
        random_ = {v[0].as_real(), v[1].as_real(), v[2].i, news_sens_};
        require(random_.p_buy >= 0.0 && random_.p_buy <= 1.0, name(kind), "p_buy must be in [0, 1]");
        require(random_.spread >= 0.0, name(kind), "spread must be >= 0");
        require(random_.qmax >= 1, name(kind), "qmax must be >= 1");
        break;
      case Archetype::Momentum:
        momentum_ = {v[0].i, v[1].as_real(), v[2].i};
        require(momentum_.lookback >= 1, name(kind), "lookback must be >= 1");
        require(momentum_.threshold >= 0.0, name(kind), "threshold must be >= 0");
        require(momentum_.qty >= 1, name(kind), "qty must be >= 1");
        break;
      case Archetype::Oscillatory:
        oscillatory_ = {v[0].i, v[1].i};
        require(oscillatory_.period >= 2, name(kind), "period must be >= 2 microticks");
        require(oscillatory_.qty >= 1, name(kind), "qty must be >= 1");
        break;
      case Archetype::Bollinger:
        bollinger_ = {v[0].i, v[1].as_real(), v[2].i};
        require(bollinger_.window >= 2, name(kind), "window must be >= 2");
        require(bollinger_.k > 0.0, name(kind), "k must be > 0");
        require(bollinger_.qty >= 1, name(kind), "qty must be >= 1");
        break;
      case Archetype::VolumeSeeker:
        volume_ = {v[0].i, v[1].as_real(), v[2].i};
        require(volume_.window >= 1, name(kind), "window must be >= 1");
        require(volume_.multiplier > 1.0, name(kind), "multiplier must be > 1");
        require(volume_.qty >= 1, name(kind), "qty must be >= 1");
        break;
    }
  }

  HandlerResult on_wake(const MarketView& view, Rng& rng) override {
    switch (kind_) {
      case Archetype::Random: {
        auto acts = random_decide(random_, view, rng, pending_news_);
        pending_news_ = 0.0;
        return {std::move(acts), std::nullopt};
      }
      case Archetype::Momentum: return {momentum_decide(momentum_, view), std::nullopt};
      case Archetype::Oscillatory: return {oscillatory_decide(oscillatory_, view), std::nullopt};
      case Archetype::Bollinger: return {bollinger_decide(bollinger_, view), std::nullopt};
      case Archetype::VolumeSeeker: return {volume_seeker_decide(volume_, view, memory_), std::nullopt};
    }
    return {};
  }

  HandlerResult on_news(double value, const MarketView&, Rng&) override {
    pending_news_ += value;
    return {};
  }

  double wake_rate() const override { return wake_rate_; }
  double news_sens() const override { return news_sens_; }

 private:
  Archetype kind_;
  double wake_rate_ = kDefaultWakeRate;
  double news_sens_ = kDefaultNewsSens;
  double pending_news_ = 0.0;  // news received since the last wake
  RandomParams random_;
  MomentumParams momentum_;
  OscillatoryParams oscillatory_;
  BollingerParams bollinger_;
  VolumeSeekerParams volume_;
  VolumeMemory memory_;
};

}  // namespace

std::unique_ptr<Agent> make_agent(Archetype a, const std::vector<Value>& params) {
  return std::make_unique<ArchetypeAgent>(a, params);
}

}  // namespace avatarsim::strategies
