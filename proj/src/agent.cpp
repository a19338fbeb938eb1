#include "avatarsim/agent.hpp"

#include "avatarsim/params.hpp"

namespace avatarsim {

HandlerResult Agent::on_news(double, const MarketView&, Rng&) { return {}; }
HandlerResult Agent::on_message(double, const MarketView&, Rng&) { return {}; }
HandlerResult Agent::on_fill(Qty, const MarketView&, Rng&) { return {}; }

std::string to_string(const Action& action) {
  struct Visitor {
    std::string operator()(const SubmitLimit& a) const {
      return "submit_limit(" + std::string(to_string(a.side)) + ", " + std::to_string(a.price) + ", " +
             std::to_string(a.qty) + ")";
    }
    std::string operator()(const SubmitMarket& a) const {
      return "submit_market(" + std::string(to_string(a.side)) + ", " + std::to_string(a.qty) + ")";
    }
    std::string operator()(const CancelAll&) const { return "cancel_all()"; }
    std::string operator()(const SendMessage& a) const {
      return "send(" + std::to_string(a.to) + ", " + to_string(Value::real(a.value)) + ")";
    }
  };
  return std::visit(Visitor{}, action);
}

}  // namespace avatarsim
