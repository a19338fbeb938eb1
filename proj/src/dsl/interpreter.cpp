#include "avatarsim/dsl/interpreter.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace avatarsim::dsl {
namespace {

struct EvalFailure {
  std::string message;
  SourcePos pos;
};

[[noreturn]] void eval_fail(SourcePos pos, std::string message) { throw EvalFailure{std::move(message), pos}; }

constexpr double kIntLimit = 0x1.0p62;

std::int64_t to_int(double x, SourcePos pos) {
  if (!std::isfinite(x) || std::fabs(x) >= kIntLimit) eval_fail(pos, "value out of integer range");
  return static_cast<std::int64_t>(x);
}

Value optional_int(const std::optional<std::int64_t>& v) { return v ? Value::integer(*v) : Value::nil(); }
Value optional_real(const std::optional<double>& v) { return v ? Value::real(*v) : Value::nil(); }

Value finite_real(double x, SourcePos pos) {
  if (!std::isfinite(x)) eval_fail(pos, "non-finite result");
  return Value::real(x);
}

class Evaluator {
 public:
  Evaluator(const std::vector<Value>& params, std::vector<Value>& state, std::vector<Value>& locals,
            const MarketView* view, Rng* rng, std::vector<Action>* out)
      : params_(params), state_(state), locals_(locals), view_(view), rng_(rng), out_(out) {}

  void run(const std::vector<CompiledStmt>& body) {
    for (const auto& s : body) statement(s);
  }

  Value eval(const Node& n) {
    switch (n.op) {
      case Op::Literal: return n.literal;
      case Op::Param: return params_[static_cast<std::size_t>(n.index)];
      case Op::State: return state_[static_cast<std::size_t>(n.index)];
      case Op::Local: return locals_[static_cast<std::size_t>(n.index)];
      case Op::Accessor: return accessor(static_cast<Accessor>(n.index));
      case Op::Window: return window(n);
      case Op::Function: return function(n);
      case Op::Random: return random(n);
      case Op::Neg: {
        const Value v = number(n.kids[0]);
        if (v.kind == Value::Kind::Int) {
          if (v.i == std::numeric_limits<std::int64_t>::min()) eval_fail(n.pos, "integer overflow");
          return Value::integer(-v.i);
        }
        return Value::real(-v.r);
      }
      case Op::Not: return Value::boolean(!eval(n.kids[0]).b);
      case Op::And: return Value::boolean(eval(n.kids[0]).b && eval(n.kids[1]).b);
      case Op::Or: return Value::boolean(eval(n.kids[0]).b || eval(n.kids[1]).b);
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::Mod: return arithmetic(n);
      case Op::Lt:
      case Op::Le:
      case Op::Gt:
      case Op::Ge:
      case Op::Eq:
      case Op::Ne: return comparison(n);
    }
    eval_fail(n.pos, "bad node");
  }

 private:
  Value number(const Node& n) {
    Value v = eval(n);
    if (v.is_nil()) eval_fail(n.pos, "nil in arithmetic");
    return v;
  }

  Value arithmetic(const Node& n) {
    const Value a = number(n.kids[0]);
    const Value b = number(n.kids[1]);
    if (n.op == Op::Div) {
      const double d = b.as_real();
      if (d == 0.0) eval_fail(n.pos, "division by zero");
      return finite_real(a.as_real() / d, n.pos);
    }
    if (a.kind == Value::Kind::Int && b.kind == Value::Kind::Int) {
      std::int64_t r = 0;
      bool overflow = false;
      switch (n.op) {
        case Op::Add: overflow = __builtin_add_overflow(a.i, b.i, &r); break;
        case Op::Sub: overflow = __builtin_sub_overflow(a.i, b.i, &r); break;
        case Op::Mul: overflow = __builtin_mul_overflow(a.i, b.i, &r); break;
        case Op::Mod:
          if (b.i == 0) eval_fail(n.pos, "modulo by zero");
          if (b.i == -1) return Value::integer(0);
          r = a.i % b.i;
          if (r != 0 && ((r < 0) != (b.i < 0))) r += b.i;
          break;
        default: break;
      }
      if (overflow) eval_fail(n.pos, "integer overflow");
      return Value::integer(r);
    }
    const double x = a.as_real();
    const double y = b.as_real();
    switch (n.op) {
      case Op::Add: return finite_real(x + y, n.pos);
      case Op::Sub: return finite_real(x - y, n.pos);
      case Op::Mul: return finite_real(x * y, n.pos);
      default: eval_fail(n.pos, "bad arithmetic");
    }
  }

  Value comparison(const Node& n) {
    const Value a = eval(n.kids[0]);
    const Value b = eval(n.kids[1]);
    if (a.is_nil() || b.is_nil()) return Value::boolean(false);
    if (a.kind == Value::Kind::Bool) {
      return Value::boolean(n.op == Op::Eq ? a.b == b.b : a.b != b.b);
    }
    if (a.kind == Value::Kind::Int && b.kind == Value::Kind::Int) {
      switch (n.op) {
        case Op::Lt: return Value::boolean(a.i < b.i);
        case Op::Le: return Value::boolean(a.i <= b.i);
        case Op::Gt: return Value::boolean(a.i > b.i);
        case Op::Ge: return Value::boolean(a.i >= b.i);
        case Op::Eq: return Value::boolean(a.i == b.i);
        default: return Value::boolean(a.i != b.i);
      }
    }
    const double x = a.as_real();
    const double y = b.as_real();
    switch (n.op) {
      case Op::Lt: return Value::boolean(x < y);
      case Op::Le: return Value::boolean(x <= y);
      case Op::Gt: return Value::boolean(x > y);
      case Op::Ge: return Value::boolean(x >= y);
      case Op::Eq: return Value::boolean(x == y);
      default: return Value::boolean(x != y);
    }
  }

  Value accessor(Accessor a) {
    const MarketView& v = *view_;
    switch (a) {
      case Accessor::LastPrice: return optional_int(v.last_price());
      case Accessor::BestBid: return optional_int(v.best_bid);
      case Accessor::BestAsk: return optional_int(v.best_ask);
      case Accessor::Mid: return optional_real(v.mid());
      case Accessor::RefPrice: return Value::integer(v.ref_price());
      case Accessor::InitialPrice: return Value::integer(v.initial_price);
      case Accessor::Time: return Value::integer(v.time);
      case Accessor::TradeCount: return Value::integer(static_cast<std::int64_t>(v.visible_trades));
      case Accessor::AgentCount: return Value::integer(v.agent_count);
      case Accessor::MyCash: return Value::integer(v.cash);
      case Accessor::MyShares: return Value::integer(v.shares);
      case Accessor::MyWealth: return Value::integer(v.wealth());
      case Accessor::MyAvailableCash: return Value::integer(v.available_cash);
      case Accessor::MyAvailableShares: return Value::integer(v.available_shares);
      case Accessor::MyId: return Value::integer(v.self);
      case Accessor::MyFamily: return Value::integer(v.family);
    }
    return Value::nil();
  }

  Value window(const Node& n) {
    const Value w = number(n.kids[0]);
    switch (static_cast<WindowFn>(n.index)) {
      case WindowFn::Sma: return optional_real(view_->sma(w.i));
      case WindowFn::Std: return optional_real(view_->stdev(w.i));
      case WindowFn::LogReturn: return optional_real(view_->log_return(w.i));
      case WindowFn::Volume: return optional_int(view_->volume(w.i));
    }
    return Value::nil();
  }

  Value function(const Node& n) {
    const auto fn = static_cast<Function>(n.index);
    if (fn == Function::Defined) return Value::boolean(!eval(n.kids[0]).is_nil());
    const Value a = number(n.kids[0]);
    switch (fn) {
      case Function::Abs:
        if (a.kind == Value::Kind::Int) {
          if (a.i == std::numeric_limits<std::int64_t>::min()) eval_fail(n.pos, "integer overflow");
          return Value::integer(a.i < 0 ? -a.i : a.i);
        }
        return Value::real(std::fabs(a.r));
      case Function::Min:
      case Function::Max: {
        const Value b = number(n.kids[1]);
        const bool want_min = fn == Function::Min;
        if (a.kind == Value::Kind::Int && b.kind == Value::Kind::Int) {
          return Value::integer(want_min ? std::min(a.i, b.i) : std::max(a.i, b.i));
        }
        return Value::real(want_min ? std::min(a.as_real(), b.as_real()) : std::max(a.as_real(), b.as_real()));
      }
      case Function::Floor:
        return a.kind == Value::Kind::Int ? a : Value::integer(to_int(std::floor(a.r), n.pos));
      case Function::Ceil:
        return a.kind == Value::Kind::Int ? a : Value::integer(to_int(std::ceil(a.r), n.pos));
      case Function::Round:
        return a.kind == Value::Kind::Int ? a : Value::integer(to_int(std::round(a.r), n.pos));
      case Function::Trunc:
        return a.kind == Value::Kind::Int ? a : Value::integer(to_int(std::trunc(a.r), n.pos));
      case Function::Exp: return finite_real(std::exp(a.as_real()), n.pos);
      case Function::Ln:
        if (a.as_real() <= 0.0) eval_fail(n.pos, "ln of a non-positive value");
        return Value::real(std::log(a.as_real()));
      case Function::Sqrt:
        if (a.as_real() < 0.0) eval_fail(n.pos, "sqrt of a negative value");
        return Value::real(std::sqrt(a.as_real()));
      case Function::Sign: {
        const double x = a.as_real();
        return Value::integer(x > 0 ? 1 : (x < 0 ? -1 : 0));
      }
      case Function::ToReal: return Value::real(a.as_real());
      case Function::Defined: break;
    }
    eval_fail(n.pos, "bad function");
  }

  Value random(const Node& n) {
    Rng& rng = *rng_;
    switch (static_cast<RandomFn>(n.index)) {
      case RandomFn::Rand: return Value::real(rng.uniform01());
      case RandomFn::Uniform: {
        const double a = number(n.kids[0]).as_real();
        const double b = number(n.kids[1]).as_real();
        if (a > b) eval_fail(n.pos, "uniform(a, b) needs a <= b");
        return finite_real(rng.uniform(a, b), n.pos);
      }
      case RandomFn::UniformInt: {
        const std::int64_t a = number(n.kids[0]).i;
        const std::int64_t b = number(n.kids[1]).i;
        if (a > b) eval_fail(n.pos, "uniform_int(a, b) needs a <= b");
        return Value::integer(rng.uniform_int(a, b));
      }
      case RandomFn::Normal: {
        const double m = number(n.kids[0]).as_real();
        const double s = number(n.kids[1]).as_real();
        if (s < 0) eval_fail(n.pos, "normal(mu, sigma) needs sigma >= 0");
        return finite_real(rng.normal(m, s), n.pos);
      }
    }
    eval_fail(n.pos, "bad random function");
  }

  static Value coerce(ValueType target, Value v) {
    if (target == ValueType::Real && v.kind == Value::Kind::Int) return Value::real(static_cast<double>(v.i));
    return v;
  }

  // Truncates an action argument toward zero.
  std::int64_t action_int(const Node& n) {
    const Value v = eval(n);
    if (v.is_nil()) eval_fail(n.pos, "nil action argument");
    if (v.kind == Value::Kind::Int) return v.i;
    return to_int(std::trunc(v.r), n.pos);
  }

  void statement(const CompiledStmt& s) {
    switch (s.kind) {
      case CompiledStmt::Kind::SetLocal:
        locals_[static_cast<std::size_t>(s.index)] = coerce(s.target_type, eval(s.expr));
        return;
      case CompiledStmt::Kind::SetState:
        state_[static_cast<std::size_t>(s.index)] = coerce(s.target_type, eval(s.expr));
        return;
      case CompiledStmt::Kind::If:
        run(eval(s.expr).b ? s.then_body : s.else_body);
        return;
      case CompiledStmt::Kind::Action: action(s); return;
    }
  }

  void action(const CompiledStmt& s) {
    switch (s.action) {
      case ActionKind::SubmitLimit: {
        const Price price = action_int(s.args[0]);
        const Qty qty = action_int(s.args[1]);
        if (qty >= 1) out_->push_back(SubmitLimit{s.side, price, qty});
        return;
      }
      case ActionKind::SubmitMarket: {
        const Qty qty = action_int(s.args[0]);
        if (qty >= 1) out_->push_back(SubmitMarket{s.side, qty});
        return;
      }
      case ActionKind::CancelAll: out_->push_back(CancelAll{}); return;
      case ActionKind::Send: {
        const std::int64_t to = action_int(s.args[0]);
        const Value v = eval(s.args[1]);
        if (v.is_nil()) eval_fail(s.args[1].pos, "nil action argument");
        out_->push_back(SendMessage{to, v.as_real()});
        return;
      }
    }
  }

  const std::vector<Value>& params_;
  std::vector<Value>& state_;
  std::vector<Value>& locals_;
  const MarketView* view_;
  Rng* rng_;
  std::vector<Action>* out_;
};

double param_or(const AgentInstance& inst, std::int32_t index, double fallback) {
  if (index < 0) return fallback;
  return inst.params[static_cast<std::size_t>(index)].as_real();
}

}  // namespace

AgentInstance make_instance(const Program& program, std::vector<Value> params, std::int64_t member) {
  AgentInstance inst;
  inst.member = member;
  inst.params = std::move(params);
  inst.wake_rate = param_or(inst, program.wake_rate_param, kDefaultWakeRate);
  inst.news_sens = param_or(inst, program.news_sens_param, kDefaultNewsSens);
  if (!(inst.wake_rate > 0.0) || !std::isfinite(inst.wake_rate)) {
    throw DistributionError("sampled wake_rate must be positive and finite, got " +
                            to_string(Value::real(inst.wake_rate)));
  }
  if (!std::isfinite(inst.news_sens)) throw DistributionError("sampled news_sens must be finite");

  inst.state.resize(program.state_init.size());
  std::vector<Value> no_locals;
  Evaluator ev(inst.params, inst.state, no_locals, nullptr, nullptr, nullptr);
  for (std::size_t i = 0; i < program.state_init.size(); ++i) {
    Value v;
    try {
      v = ev.eval(program.state_init[i]);
    } catch (const EvalFailure& f) {
      throw DistributionError("state '" + program.spec.states[i].name + "' initializer failed: " + f.message);
    }
    if (program.state_types[i] == ValueType::Real && v.kind == Value::Kind::Int) v = Value::real(static_cast<double>(v.i));
    inst.state[i] = v;
  }
  return inst;
}

std::vector<AgentInstance> instantiate_family(const Program& program, std::int64_t n, std::uint64_t family_seed) {
  auto sampled = sample_family(program.spec.params, n, family_seed);
  std::vector<AgentInstance> out;
  out.reserve(sampled.size());
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    out.push_back(make_instance(program, std::move(sampled[k]), static_cast<std::int64_t>(k)));
  }
  return out;
}

ScriptAgent::ScriptAgent(std::shared_ptr<const Program> program, AgentInstance instance)
    : program_(std::move(program)), instance_(std::move(instance)) {}

HandlerResult ScriptAgent::dispatch(EventKind event, Value argument, const MarketView& view, Rng& rng) {
  const CompiledHandler& h = program_->handler(event);
  HandlerResult result;
  if (!h.present) return result;
  std::vector<Value> locals(static_cast<std::size_t>(h.local_count));
  if (event != EventKind::Wake) locals[0] = argument;
  std::vector<Value> saved_state = instance_.state;
  Evaluator ev(instance_.params, instance_.state, locals, &view, &rng, &result.actions);
  try {
    ev.run(h.body);
  } catch (const EvalFailure& f) {
    instance_.state = std::move(saved_state);
    result.actions.clear();
    result.error = std::to_string(f.pos.line) + ":" + std::to_string(f.pos.column) + ": " + f.message;
  }
  return result;
}

HandlerResult ScriptAgent::on_wake(const MarketView& view, Rng& rng) {
  return dispatch(EventKind::Wake, Value::nil(), view, rng);
}

HandlerResult ScriptAgent::on_news(double value, const MarketView& view, Rng& rng) {
  return dispatch(EventKind::News, Value::real(value), view, rng);
}

HandlerResult ScriptAgent::on_message(double value, const MarketView& view, Rng& rng) {
  return dispatch(EventKind::Message, Value::real(value), view, rng);
}

HandlerResult ScriptAgent::on_fill(Qty signed_qty, const MarketView& view, Rng& rng) {
  return dispatch(EventKind::Trade, Value::integer(signed_qty), view, rng);
}

bool ScriptAgent::handles_fills() const { return program_->handler(EventKind::Trade).present; }

}  // namespace avatarsim::dsl
