#include "avatarsim/dsl/compiler.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace avatarsim::dsl {
namespace {

[[noreturn]] void type_fail(SourcePos pos, std::string message) {
  throw AvatarError(AvatarError::Kind::Type, pos, std::move(message));
}

struct AccessorInfo {
  Accessor code;
  ValueType type;
};

const std::map<std::string, AccessorInfo, std::less<>>& market_accessors() {
  static const std::map<std::string, AccessorInfo, std::less<>> table = {
      {"last_price", {Accessor::LastPrice, ValueType::Int}},
      {"best_bid", {Accessor::BestBid, ValueType::Int}},
      {"best_ask", {Accessor::BestAsk, ValueType::Int}},
      {"mid", {Accessor::Mid, ValueType::Real}},
      {"ref_price", {Accessor::RefPrice, ValueType::Int}},
      {"initial_price", {Accessor::InitialPrice, ValueType::Int}},
      {"time", {Accessor::Time, ValueType::Int}},
      {"trade_count", {Accessor::TradeCount, ValueType::Int}},
      {"agent_count", {Accessor::AgentCount, ValueType::Int}},
  };
  return table;
}

const std::map<std::string, AccessorInfo, std::less<>>& own_accessors() {
  static const std::map<std::string, AccessorInfo, std::less<>> table = {
      {"cash", {Accessor::MyCash, ValueType::Int}},
      {"shares", {Accessor::MyShares, ValueType::Int}},
      {"wealth", {Accessor::MyWealth, ValueType::Int}},
      {"available_cash", {Accessor::MyAvailableCash, ValueType::Int}},
      {"available_shares", {Accessor::MyAvailableShares, ValueType::Int}},
      {"id", {Accessor::MyId, ValueType::Int}},
      {"family", {Accessor::MyFamily, ValueType::Int}},
  };
  return table;
}

struct CallInfo {
  Op op;
  std::int32_t code;
  std::size_t arity;
};

const std::map<std::string, CallInfo, std::less<>>& callables() {
  auto fn = [](Function f, std::size_t n) { return CallInfo{Op::Function, static_cast<std::int32_t>(f), n}; };
  auto win = [](WindowFn f) { return CallInfo{Op::Window, static_cast<std::int32_t>(f), 1}; };
  auto rnd = [](RandomFn f, std::size_t n) { return CallInfo{Op::Random, static_cast<std::int32_t>(f), n}; };
  static const std::map<std::string, CallInfo, std::less<>> table = {
      {"abs", fn(Function::Abs, 1)},
      {"min", fn(Function::Min, 2)},
      {"max", fn(Function::Max, 2)},
      {"floor", fn(Function::Floor, 1)},
      {"ceil", fn(Function::Ceil, 1)},
      {"round", fn(Function::Round, 1)},
      {"trunc", fn(Function::Trunc, 1)},
      {"exp", fn(Function::Exp, 1)},
      {"ln", fn(Function::Ln, 1)},
      {"sqrt", fn(Function::Sqrt, 1)},
      {"sign", fn(Function::Sign, 1)},
      {"defined", fn(Function::Defined, 1)},
      {"real", fn(Function::ToReal, 1)},
      {"sma", win(WindowFn::Sma)},
      {"std", win(WindowFn::Std)},
      {"log_return", win(WindowFn::LogReturn)},
      {"volume", win(WindowFn::Volume)},
      {"rand", rnd(RandomFn::Rand, 0)},
      {"uniform", rnd(RandomFn::Uniform, 2)},
      {"uniform_int", rnd(RandomFn::UniformInt, 2)},
      {"normal", rnd(RandomFn::Normal, 2)},
  };
  return table;
}

bool is_reserved_word(std::string_view s) {
  static constexpr std::string_view kWords[] = {"avatar", "param", "state", "on",   "let",   "if",   "else",
                                                "and",    "or",    "not",   "true", "false", "nil",  "buy",
                                                "sell",   "my",    "int",   "real", "bool",  "submit_limit",
                                                "submit_market", "cancel_all", "send"};
  for (auto w : kWords) {
    if (s == w) return true;
  }
  return false;
}

bool numeric(ValueType t) { return t == ValueType::Int || t == ValueType::Real; }

const char* type_name(ValueType t) { return to_string(t).data(); }

// Expression typing contexts.
enum class Context { StateInit, Handler };

struct LocalVar {
  std::int32_t slot;
  ValueType type;
  bool assignable;
};

class Compiler {
 public:
  explicit Compiler(const AvatarSpec& spec) : spec_(spec) {}

  std::shared_ptr<const Program> run() {
    auto program = std::make_shared<Program>();
    program->spec = spec_;

    for (std::size_t i = 0; i < spec_.params.size(); ++i) {
      const auto& p = spec_.params[i];
      const SourcePos pos = i < spec_.param_pos.size() ? spec_.param_pos[i] : SourcePos{};
      declare_global(p.name, pos);
      try {
        validate(p);
      } catch (const DistributionError& e) {
        type_fail(pos, e.what());
      }
      if (p.name == kWakeRateParam || p.name == kNewsSensParam) {
        if (p.type != ValueType::Real) type_fail(pos, "'" + p.name + "' must be declared real");
      }
      if (p.name == kWakeRateParam) {
        program->wake_rate_param = static_cast<std::int32_t>(i);
        const bool nonpositive_constant = p.dist.kind == Distribution::Kind::Constant && p.dist.a <= 0;
        const bool nonpositive_support =
            (p.dist.kind == Distribution::Kind::Uniform || p.dist.kind == Distribution::Kind::UniformInt) &&
            p.dist.a <= 0;
        const bool unbounded = p.dist.kind == Distribution::Kind::Normal && p.dist.b > 0;
        if (nonpositive_constant || nonpositive_support || unbounded) {
          type_fail(pos, "'wake_rate' must be drawn from a strictly positive support");
        }
      }
      if (p.name == kNewsSensParam) program->news_sens_param = static_cast<std::int32_t>(i);
      params_.emplace(p.name, static_cast<std::int32_t>(i));
    }

    for (std::size_t i = 0; i < spec_.states.size(); ++i) {
      const auto& s = spec_.states[i];
      declare_global(s.name, s.pos);
      context_ = Context::StateInit;
      Node init = expr(s.init);
      check_assignable(s.type, init, s.pos, "state '" + s.name + "'");
      program->state_init.push_back(std::move(init));
      program->state_types.push_back(s.type);
      states_.emplace(s.name, std::pair{static_cast<std::int32_t>(i), s.type});
    }

    for (const auto& h : spec_.handlers) {
      auto& out = program->handlers[static_cast<std::size_t>(h.event)];
      if (out.present) type_fail(h.pos, std::string("duplicate handler 'on ") + to_string(h.event) + "'");
      out.present = true;
      context_ = Context::Handler;
      scopes_.clear();
      scopes_.emplace_back();
      next_slot_ = 0;
      if (h.event != EventKind::Wake) {
        if (taken(h.binder)) type_fail(h.pos, "event parameter '" + h.binder + "' shadows an existing name");
        const ValueType binder_type = h.event == EventKind::Trade ? ValueType::Int : ValueType::Real;
        scopes_.back().emplace(h.binder, LocalVar{next_slot_++, binder_type, false});
      } else {
        next_slot_ = 1;  // slot 0 unused for wake
      }
      out.body = block(h.body);
      out.local_count = next_slot_;
    }
    return program;
  }

 private:
  bool taken(const std::string& name) const {
    if (is_reserved_word(name) || market_accessors().contains(name) || callables().contains(name)) return true;
    if (params_.contains(name) || states_.contains(name)) return true;
    for (const auto& scope : scopes_) {
      if (scope.contains(name)) return true;
    }
    return false;
  }

  void declare_global(const std::string& name, SourcePos pos) {
    if (taken(name)) type_fail(pos, "'" + name + "' is already defined or reserved");
  }

  static void check_assignable(ValueType target, const Node& value, SourcePos pos, const std::string& what) {
    if (value.op == Op::Literal && value.literal.is_nil()) return;
    if (target == value.type) return;
    if (target == ValueType::Real && value.type == ValueType::Int) return;
    type_fail(pos, "cannot assign " + std::string(type_name(value.type)) + " to " + type_name(target) + " " + what +
                       (target == ValueType::Int && value.type == ValueType::Real
                            ? " (use floor, ceil, round or trunc)"
                            : ""));
  }

  std::vector<CompiledStmt> block(const std::vector<Stmt>& body) {
    scopes_.emplace_back();
    std::vector<CompiledStmt> out;
    out.reserve(body.size());
    for (const auto& s : body) out.push_back(statement(s));
    scopes_.pop_back();
    return out;
  }

  const LocalVar* find_local(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  CompiledStmt statement(const Stmt& s) {
    CompiledStmt c;
    c.pos = s.pos;
    switch (s.kind) {
      case Stmt::Kind::Let: {
        Node value = expr(s.expr);
        if (value.op == Op::Literal && value.literal.is_nil()) {
          type_fail(s.pos, "cannot infer the type of 'let " + s.name + " = nil'");
        }
        if (taken(s.name)) type_fail(s.pos, "'" + s.name + "' is already defined or reserved");
        c.kind = CompiledStmt::Kind::SetLocal;
        c.index = next_slot_++;
        c.target_type = value.type;
        c.expr = std::move(value);
        scopes_.back().emplace(s.name, LocalVar{c.index, c.target_type, true});
        return c;
      }
      case Stmt::Kind::Assign: {
        Node value = expr(s.expr);
        if (const LocalVar* local = find_local(s.name)) {
          if (!local->assignable) type_fail(s.pos, "event parameter '" + s.name + "' is read-only");
          c.kind = CompiledStmt::Kind::SetLocal;
          c.index = local->slot;
          c.target_type = local->type;
        } else if (auto st = states_.find(s.name); st != states_.end()) {
          c.kind = CompiledStmt::Kind::SetState;
          c.index = st->second.first;
          c.target_type = st->second.second;
        } else if (params_.contains(s.name)) {
          type_fail(s.pos, "cannot assign to parameter '" + s.name + "'");
        } else {
          type_fail(s.pos, "undeclared variable '" + s.name + "'");
        }
        check_assignable(c.target_type, value, s.pos, "'" + s.name + "'");
        c.expr = std::move(value);
        return c;
      }
      case Stmt::Kind::If: {
        c.kind = CompiledStmt::Kind::If;
        c.expr = expr(s.expr);
        if (c.expr.type != ValueType::Bool) type_fail(s.expr.pos, "'if' condition must be bool");
        c.then_body = block(s.then_body);
        c.else_body = block(s.else_body);
        return c;
      }
      case Stmt::Kind::Action: {
        c.kind = CompiledStmt::Kind::Action;
        c.action = s.action;
        c.side = s.side;
        for (const auto& a : s.args) {
          Node n = expr(a);
          if (!numeric(n.type)) type_fail(a.pos, "action arguments must be numeric");
          c.args.push_back(std::move(n));
        }
        return c;
      }
    }
    type_fail(s.pos, "unknown statement");
  }

  Node expr(const Expr& e) {
    Node n;
    n.pos = e.pos;
    switch (e.kind) {
      case Expr::Kind::Literal:
        n.op = Op::Literal;
        n.literal = e.literal;
        switch (e.literal.kind) {
          case Value::Kind::Nil: n.type = ValueType::Real; break;
          case Value::Kind::Bool: n.type = ValueType::Bool; break;
          case Value::Kind::Int: n.type = ValueType::Int; break;
          case Value::Kind::Real: n.type = ValueType::Real; break;
        }
        return n;
      case Expr::Kind::Name: return name(e);
      case Expr::Kind::Member: {
        if (e.name != "my") type_fail(e.pos, "unknown object '" + e.name + "' (only 'my' has fields)");
        auto it = own_accessors().find(e.member);
        if (it == own_accessors().end()) type_fail(e.pos, "unknown field 'my." + e.member + "'");
        market_only(e.pos, "my." + e.member);
        n.op = Op::Accessor;
        n.index = static_cast<std::int32_t>(it->second.code);
        n.type = it->second.type;
        return n;
      }
      case Expr::Kind::Call: return call(e);
      case Expr::Kind::Unary: {
        Node operand = expr(e.args[0]);
        reject_nil_literal(operand);
        if (e.unary_op == UnaryOp::Not) {
          if (operand.type != ValueType::Bool) type_fail(e.pos, "'not' needs a bool operand");
          n.op = Op::Not;
          n.type = ValueType::Bool;
        } else {
          if (!numeric(operand.type)) type_fail(e.pos, "'-' needs a numeric operand");
          n.op = Op::Neg;
          n.type = operand.type;
        }
        n.kids.push_back(std::move(operand));
        return n;
      }
      case Expr::Kind::Binary: return binary(e);
    }
    type_fail(e.pos, "unknown expression");
  }

  void market_only(SourcePos pos, const std::string& what) const {
    if (context_ == Context::StateInit) type_fail(pos, "'" + what + "' is not available in state initializers");
  }

  static void reject_nil_literal(const Node& n) {
    if (n.op == Op::Literal && n.literal.is_nil()) type_fail(n.pos, "'nil' cannot be used as an operand");
  }

  Node name(const Expr& e) {
    Node n;
    n.pos = e.pos;
    if (context_ == Context::Handler) {
      if (const LocalVar* local = find_local(e.name)) {
        n.op = Op::Local;
        n.index = local->slot;
        n.type = local->type;
        return n;
      }
    }
    if (auto st = states_.find(e.name); st != states_.end()) {
      n.op = Op::State;
      n.index = st->second.first;
      n.type = st->second.second;
      return n;
    }
    if (auto p = params_.find(e.name); p != params_.end()) {
      n.op = Op::Param;
      n.index = p->second;
      n.type = spec_.params[static_cast<std::size_t>(p->second)].type;
      return n;
    }
    if (auto a = market_accessors().find(e.name); a != market_accessors().end()) {
      market_only(e.pos, e.name);
      n.op = Op::Accessor;
      n.index = static_cast<std::int32_t>(a->second.code);
      n.type = a->second.type;
      return n;
    }
    if (callables().contains(e.name)) type_fail(e.pos, "'" + e.name + "' is a function; call it with (...)");
    type_fail(e.pos, "undeclared identifier '" + e.name + "'");
  }

  Node call(const Expr& e) {
    auto it = callables().find(e.name);
    if (it == callables().end()) type_fail(e.pos, "unknown function '" + e.name + "'");
    const CallInfo info = it->second;
    if (e.args.size() != info.arity) {
      type_fail(e.pos, "'" + e.name + "' takes " + std::to_string(info.arity) + " argument" +
                           (info.arity == 1 ? "" : "s") + ", got " + std::to_string(e.args.size()));
    }
    Node n;
    n.pos = e.pos;
    n.op = info.op;
    n.index = info.code;
    for (const auto& a : e.args) n.kids.push_back(expr(a));

    const bool defined_call = info.op == Op::Function && static_cast<Function>(info.code) == Function::Defined;
    for (const auto& k : n.kids) {
      if (!defined_call) reject_nil_literal(k);
      if (!defined_call && !numeric(k.type)) type_fail(k.pos, "'" + e.name + "' needs numeric arguments");
    }

    auto all_int = [&n] {
      for (const auto& k : n.kids) {
        if (k.type != ValueType::Int) return false;
      }
      return true;
    };

    switch (info.op) {
      case Op::Window:
        market_only(e.pos, e.name);
        if (n.kids[0].type != ValueType::Int) type_fail(e.pos, "'" + e.name + "' window must be int");
        n.type = static_cast<WindowFn>(info.code) == WindowFn::Volume ? ValueType::Int : ValueType::Real;
        break;
      case Op::Random:
        market_only(e.pos, e.name);
        if (static_cast<RandomFn>(info.code) == RandomFn::UniformInt) {
          if (!all_int()) type_fail(e.pos, "'uniform_int' bounds must be int");
          n.type = ValueType::Int;
        } else {
          n.type = ValueType::Real;
        }
        break;
      case Op::Function:
        switch (static_cast<Function>(info.code)) {
          case Function::Abs: n.type = n.kids[0].type; break;
          case Function::Min:
          case Function::Max: n.type = all_int() ? ValueType::Int : ValueType::Real; break;
          case Function::Floor:
          case Function::Ceil:
          case Function::Round:
          case Function::Trunc:
          case Function::Sign: n.type = ValueType::Int; break;
          case Function::Exp:
          case Function::Ln:
          case Function::Sqrt:
          case Function::ToReal: n.type = ValueType::Real; break;
          case Function::Defined: n.type = ValueType::Bool; break;
        }
        break;
      default: break;
    }
    return n;
  }

  Node binary(const Expr& e) {
    Node lhs = expr(e.args[0]);
    Node rhs = expr(e.args[1]);
    reject_nil_literal(lhs);
    reject_nil_literal(rhs);
    Node n;
    n.pos = e.pos;
    const auto op = e.binary_op;
    auto need_numeric = [&](const char* sym) {
      if (!numeric(lhs.type) || !numeric(rhs.type)) {
        type_fail(e.pos, std::string("'") + sym + "' needs numeric operands, got " + type_name(lhs.type) + " and " +
                             type_name(rhs.type));
      }
    };
    const bool both_int = lhs.type == ValueType::Int && rhs.type == ValueType::Int;
    switch (op) {
      case BinaryOp::Or:
      case BinaryOp::And:
        if (lhs.type != ValueType::Bool || rhs.type != ValueType::Bool) {
          type_fail(e.pos, std::string("'") + (op == BinaryOp::Or ? "or" : "and") + "' needs bool operands");
        }
        n.op = op == BinaryOp::Or ? Op::Or : Op::And;
        n.type = ValueType::Bool;
        break;
      case BinaryOp::Eq:
      case BinaryOp::Ne:
        if (!(numeric(lhs.type) && numeric(rhs.type)) &&
            !(lhs.type == ValueType::Bool && rhs.type == ValueType::Bool)) {
          type_fail(e.pos, "cannot compare " + std::string(type_name(lhs.type)) + " with " + type_name(rhs.type));
        }
        n.op = op == BinaryOp::Eq ? Op::Eq : Op::Ne;
        n.type = ValueType::Bool;
        break;
      case BinaryOp::Lt: need_numeric("<"); n.op = Op::Lt; n.type = ValueType::Bool; break;
      case BinaryOp::Le: need_numeric("<="); n.op = Op::Le; n.type = ValueType::Bool; break;
      case BinaryOp::Gt: need_numeric(">"); n.op = Op::Gt; n.type = ValueType::Bool; break;
      case BinaryOp::Ge: need_numeric(">="); n.op = Op::Ge; n.type = ValueType::Bool; break;
      case BinaryOp::Add: need_numeric("+"); n.op = Op::Add; n.type = both_int ? ValueType::Int : ValueType::Real; break;
      case BinaryOp::Sub: need_numeric("-"); n.op = Op::Sub; n.type = both_int ? ValueType::Int : ValueType::Real; break;
      case BinaryOp::Mul: need_numeric("*"); n.op = Op::Mul; n.type = both_int ? ValueType::Int : ValueType::Real; break;
      case BinaryOp::Div: need_numeric("/"); n.op = Op::Div; n.type = ValueType::Real; break;
      case BinaryOp::Mod:
        if (!both_int) type_fail(e.pos, "'%' needs int operands");
        n.op = Op::Mod;
        n.type = ValueType::Int;
        break;
    }
    n.kids.push_back(std::move(lhs));
    n.kids.push_back(std::move(rhs));
    return n;
  }

  const AvatarSpec& spec_;
  std::map<std::string, std::int32_t, std::less<>> params_;
  std::map<std::string, std::pair<std::int32_t, ValueType>, std::less<>> states_;
  std::vector<std::map<std::string, LocalVar, std::less<>>> scopes_;
  std::int32_t next_slot_ = 0;
  Context context_ = Context::StateInit;
};

}  // namespace

std::shared_ptr<const Program> compile(const AvatarSpec& spec) { return Compiler(spec).run(); }

void check(const AvatarSpec& spec) { (void)compile(spec); }

}  // namespace avatarsim::dsl
