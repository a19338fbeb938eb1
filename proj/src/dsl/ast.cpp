#include "avatarsim/dsl/ast.hpp"

#include <cmath>

namespace avatarsim::dsl {

AvatarError::AvatarError(Kind kind, SourcePos pos, std::string message)
    : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " +
                         (kind == Kind::Parse ? "parse error: " : "type error: ") + message),
      kind_(kind),
      pos_(pos),
      message_(std::move(message)) {}

Expr Expr::make_literal(Value v, SourcePos pos) {
  Expr e;
  e.kind = Kind::Literal;
  e.literal = v;
  e.pos = pos;
  return e;
}

Expr Expr::make_name(std::string name, SourcePos pos) {
  Expr e;
  e.kind = Kind::Name;
  e.name = std::move(name);
  e.pos = pos;
  return e;
}

Expr Expr::make_member(std::string object, std::string field, SourcePos pos) {
  Expr e;
  e.kind = Kind::Member;
  e.name = std::move(object);
  e.member = std::move(field);
  e.pos = pos;
  return e;
}

Expr Expr::make_call(std::string callee, std::vector<Expr> args, SourcePos pos) {
  Expr e;
  e.kind = Kind::Call;
  e.name = std::move(callee);
  e.args = std::move(args);
  e.pos = pos;
  return e;
}

Expr Expr::make_unary(UnaryOp op, Expr operand, SourcePos pos) {
  Expr e;
  e.kind = Kind::Unary;
  e.unary_op = op;
  e.args.push_back(std::move(operand));
  e.pos = pos;
  return e;
}

Expr Expr::make_binary(BinaryOp op, Expr lhs, Expr rhs, SourcePos pos) {
  Expr e;
  e.kind = Kind::Binary;
  e.binary_op = op;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  e.pos = pos;
  return e;
}

namespace {

bool same_literal(const Value& a, const Value& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Value::Kind::Nil: return true;
    case Value::Kind::Bool: return a.b == b.b;
    case Value::Kind::Int: return a.i == b.i;
    case Value::Kind::Real: return a.r == b.r && std::signbit(a.r) == std::signbit(b.r);
  }
  return false;
}

}  // namespace

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Literal: return same_literal(a.literal, b.literal);
    case Expr::Kind::Name: return a.name == b.name;
    case Expr::Kind::Member: return a.name == b.name && a.member == b.member;
    case Expr::Kind::Call: return a.name == b.name && a.args == b.args;
    case Expr::Kind::Unary: return a.unary_op == b.unary_op && a.args == b.args;
    case Expr::Kind::Binary: return a.binary_op == b.binary_op && a.args == b.args;
  }
  return false;
}

bool operator==(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Stmt::Kind::Let:
    case Stmt::Kind::Assign: return a.name == b.name && a.expr == b.expr;
    case Stmt::Kind::If:
      return a.expr == b.expr && a.then_body == b.then_body && a.has_else == b.has_else &&
             a.else_body == b.else_body;
    case Stmt::Kind::Action: {
      const bool sided = a.action == ActionKind::SubmitLimit || a.action == ActionKind::SubmitMarket;
      return a.action == b.action && (!sided || a.side == b.side) && a.args == b.args;
    }
  }
  return false;
}

const char* to_string(EventKind e) noexcept {
  switch (e) {
    case EventKind::Wake: return "wake";
    case EventKind::Trade: return "trade";
    case EventKind::News: return "news";
    case EventKind::Message: return "message";
  }
  return "?";
}

bool operator==(const Handler& a, const Handler& b) {
  return a.event == b.event && a.binder == b.binder && a.body == b.body;
}

bool operator==(const StateDecl& a, const StateDecl& b) {
  return a.name == b.name && a.type == b.type && a.init == b.init;
}

const Handler* AvatarSpec::handler(EventKind e) const {
  for (const auto& h : handlers) {
    if (h.event == e) return &h;
  }
  return nullptr;
}

bool operator==(const AvatarSpec& a, const AvatarSpec& b) {
  return a.name == b.name && a.params == b.params && a.states == b.states && a.handlers == b.handlers;
}

}  // namespace avatarsim::dsl
