#pragma once

// Syntax tree of an avatar script. Source positions are carried for
// diagnostics but ignored by structural equality.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "avatarsim/params.hpp"
#include "avatarsim/types.hpp"

namespace avatarsim::dsl {

struct SourcePos {
  int line = 1;
  int column = 1;
};

/// Parse or type error in an avatar script.
class AvatarError : public std::runtime_error {
 public:
  enum class Kind { Parse, Type };

  AvatarError(Kind kind, SourcePos pos, std::string message);

  Kind kind() const noexcept { return kind_; }
  SourcePos pos() const noexcept { return pos_; }
  const std::string& message() const noexcept { return message_; }

 private:
  Kind kind_;
  SourcePos pos_;
  std::string message_;
};

enum class UnaryOp : std::uint8_t { Neg, Not };
enum class BinaryOp : std::uint8_t { Or, And, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub, Mul, Div, Mod };

struct Expr {
  enum class Kind : std::uint8_t { Literal, Name, Member, Call, Unary, Binary };

  Kind kind = Kind::Literal;
  Value literal;       // Literal
  std::string name;    // Name, Member object, Call callee
  std::string member;  // Member field
  UnaryOp unary_op = UnaryOp::Neg;
  BinaryOp binary_op = BinaryOp::Add;
  std::vector<Expr> args;  // Call arguments; Unary operand; Binary lhs, rhs
  SourcePos pos;

  static Expr make_literal(Value v, SourcePos pos);
  static Expr make_name(std::string name, SourcePos pos);
  static Expr make_member(std::string object, std::string field, SourcePos pos);
  static Expr make_call(std::string callee, std::vector<Expr> args, SourcePos pos);
  static Expr make_unary(UnaryOp op, Expr operand, SourcePos pos);
  static Expr make_binary(BinaryOp op, Expr lhs, Expr rhs, SourcePos pos);

  friend bool operator==(const Expr& a, const Expr& b);
};

enum class ActionKind : std::uint8_t { SubmitLimit, SubmitMarket, CancelAll, Send };

struct Stmt {
  enum class Kind : std::uint8_t { Let, Assign, If, Action };

  Kind kind = Kind::Assign;
  std::string name;  // Let / Assign target
  Expr expr;         // Let / Assign value, If condition
  std::vector<Stmt> then_body;
  std::vector<Stmt> else_body;
  bool has_else = false;
  ActionKind action = ActionKind::CancelAll;
  Side side = Side::Buy;  // SubmitLimit / SubmitMarket
  std::vector<Expr> args;
  SourcePos pos;

  friend bool operator==(const Stmt& a, const Stmt& b);
};

enum class EventKind : std::uint8_t { Wake, Trade, News, Message };

inline constexpr int kEventKindCount = 4;

const char* to_string(EventKind e) noexcept;

struct Handler {
  EventKind event = EventKind::Wake;
  std::string binder;  // empty for wake
  std::vector<Stmt> body;
  SourcePos pos;

  friend bool operator==(const Handler& a, const Handler& b);
};

struct StateDecl {
  std::string name;
  ValueType type = ValueType::Real;
  Expr init;
  SourcePos pos;

  friend bool operator==(const StateDecl& a, const StateDecl& b);
};

struct AvatarSpec {
  std::string name;
  std::vector<ParamDecl> params;
  std::vector<SourcePos> param_pos;  // parallel to params
  std::vector<StateDecl> states;
  std::vector<Handler> handlers;

  const Handler* handler(EventKind e) const;

  friend bool operator==(const AvatarSpec& a, const AvatarSpec& b);
};

}  // namespace avatarsim::dsl
