#pragma once

// Name resolution, type checking and lowering of an AvatarSpec into a
// resolved tree that the interpreter walks.

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "avatarsim/dsl/ast.hpp"

namespace avatarsim::dsl {

enum class Op : std::uint8_t {
  Literal,
  Param,
  State,
  Local,
  Accessor,
  Window,
  Function,
  Random,
  Neg,
  Not,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
  Lt,
  Le,
  Gt,
  Ge,
  Eq,
  Ne,
  And,
  Or,
};

enum class Accessor : std::uint8_t {
  LastPrice,
  BestBid,
  BestAsk,
  Mid,
  RefPrice,
  InitialPrice,
  Time,
  TradeCount,
  AgentCount,
  MyCash,
  MyShares,
  MyWealth,
  MyAvailableCash,
  MyAvailableShares,
  MyId,
  MyFamily,
};

enum class WindowFn : std::uint8_t { Sma, Std, LogReturn, Volume };

enum class Function : std::uint8_t { Abs, Min, Max, Floor, Ceil, Round, Trunc, Exp, Ln, Sqrt, Sign, Defined, ToReal };

enum class RandomFn : std::uint8_t { Rand, Uniform, UniformInt, Normal };

struct Node {
  Op op = Op::Literal;
  ValueType type = ValueType::Int;
  std::int32_t index = 0;  // slot, or the Accessor/WindowFn/Function/RandomFn code
  Value literal;
  std::vector<Node> kids;
  SourcePos pos;
};

struct CompiledStmt {
  enum class Kind : std::uint8_t { SetState, SetLocal, If, Action };
  Kind kind = Kind::SetLocal;
  std::int32_t index = 0;
  ValueType target_type = ValueType::Real;
  Node expr;
  std::vector<CompiledStmt> then_body;
  std::vector<CompiledStmt> else_body;
  ActionKind action = ActionKind::CancelAll;
  Side side = Side::Buy;
  std::vector<Node> args;
  SourcePos pos;
};

struct CompiledHandler {
  bool present = false;
  std::vector<CompiledStmt> body;
  std::int32_t local_count = 0;  // slot 0 holds the event parameter, if any
};

struct Program {
  AvatarSpec spec;
  std::vector<Node> state_init;
  std::vector<ValueType> state_types;
  std::array<CompiledHandler, kEventKindCount> handlers;
  std::int32_t wake_rate_param = -1;  // index into spec.params, or -1 for the default
  std::int32_t news_sens_param = -1;

  const CompiledHandler& handler(EventKind e) const { return handlers[static_cast<std::size_t>(e)]; }
};

/// Throws AvatarError(Type) on undeclared names, type mismatches and
/// invalid parameter supports.
std::shared_ptr<const Program> compile(const AvatarSpec& spec);

/// compile() with the result discarded.
void check(const AvatarSpec& spec);

}  // namespace avatarsim::dsl
