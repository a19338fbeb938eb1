#include <charconv>
#include <cmath>
#include <string>

#include "avatarsim/dsl/parser.hpp"

namespace avatarsim::dsl {
namespace {

// Binding strength; higher binds tighter.
enum Prec : int { kOr = 1, kAnd = 2, kNot = 3, kCmp = 4, kAdd = 5, kMul = 6, kNeg = 7, kAtom = 8 };

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Unary: return e.unary_op == UnaryOp::Not ? kNot : kNeg;
    case Expr::Kind::Binary:
      switch (e.binary_op) {
        case BinaryOp::Or: return kOr;
        case BinaryOp::And: return kAnd;
        case BinaryOp::Add:
        case BinaryOp::Sub: return kAdd;
        case BinaryOp::Mul:
        case BinaryOp::Div:
        case BinaryOp::Mod: return kMul;
        default: return kCmp;
      }
    default: return kAtom;
  }
}

const char* op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return "or";
    case BinaryOp::And: return "and";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
  }
  return "?";
}

/// Shortest round-trip text that still lexes as a real literal.
std::string real_text(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string integer_text(double v) { return std::to_string(static_cast<std::int64_t>(v)); }

std::string number_text(double v, bool as_int) {
  const std::string body = as_int ? integer_text(std::fabs(v)) : real_text(std::fabs(v));
  return std::signbit(v) ? "-" + body : body;
}

class Printer {
 public:
  std::string run(const AvatarSpec& spec) {
    out_ = "avatar \"" + escape(spec.name) + "\" {";
    if (spec.params.empty() && spec.states.empty() && spec.handlers.empty()) {
      out_ += "}\n";
      return out_;
    }
    out_ += "\n";
    for (const auto& p : spec.params) {
      out_ += "  param " + p.name + ": " + std::string(to_string(p.type)) + " ~ " + dist_text(p) + "\n";
    }
    if (!spec.params.empty() && !spec.states.empty()) out_ += "\n";
    for (const auto& s : spec.states) {
      out_ += "  state " + s.name + ": " + std::string(to_string(s.type)) + " = " + expr(s.init, 0) + "\n";
    }
    bool first = spec.params.empty() && spec.states.empty();
    for (const auto& h : spec.handlers) {
      if (!first) out_ += "\n";
      first = false;
      out_ += "  on " + std::string(to_string(h.event));
      if (!h.binder.empty()) out_ += "(" + h.binder + ")";
      out_ += " ";
      block(h.body, 1);
      out_ += "\n";
    }
    out_ += "}\n";
    return out_;
  }

 private:
  static std::string escape(const std::string& s) {
    std::string r;
    for (char c : s) {
      if (c == '"' || c == '\\') r += '\\';
      r += c;
    }
    return r;
  }

  static std::string dist_text(const ParamDecl& p) {
    const bool int_type = p.type == ValueType::Int;
    const auto& d = p.dist;
    switch (d.kind) {
      case Distribution::Kind::Constant: return "constant(" + number_text(d.a, int_type) + ")";
      case Distribution::Kind::Uniform:
        return "uniform(" + number_text(d.a, false) + ", " + number_text(d.b, false) + ")";
      case Distribution::Kind::UniformInt:
        return "uniform_int(" + number_text(d.a, true) + ", " + number_text(d.b, true) + ")";
      case Distribution::Kind::Normal:
        return "normal(" + number_text(d.a, false) + ", " + number_text(d.b, false) + ")";
      case Distribution::Kind::LogNormal:
        return "lognormal(" + number_text(d.a, false) + ", " + number_text(d.b, false) + ")";
    }
    return "?";
  }

  static std::string indent(int depth) { return std::string(static_cast<std::size_t>(depth) * 2, ' '); }

  // Emits "{ ... }" starting at the current column; the closing brace is
  // indented at `depth`.
  void block(const std::vector<Stmt>& body, int depth) {
    if (body.empty()) {
      out_ += "{}";
      return;
    }
    out_ += "{\n";
    for (const auto& s : body) {
      out_ += indent(depth + 1);
      statement(s, depth + 1);
      out_ += "\n";
    }
    out_ += indent(depth) + "}";
  }

  void statement(const Stmt& s, int depth) {
    switch (s.kind) {
      case Stmt::Kind::Let: out_ += "let " + s.name + " = " + expr(s.expr, 0); break;
      case Stmt::Kind::Assign: out_ += s.name + " = " + expr(s.expr, 0); break;
      case Stmt::Kind::If:
        out_ += "if " + expr(s.expr, 0) + " ";
        block(s.then_body, depth);
        if (s.has_else) {
          out_ += " else ";
          if (s.else_body.size() == 1 && s.else_body.front().kind == Stmt::Kind::If) {
            statement(s.else_body.front(), depth);
          } else {
            block(s.else_body, depth);
          }
        }
        break;
      case Stmt::Kind::Action: {
        switch (s.action) {
          case ActionKind::SubmitLimit: out_ += "submit_limit("; break;
          case ActionKind::SubmitMarket: out_ += "submit_market("; break;
          case ActionKind::CancelAll: out_ += "cancel_all("; break;
          case ActionKind::Send: out_ += "send("; break;
        }
        bool first = true;
        if (s.action == ActionKind::SubmitLimit || s.action == ActionKind::SubmitMarket) {
          out_ += to_string(s.side);
          first = false;
        }
        for (const auto& a : s.args) {
          if (!first) out_ += ", ";
          first = false;
          out_ += expr(a, 0);
        }
        out_ += ")";
        break;
      }
    }
  }

  std::string expr(const Expr& e, int min_prec) {
    const int prec = precedence(e);
    std::string text;
    switch (e.kind) {
      case Expr::Kind::Literal:
        switch (e.literal.kind) {
          case Value::Kind::Nil: text = "nil"; break;
          case Value::Kind::Bool: text = e.literal.b ? "true" : "false"; break;
          case Value::Kind::Int: text = std::to_string(e.literal.i); break;
          case Value::Kind::Real: text = real_text(e.literal.r); break;
        }
        break;
      case Expr::Kind::Name: text = e.name; break;
      case Expr::Kind::Member: text = e.name + "." + e.member; break;
      case Expr::Kind::Call: {
        text = e.name + "(";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (i > 0) text += ", ";
          text += expr(e.args[i], 0);
        }
        text += ")";
        break;
      }
      case Expr::Kind::Unary:
        text = e.unary_op == UnaryOp::Not ? "not " + expr(e.args[0], kNot) : "-" + expr(e.args[0], kNeg);
        break;
      case Expr::Kind::Binary: {
        // Left-associative; comparisons do not chain, so both sides bind tighter.
        const int lhs_prec = prec == kCmp ? prec + 1 : prec;
        text = expr(e.args[0], lhs_prec) + " " + op_text(e.binary_op) + " " + expr(e.args[1], prec + 1);
        break;
      }
    }
    return prec < min_prec ? "(" + text + ")" : text;
  }

  std::string out_;
};

}  // namespace

std::string print(const AvatarSpec& spec) { return Printer{}.run(spec); }

}  // namespace avatarsim::dsl
