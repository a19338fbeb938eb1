#include <charconv>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "avatarsim/dsl/compiler.hpp"
#include "avatarsim/dsl/parser.hpp"

namespace avatarsim::dsl {
namespace {

enum class Tok : std::uint8_t {
  Ident,
  Int,
  Real,
  String,
  LBrace,
  RBrace,
  LParen,
  RParen,
  Comma,
  Colon,
  Semi,
  Tilde,
  Dot,
  Assign,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Plus,
  Minus,
  Star,
  Slash,
  Percent,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t int_value = 0;
  double real_value = 0.0;
  SourcePos pos;
};

bool is_loop_keyword(std::string_view s) {
  return s == "while" || s == "for" || s == "loop" || s == "repeat" || s == "do" || s == "until" ||
         s == "goto" || s == "foreach";
}

[[noreturn]] void parse_fail(SourcePos pos, std::string message) {
  throw AvatarError(AvatarError::Kind::Parse, pos, std::move(message));
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t;
      t.pos = {line_, col_};
      if (at_end()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Ident;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
          t.text += advance();
        }
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number(t);
      } else if (c == '"') {
        lex_string(t);
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space_and_comments() {
    while (!at_end()) {
      const char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' || (c == '/' && peek(1) == '/')) {
        while (!at_end() && peek() != '\n') advance();
      } else {
        return;
      }
    }
  }

  void lex_number(Token& t) {
    std::string text;
    bool is_real = false;
    while (std::isdigit(static_cast<unsigned char>(peek()))) text += advance();
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      is_real = true;
      text += advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) text += advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      const std::size_t digit_at = (peek(1) == '+' || peek(1) == '-') ? 2 : 1;
      if (std::isdigit(static_cast<unsigned char>(peek(digit_at)))) {
        is_real = true;
        text += advance();
        if (digit_at == 2) text += advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) text += advance();
      }
    }
    t.text = text;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (is_real) {
      t.kind = Tok::Real;
      auto [ptr, ec] = std::from_chars(first, last, t.real_value);
      if (ec != std::errc() || ptr != last) parse_fail(t.pos, "bad number '" + text + "'");
    } else {
      t.kind = Tok::Int;
      auto [ptr, ec] = std::from_chars(first, last, t.int_value);
      if (ec != std::errc() || ptr != last) parse_fail(t.pos, "integer literal out of range '" + text + "'");
    }
    if (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_') {
      parse_fail({line_, col_}, "unexpected character after number");
    }
  }

  void lex_string(Token& t) {
    t.kind = Tok::String;
    advance();  // opening quote
    for (;;) {
      if (at_end() || peek() == '\n') parse_fail(t.pos, "unterminated string");
      const char c = advance();
      if (c == '"') return;
      if (c == '\\') {
        if (at_end()) parse_fail(t.pos, "unterminated string");
        const char e = advance();
        if (e != '"' && e != '\\') parse_fail(t.pos, "unknown escape in string");
        t.text += e;
      } else {
        t.text += c;
      }
    }
  }

  void lex_punct(Token& t) {
    const char c = advance();
    auto two = [&](char next, Tok yes, Tok no) {
      if (peek() == next) {
        advance();
        t.kind = yes;
      } else {
        t.kind = no;
      }
    };
    switch (c) {
      case '{': t.kind = Tok::LBrace; break;
      case '}': t.kind = Tok::RBrace; break;
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case ',': t.kind = Tok::Comma; break;
      case ':': t.kind = Tok::Colon; break;
      case ';': t.kind = Tok::Semi; break;
      case '~': t.kind = Tok::Tilde; break;
      case '.': t.kind = Tok::Dot; break;
      case '+': t.kind = Tok::Plus; break;
      case '-': t.kind = Tok::Minus; break;
      case '*': t.kind = Tok::Star; break;
      case '/': t.kind = Tok::Slash; break;
      case '%': t.kind = Tok::Percent; break;
      case '=': two('=', Tok::Eq, Tok::Assign); break;
      case '<': two('=', Tok::Le, Tok::Lt); break;
      case '>': two('=', Tok::Ge, Tok::Gt); break;
      case '!':
        if (peek() != '=') parse_fail(t.pos, "unexpected '!' (use 'not')");
        advance();
        t.kind = Tok::Ne;
        break;
      default:
        parse_fail(t.pos, std::string("unexpected character '") + c + "'");
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const char* describe(Tok k) {
  switch (k) {
    case Tok::Ident: return "identifier";
    case Tok::Int: return "integer";
    case Tok::Real: return "number";
    case Tok::String: return "string";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Semi: return "';'";
    case Tok::Tilde: return "'~'";
    case Tok::Dot: return "'.'";
    case Tok::Assign: return "'='";
    case Tok::Eq: return "'=='";
    case Tok::Ne: return "'!='";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Percent: return "'%'";
    case Tok::End: return "end of input";
  }
  return "?";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  AvatarSpec script() {
    for (const auto& t : toks_) {
      if (t.kind == Tok::Ident && is_loop_keyword(t.text)) {
        throw AvatarError(AvatarError::Kind::Type, t.pos, "loops not permitted ('" + t.text + "')");
      }
    }
    if (toks_.front().kind == Tok::End) parse_fail(toks_.front().pos, "empty script");

    AvatarSpec spec;
    expect_keyword("avatar");
    spec.name = expect(Tok::String, "avatar name string").text;
    expect(Tok::LBrace, "'{'");
    while (!check(Tok::RBrace)) {
      if (check(Tok::End)) parse_fail(cur().pos, "missing '}' at end of avatar");
      if (check_keyword("param")) {
        param(spec);
      } else if (check_keyword("state")) {
        state(spec);
      } else if (check_keyword("on")) {
        spec.handlers.push_back(handler());
      } else {
        parse_fail(cur().pos, "expected 'param', 'state' or 'on', found " + found());
      }
    }
    advance();
    if (!check(Tok::End)) parse_fail(cur().pos, "unexpected " + found() + " after avatar body");
    return spec;
  }

 private:
  const Token& cur() const { return toks_[i_]; }
  const Token& next() const { return toks_[std::min(i_ + 1, toks_.size() - 1)]; }
  bool check(Tok k) const { return cur().kind == k; }
  bool check_keyword(std::string_view kw) const { return cur().kind == Tok::Ident && cur().text == kw; }
  const Token& advance() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

  std::string found() const {
    if (cur().kind == Tok::Ident) return "'" + cur().text + "'";
    if (cur().kind == Tok::Int || cur().kind == Tok::Real) return "'" + cur().text + "'";
    return describe(cur().kind);
  }

  const Token& expect(Tok k, const std::string& what) {
    if (!check(k)) parse_fail(cur().pos, "expected " + what + ", found " + found());
    return advance();
  }

  void expect_keyword(std::string_view kw) {
    if (!check_keyword(kw)) parse_fail(cur().pos, "expected '" + std::string(kw) + "', found " + found());
    advance();
  }

  void optional_semi() {
    if (check(Tok::Semi)) advance();
  }

  ValueType type_name(bool allow_bool) {
    const Token& t = expect(Tok::Ident, "type name");
    if (t.text == "int") return ValueType::Int;
    if (t.text == "real") return ValueType::Real;
    if (allow_bool && t.text == "bool") return ValueType::Bool;
    parse_fail(t.pos, "unknown type '" + t.text + "'");
  }

  double signed_number() {
    bool negative = false;
    if (check(Tok::Minus)) {
      advance();
      negative = true;
    }
    double v = 0.0;
    if (check(Tok::Int)) {
      v = static_cast<double>(cur().int_value);
    } else if (check(Tok::Real)) {
      v = cur().real_value;
    } else {
      parse_fail(cur().pos, "expected number, found " + found());
    }
    advance();
    return negative ? -v : v;
  }

  void param(AvatarSpec& spec) {
    advance();  // param
    const Token& name = expect(Tok::Ident, "parameter name");
    ParamDecl decl;
    decl.name = name.text;
    expect(Tok::Colon, "':'");
    decl.type = type_name(false);
    expect(Tok::Tilde, "'~'");
    const Token& dist = expect(Tok::Ident, "distribution");
    expect(Tok::LParen, "'('");
    std::vector<double> args;
    if (!check(Tok::RParen)) {
      args.push_back(signed_number());
      while (check(Tok::Comma)) {
        advance();
        args.push_back(signed_number());
      }
    }
    expect(Tok::RParen, "')'");
    auto arity = [&](std::size_t n) {
      if (args.size() != n) {
        parse_fail(dist.pos, dist.text + "(...) takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
      }
    };
    if (dist.text == "constant") {
      arity(1);
      decl.dist = Distribution::constant(args[0]);
    } else if (dist.text == "uniform") {
      arity(2);
      decl.dist = Distribution::uniform(args[0], args[1]);
    } else if (dist.text == "uniform_int") {
      arity(2);
      decl.dist = {Distribution::Kind::UniformInt, args[0], args[1]};
    } else if (dist.text == "normal") {
      arity(2);
      decl.dist = Distribution::normal(args[0], args[1]);
    } else if (dist.text == "lognormal") {
      arity(2);
      decl.dist = Distribution::lognormal(args[0], args[1]);
    } else {
      parse_fail(dist.pos, "unknown distribution '" + dist.text + "'");
    }
    optional_semi();
    spec.params.push_back(std::move(decl));
    spec.param_pos.push_back(name.pos);
  }

  void state(AvatarSpec& spec) {
    advance();  // state
    StateDecl decl;
    const Token& name = expect(Tok::Ident, "state variable name");
    decl.name = name.text;
    decl.pos = name.pos;
    expect(Tok::Colon, "':'");
    decl.type = type_name(true);
    expect(Tok::Assign, "'='");
    decl.init = expr();
    optional_semi();
    spec.states.push_back(std::move(decl));
  }

  Handler handler() {
    Handler h;
    h.pos = cur().pos;
    advance();  // on
    const Token& ev = expect(Tok::Ident, "event name");
    if (ev.text == "wake") {
      h.event = EventKind::Wake;
    } else if (ev.text == "trade") {
      h.event = EventKind::Trade;
    } else if (ev.text == "news") {
      h.event = EventKind::News;
    } else if (ev.text == "message") {
      h.event = EventKind::Message;
    } else {
      parse_fail(ev.pos, "unknown event '" + ev.text + "' (expected wake, trade, news or message)");
    }
    if (h.event == EventKind::Wake) {
      if (check(Tok::LParen)) parse_fail(cur().pos, "'on wake' takes no parameter");
    } else {
      expect(Tok::LParen, "'(' and a parameter name after 'on " + ev.text + "'");
      h.binder = expect(Tok::Ident, "parameter name").text;
      expect(Tok::RParen, "')'");
    }
    h.body = block();
    return h;
  }

  std::vector<Stmt> block() {
    expect(Tok::LBrace, "'{'");
    std::vector<Stmt> body;
    while (!check(Tok::RBrace)) {
      if (check(Tok::End)) parse_fail(cur().pos, "missing '}'");
      body.push_back(statement());
      optional_semi();
    }
    advance();
    return body;
  }

  Stmt statement() {
    Stmt s;
    s.pos = cur().pos;
    if (check_keyword("let")) {
      advance();
      s.kind = Stmt::Kind::Let;
      s.name = expect(Tok::Ident, "variable name").text;
      expect(Tok::Assign, "'='");
      s.expr = expr();
      return s;
    }
    if (check_keyword("if")) return if_statement();
    if (check(Tok::Ident) && next().kind == Tok::Assign) {
      s.kind = Stmt::Kind::Assign;
      s.name = advance().text;
      advance();  // =
      s.expr = expr();
      return s;
    }
    if (check(Tok::Ident) && next().kind == Tok::LParen) {
      const std::string& callee = cur().text;
      if (callee == "submit_limit" || callee == "submit_market" || callee == "cancel_all" || callee == "send") {
        return action();
      }
      parse_fail(cur().pos, "'" + callee + "(...)' is not an action; expressions cannot stand alone");
    }
    if (check_keyword("else")) parse_fail(cur().pos, "'else' without 'if'");
    parse_fail(cur().pos, "expected statement, found " + found());
  }

  Stmt if_statement() {
    Stmt s;
    s.kind = Stmt::Kind::If;
    s.pos = cur().pos;
    advance();  // if
    s.expr = expr();
    s.then_body = block();
    if (check_keyword("else")) {
      advance();
      s.has_else = true;
      if (check_keyword("if")) {
        s.else_body.push_back(if_statement());
      } else {
        s.else_body = block();
      }
    }
    return s;
  }

  Side side_arg() {
    if (check_keyword("buy")) {
      advance();
      return Side::Buy;
    }
    if (check_keyword("sell")) {
      advance();
      return Side::Sell;
    }
    parse_fail(cur().pos, "expected 'buy' or 'sell', found " + found());
  }

  Stmt action() {
    Stmt s;
    s.kind = Stmt::Kind::Action;
    s.pos = cur().pos;
    const std::string callee = advance().text;
    expect(Tok::LParen, "'('");
    std::size_t expr_args = 0;
    if (callee == "submit_limit") {
      s.action = ActionKind::SubmitLimit;
      expr_args = 2;
    } else if (callee == "submit_market") {
      s.action = ActionKind::SubmitMarket;
      expr_args = 1;
    } else if (callee == "cancel_all") {
      s.action = ActionKind::CancelAll;
    } else {
      s.action = ActionKind::Send;
      expr_args = 2;
    }
    const bool sided = s.action == ActionKind::SubmitLimit || s.action == ActionKind::SubmitMarket;
    if (sided) {
      s.side = side_arg();
      for (std::size_t k = 0; k < expr_args; ++k) {
        expect(Tok::Comma, "',' (" + callee + " takes " + std::to_string(expr_args + 1) + " arguments)");
        s.args.push_back(expr());
      }
    } else {
      for (std::size_t k = 0; k < expr_args; ++k) {
        if (k > 0) expect(Tok::Comma, "',' (" + callee + " takes " + std::to_string(expr_args) + " arguments)");
        s.args.push_back(expr());
      }
    }
    expect(Tok::RParen, "')' (" + callee + " takes " + std::to_string(expr_args + (sided ? 1 : 0)) + " arguments)");
    return s;
  }

  // expr := or
  Expr expr() { return or_expr(); }

  Expr or_expr() {
    Expr lhs = and_expr();
    while (check_keyword("or")) {
      const SourcePos pos = advance().pos;
      lhs = Expr::make_binary(BinaryOp::Or, std::move(lhs), and_expr(), pos);
    }
    return lhs;
  }

  Expr and_expr() {
    Expr lhs = not_expr();
    while (check_keyword("and")) {
      const SourcePos pos = advance().pos;
      lhs = Expr::make_binary(BinaryOp::And, std::move(lhs), not_expr(), pos);
    }
    return lhs;
  }

  Expr not_expr() {
    if (check_keyword("not")) {
      const SourcePos pos = advance().pos;
      return Expr::make_unary(UnaryOp::Not, not_expr(), pos);
    }
    return comparison();
  }

  static bool comparison_op(Tok k, BinaryOp& op) {
    switch (k) {
      case Tok::Eq: op = BinaryOp::Eq; return true;
      case Tok::Ne: op = BinaryOp::Ne; return true;
      case Tok::Lt: op = BinaryOp::Lt; return true;
      case Tok::Le: op = BinaryOp::Le; return true;
      case Tok::Gt: op = BinaryOp::Gt; return true;
      case Tok::Ge: op = BinaryOp::Ge; return true;
      default: return false;
    }
  }

  Expr comparison() {
    Expr lhs = additive();
    BinaryOp op;
    if (comparison_op(cur().kind, op)) {
      const SourcePos pos = advance().pos;
      lhs = Expr::make_binary(op, std::move(lhs), additive(), pos);
      if (comparison_op(cur().kind, op)) parse_fail(cur().pos, "comparisons cannot be chained");
    }
    return lhs;
  }

  Expr additive() {
    Expr lhs = multiplicative();
    while (check(Tok::Plus) || check(Tok::Minus)) {
      const BinaryOp op = check(Tok::Plus) ? BinaryOp::Add : BinaryOp::Sub;
      const SourcePos pos = advance().pos;
      lhs = Expr::make_binary(op, std::move(lhs), multiplicative(), pos);
    }
    return lhs;
  }

  Expr multiplicative() {
    Expr lhs = unary();
    while (check(Tok::Star) || check(Tok::Slash) || check(Tok::Percent)) {
      const BinaryOp op = check(Tok::Star) ? BinaryOp::Mul : check(Tok::Slash) ? BinaryOp::Div : BinaryOp::Mod;
      const SourcePos pos = advance().pos;
      lhs = Expr::make_binary(op, std::move(lhs), unary(), pos);
    }
    return lhs;
  }

  Expr unary() {
    if (check(Tok::Minus)) {
      const SourcePos pos = advance().pos;
      return Expr::make_unary(UnaryOp::Neg, unary(), pos);
    }
    return primary();
  }

  Expr primary() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Int:
        advance();
        return Expr::make_literal(Value::integer(t.int_value), t.pos);
      case Tok::Real:
        advance();
        return Expr::make_literal(Value::real(t.real_value), t.pos);
      case Tok::LParen: {
        advance();
        Expr inner = expr();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident: {
        if (t.text == "true" || t.text == "false") {
          advance();
          return Expr::make_literal(Value::boolean(t.text == "true"), t.pos);
        }
        if (t.text == "nil") {
          advance();
          return Expr::make_literal(Value::nil(), t.pos);
        }
        static constexpr std::string_view kReserved[] = {"and", "or", "not", "if", "else", "let",
                                                         "on", "param", "state", "avatar", "buy", "sell"};
        for (auto kw : kReserved) {
          if (t.text == kw) parse_fail(t.pos, "unexpected keyword '" + t.text + "' in expression");
        }
        const Token& name = advance();
        if (check(Tok::Dot)) {
          advance();
          const Token& field = expect(Tok::Ident, "field name after '.'");
          return Expr::make_member(name.text, field.text, name.pos);
        }
        if (check(Tok::LParen)) {
          advance();
          std::vector<Expr> args;
          if (!check(Tok::RParen)) {
            args.push_back(expr());
            while (check(Tok::Comma)) {
              advance();
              args.push_back(expr());
            }
          }
          expect(Tok::RParen, "')'");
          return Expr::make_call(name.text, std::move(args), name.pos);
        }
        return Expr::make_name(name.text, name.pos);
      }
      default:
        parse_fail(t.pos, "expected expression, found " + found());
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

}  // namespace

AvatarSpec parse_syntax(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.script();
}

AvatarSpec parse(std::string_view source) {
  AvatarSpec spec = parse_syntax(source);
  check(spec);
  return spec;
}

}  // namespace avatarsim::dsl
