#include "contraction/expr.hpp"

#include <cctype>
#include <cstdlib>

namespace contraction {

namespace {

// Source text with U+2212 folded to '-' and a map back to original byte offsets.
struct NormalizedText {
  std::string text;
  std::vector<std::size_t> origin;
};

NormalizedText normalize(std::string_view src) {
  NormalizedText out;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (i + 2 < src.size() && static_cast<unsigned char>(src[i]) == 0xE2 &&
        static_cast<unsigned char>(src[i + 1]) == 0x88 &&
        static_cast<unsigned char>(src[i + 2]) == 0x92) {
      out.text += '-';
      out.origin.push_back(i);
      i += 2;
      continue;
    }
    out.text += src[i];
    out.origin.push_back(i);
  }
  out.origin.push_back(src.size());
  return out;
}

class Parser {
 public:
  Parser(const NormalizedText& src, std::size_t base, int n, int k)
      : src_(src), base_(base), n_(n), k_(k) {}

  Expr parse_all() {
    skip_space();
    if (at_end()) fail("empty expression");
    Expr e = parse_sum();
    skip_space();
    if (!at_end()) fail(std::string("unexpected character '") + peek() + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, src_.origin[std::min(pos_, src_.origin.size() - 1)] + base_);
  }

  bool at_end() const { return pos_ >= src_.text.size(); }
  char peek() const { return at_end() ? '\0' : src_.text[pos_]; }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::make(Op::add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = Expr::make(Op::sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::make(Op::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expr::make(Op::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) {
      Expr operand = parse_unary();
      // Negative literals fold into constants so printing round-trips.
      if (operand.op() == Op::constant) return Expr::constant(-operand.value());
      return Expr::make(Op::neg, operand);
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (!accept('^')) return base;
    skip_space();
    const bool negative = accept('-');
    skip_space();
    const std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) fail("expected integer exponent after '^'");
    const int exponent = std::stoi(src_.text.substr(start, pos_ - start));
    return Expr::make(Op::pow, base, negative ? -exponent : exponent);
  }

  Expr parse_primary() {
    skip_space();
    if (at_end()) fail("unexpected end of input");
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr parse_number() {
    const char* begin = src_.text.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return Expr::constant(v);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
    const std::string name = src_.text.substr(start, pos_ - start);
    static const std::pair<const char*, Op> functions[] = {
        {"tanh", Op::tanh}, {"sin", Op::sin}, {"cos", Op::cos},
        {"exp", Op::exp},   {"abs", Op::abs}, {"sign", Op::sign},
    };
    for (const auto& [fname, op] : functions) {
      if (name == fname) {
        if (!accept('(')) fail("expected '(' after function " + name);
        Expr arg = parse_sum();
        if (!accept(')')) fail("expected ')'");
        return Expr::make(op, arg);
      }
    }
    if (name == "t") return Expr::time();
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u') &&
        name.find_first_not_of("0123456789", 1) == std::string::npos && name[1] != '0') {
      const int idx = std::stoi(name.substr(1));
      const int limit = name[0] == 'x' ? n_ : k_;
      if (idx >= 1 && idx <= limit) {
        return name[0] == 'x' ? Expr::state(idx - 1) : Expr::input(idx - 1);
      }
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  const NormalizedText& src_;
  std::size_t base_;
  int n_;
  int k_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(std::string_view text, int n, int k) {
  const NormalizedText norm = normalize(text);
  return Parser(norm, 0, n, k).parse_all();
}

std::vector<Expr> parse_expression_list(std::string_view text, int n, int k) {
  std::vector<Expr> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of(";\n", start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view piece = text.substr(start, end - start);
    if (piece.find_first_not_of(" \t\r") != std::string_view::npos) {
      const NormalizedText norm = normalize(piece);
      out.push_back(Parser(norm, start, n, k).parse_all());
    }
    start = end + 1;
  }
  return out;
}

}  // namespace contraction
