#include "hyperflow/expression.hpp"

#include "hyperflow/error.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace hyperflow {

struct Expression::Node {
  enum class Kind { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call } kind;
  double value = 0.0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;

  double eval(double x) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::Variable: return x;
      case Kind::Neg: return -a->eval(x);
      case Kind::Add: return a->eval(x) + b->eval(x);
      case Kind::Sub: return a->eval(x) - b->eval(x);
      case Kind::Mul: return a->eval(x) * b->eval(x);
      case Kind::Div: return a->eval(x) / b->eval(x);
      case Kind::Pow: return std::pow(a->eval(x), b->eval(x));
      case Kind::Call: return fn(a->eval(x));
    }
    return 0.0;
  }

  bool uses_variable() const {
    if (kind == Kind::Variable) return true;
    return (a && a->uses_variable()) || (b && b->uses_variable());
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr number(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = Kind::Number;
  n->value = v;
  return n;
}

struct UnaryFunction {
  const char* name;
  double (*fn)(double);
};

double call_sinh(double x) { return std::sinh(x); }
double call_cosh(double x) { return std::cosh(x); }
double call_tanh(double x) { return std::tanh(x); }
double call_exp(double x) { return std::exp(x); }
double call_log(double x) { return std::log(x); }
double call_sqrt(double x) { return std::sqrt(x); }

constexpr UnaryFunction kUnary[] = {{"sinh", call_sinh}, {"cosh", call_cosh}, {"tanh", call_tanh},
                                    {"exp", call_exp},   {"log", call_log},   {"sqrt", call_sqrt}};

class Parser {
 public:
  Parser(const std::string& text, const std::string& variable) : text_(text), variable_(variable) {}

  NodePtr parse() {
    auto e = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("expression \"" + text_ + "\": " + what + " at column " + std::to_string(pos_ + 1));
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Kind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Kind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Kind::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Kind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = atom();
    if (accept('^')) return make(Kind::Pow, base, unary());
    return base;
  }

  std::string identifier() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  NodePtr atom() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return literal();
    if (accept('(')) {
      auto e = expr();
      expect(')');
      return e;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail("unexpected '" + std::string(1, c) + "'");
    const std::size_t start = pos_;
    const std::string name = identifier();
    if (name == variable_) return make(Kind::Variable);
    if (name == "pi") return number(std::numbers::pi);
    if (!accept('(')) {
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    if (name == "pow") {
      auto a = expr();
      expect(',');
      auto b = expr();
      expect(')');
      return make(Kind::Pow, a, b);
    }
    if (name == "const") {
      auto a = expr();
      expect(')');
      if (a->uses_variable()) fail("const() takes a constant argument");
      return number(a->eval(0.0));
    }
    for (const auto& f : kUnary) {
      if (name == f.name) {
        auto a = expr();
        expect(')');
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::Call;
        n->fn = f.fn;
        n->a = a;
        return n;
      }
    }
    pos_ = start;
    fail("unknown function '" + name + "'");
  }

  NodePtr literal() {
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return number(value);
  }

  const std::string& text_;
  const std::string& variable_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::string& variable) {
  if (variable.empty()) throw InvalidArgument("expression variable name must not be empty");
  Expression e;
  e.text_ = text;
  e.variable_ = variable;
  e.root_ = Parser(e.text_, e.variable_).parse();
  return e;
}

double Expression::operator()(double x) const {
  if (!root_) throw InvalidArgument("empty expression");
  return root_->eval(x);
}

bool Expression::is_constant() const { return root_ && !root_->uses_variable(); }

}  // namespace hyperflow
