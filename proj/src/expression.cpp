#include "wentzell/cli/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace wentzell::cli {

struct Expression::Node {
  enum class Op { Const, VarX, VarY, VarT, Neg, Add, Sub, Mul, Div, Pow, Call };
  Op op = Op::Const;
  double value = 0.0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> a, b;

  double eval(double t, const Vec& x) const {
    switch (op) {
      case Op::Const: return value;
      case Op::VarX: return x.size() > 0 ? x[0] : 0.0;
      case Op::VarY: return x.size() > 1 ? x[1] : 0.0;
      case Op::VarT: return t;
      case Op::Neg: return -a->eval(t, x);
      case Op::Add: return a->eval(t, x) + b->eval(t, x);
      case Op::Sub: return a->eval(t, x) - b->eval(t, x);
      case Op::Mul: return a->eval(t, x) * b->eval(t, x);
      case Op::Div: return a->eval(t, x) / b->eval(t, x);
      case Op::Pow: return std::pow(a->eval(t, x), b->eval(t, x));
      case Op::Call: return fn(a->eval(t, x));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

double heaviside(double s) { return s >= 0.0 ? 1.0 : 0.0; }
double signum(double s) { return static_cast<double>((s > 0.0) - (s < 0.0)); }
double fabs_(double s) { return std::fabs(s); }

struct Function {
  const char* name;
  double (*fn)(double);
};

const Function kFunctions[] = {
    {"sin", static_cast<double (*)(double)>(std::sin)},   {"cos", static_cast<double (*)(double)>(std::cos)},
    {"tan", static_cast<double (*)(double)>(std::tan)},   {"exp", static_cast<double (*)(double)>(std::exp)},
    {"log", static_cast<double (*)(double)>(std::log)},   {"sqrt", static_cast<double (*)(double)>(std::sqrt)},
    {"tanh", static_cast<double (*)(double)>(std::tanh)}, {"abs", fabs_},
    {"step", heaviside},                                  {"sign", signum},
};

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr constant(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->value = v;
  return n;
}

// expr   := term (('+'|'-') term)*
// term   := unary (('*'|'/') unary)*
// unary  := '-' unary | '+' unary | power
// power  := atom ('^' unary)?
class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr run() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }
  bool uses_t = false;

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "expression \"" << s_ << "\", column " << pos_ + 1 << ": " << what;
    throw Error(ErrorCode::Parse, os.str());
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) n = make(Op::Add, n, term());
      else if (eat('-')) n = make(Op::Sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = make(Op::Mul, n, unary());
      else if (eat('/')) n = make(Op::Div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Op::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) return make(Op::Pow, base, unary());  // right associative
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "x") return make(Op::VarX);
      if (id == "y") return make(Op::VarY);
      if (id == "t") {
        uses_t = true;
        return make(Op::VarT);
      }
      if (id == "pi") return constant(std::numbers::pi);
      if (id == "e") return constant(std::numbers::e);
      for (const auto& f : kFunctions) {
        if (id != f.name) continue;
        if (!eat('(')) fail("expected '(' after " + id);
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Call;
        n->fn = f.fn;
        n->a = expr();
        if (!eat(')')) fail("expected ')'");
        return n;
      }
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : text_("0"), root_(constant(0.0)) {}

Expression Expression::parse(const std::string& text) {
  Parser p(text);
  Expression e;
  e.root_ = p.run();
  e.text_ = text;
  e.uses_t_ = p.uses_t;
  return e;
}

double Expression::operator()(double t, const Vec& x) const { return root_->eval(t, x); }

bool Expression::is_zero() const { return root_->op == Node::Op::Const && root_->value == 0.0; }

}  // namespace wentzell::cli
