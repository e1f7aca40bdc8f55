#pragma once

#include "wentzell/types.hpp"

#include <memory>
#include <string>

namespace wentzell::cli {

/// Closed expression over x, y, t and the constants pi, e. Supports + - * / ^,
/// unary minus, parentheses and sin, cos, tan, exp, log, sqrt, abs, tanh,
/// step (Heaviside, step(0) = 1) and sign. Parsing failures throw
/// ErrorCode::Parse with the column of the offending token.
class Expression {
 public:
  struct Node;

  Expression();
  static Expression parse(const std::string& text);

  double operator()(double t, const Vec& x) const;
  const std::string& text() const { return text_; }
  /// True when the expression never reads t.
  bool autonomous() const { return !uses_t_; }
  /// True when the expression is the literal constant zero.
  bool is_zero() const;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
  bool uses_t_ = false;
};

}  // namespace wentzell::cli
