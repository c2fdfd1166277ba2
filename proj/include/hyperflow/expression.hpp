#pragma once

// Small expression language for profile descriptors, e.g. "r - 1" or
// "pow(cosh(r), 2) / sinh(r)".
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | 'pi' | variable | func '(' args ')' | '(' expr ')'
//
// Functions: sinh cosh tanh exp log sqrt pow(a, b) const(c).

#include <memory>
#include <string>

namespace hyperflow {

class Expression {
 public:
  struct Node;

  /// Parses `text` with a single free variable named `variable`.
  /// Throws InvalidArgument with the offending column on syntax errors.
  static Expression parse(const std::string& text, const std::string& variable);

  double operator()(double x) const;

  const std::string& text() const { return text_; }
  const std::string& variable() const { return variable_; }
  /// True when the variable does not occur.
  bool is_constant() const;

 private:
  std::string text_;
  std::string variable_;
  std::shared_ptr<const Node> root_;
};

}  // namespace hyperflow
