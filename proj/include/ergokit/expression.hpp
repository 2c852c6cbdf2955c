#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ergokit {

/// Grammar accepted by Expression::parse:
///
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := unary ('^' factor)?
///   unary  := ('-')? atom
///   atom   := number | 'x' | identifier | identifier '(' expr (',' expr)* ')' | '(' expr ')'
///
/// Functions: sin cos exp abs sqrt (one argument), mod (two), min max (two or
/// more). `pi` is a constant; any other bare identifier is a named parameter,
/// bound at evaluation time.
class Expression {
 public:
  enum class Kind { Number, Variable, Parameter, Negate, Binary, Call };
  enum class Function { Sin, Cos, Exp, Abs, Sqrt, Mod, Min, Max };

  struct Node {
    Kind kind = Kind::Number;
    double value = 0.0;             // Number
    std::size_t parameter = 0;      // Parameter: index into parameter_names()
    char op = 0;                    // Binary: + - * / ^
    Function function = Function::Sin;  // Call
    std::vector<std::unique_ptr<const Node>> children;
  };

  static Expression parse(std::string_view text);

  /// `parameters` is indexed like parameter_names(); a NaN entry is unbound.
  double evaluate(double x, std::span<const double> parameters) const;

  const std::vector<std::string>& parameter_names() const noexcept { return state_->names; }
  const Node& root() const noexcept { return *state_->root; }

  /// Fully parenthesized form that reparses to a structurally identical tree.
  std::string to_string() const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  struct State {
    std::unique_ptr<const Node> root;
    std::vector<std::string> names;
  };
  explicit Expression(std::shared_ptr<const State> state) : state_(std::move(state)) {}

  std::shared_ptr<const State> state_;
};

std::string_view function_name(Expression::Function f) noexcept;

}  // namespace ergokit
