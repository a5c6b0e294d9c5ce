#pragma once

// Small arithmetic language for weights in configuration files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Names: pi, x, y (torus coordinates), theta, phi, X, Y, Z (sphere angles and
// embedding coordinates). Functions: cos, sin, exp, const(c), and
// gauss(a, b, s) = exp(-d^2 / (2 s^2)) with d the surface distance to the
// point (a, b).

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "lcs/surface.hpp"

namespace lcs {

class Expression {
 public:
  struct Node;

  /// Throws ConfigError with the offending position on malformed input.
  static Expression parse(std::string_view text);

  const std::string& text() const noexcept { return text_; }

  /// Evaluates at a surface point; `distance` is used by gauss().
  double evaluate(SurfaceKind kind, SurfacePoint p,
                  const std::function<double(SurfacePoint, SurfacePoint)>& distance) const;
  /// Evaluates an expression that references no coordinates.
  double evaluate_constant() const;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

Field field_from_expression(const GridPtr& grid, const Expression& expr);

/// Parses a numeric value that may be a constant expression, e.g. "9*pi".
double parse_number(std::string_view text);

}  // namespace lcs
