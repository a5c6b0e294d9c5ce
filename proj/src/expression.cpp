#include "lcs/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "lcs/error.hpp"

namespace lcs {

struct Expression::Node {
  enum class Kind { Number, Variable, Unary, Binary, Call } kind;
  double number = 0.0;
  std::string name;
  char op = 0;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr parse_all() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + std::string(s_) + "': " + what + " at position " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr binary(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Binary;
    n->op = op;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = binary('+', lhs, term());
      else if (accept('-'))
        lhs = binary('-', lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = binary('*', lhs, unary());
      else if (accept('/'))
        lhs = binary('/', lhs, unary());
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Unary;
      n->op = '-';
      n->args = {unary()};
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return binary('^', base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (accept('(')) {
      auto n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
      if (ec != std::errc()) fail("bad number");
      pos_ = static_cast<std::size_t>(ptr - s_.data());
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Number;
      n->number = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      auto n = std::make_shared<Node>();
      if (accept('(')) {
        n->kind = Node::Kind::Call;
        n->name = name;
        n->args.push_back(expr());
        while (accept(',')) n->args.push_back(expr());
        if (!accept(')')) fail("expected ')'");
        const std::size_t arity = name == "gauss" ? 3 : 1;
        if (name != "cos" && name != "sin" && name != "exp" && name != "const" && name != "gauss")
          fail("unknown function '" + name + "'");
        if (n->args.size() != arity) fail("wrong number of arguments to " + name);
        return n;
      }
      if (name != "pi" && name != "x" && name != "y" && name != "theta" && name != "phi" && name != "X" &&
          name != "Y" && name != "Z")
        fail("unknown name '" + name + "'");
      n->kind = Node::Kind::Variable;
      n->name = name;
      return n;
    }
    fail("unexpected character");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

struct Context {
  SurfaceKind kind;
  SurfacePoint p;
  const std::function<double(SurfacePoint, SurfacePoint)>* distance;
  bool constant_only;
};

double eval(const Node& n, const Context& ctx) {
  switch (n.kind) {
    case Node::Kind::Number:
      return n.number;
    case Node::Kind::Variable: {
      if (n.name == "pi") return std::numbers::pi;
      if (ctx.constant_only) throw ConfigError("expression references coordinate '" + n.name + "'");
      const bool torus = ctx.kind == SurfaceKind::Torus;
      if (n.name == "x" || n.name == "y") {
        if (!torus) throw ConfigError("'" + n.name + "' is only defined on the torus");
        return n.name == "x" ? ctx.p.a : ctx.p.b;
      }
      if (torus) throw ConfigError("'" + n.name + "' is only defined on the sphere");
      if (n.name == "theta") return ctx.p.a;
      if (n.name == "phi") return ctx.p.b;
      if (n.name == "X") return std::sin(ctx.p.a) * std::cos(ctx.p.b);
      if (n.name == "Y") return std::sin(ctx.p.a) * std::sin(ctx.p.b);
      return std::cos(ctx.p.a);
    }
    case Node::Kind::Unary:
      return -eval(*n.args[0], ctx);
    case Node::Kind::Binary: {
      const double a = eval(*n.args[0], ctx), b = eval(*n.args[1], ctx);
      switch (n.op) {
        case '+':
          return a + b;
        case '-':
          return a - b;
        case '*':
          return a * b;
        case '/':
          return a / b;
        default:
          return std::pow(a, b);
      }
    }
    case Node::Kind::Call: {
      if (n.name == "gauss") {
        if (ctx.constant_only) throw ConfigError("gauss() needs a surface point");
        const SurfacePoint c{eval(*n.args[0], ctx), eval(*n.args[1], ctx)};
        const double s = eval(*n.args[2], ctx);
        const double d = (*ctx.distance)(ctx.p, c);
        return std::exp(-d * d / (2.0 * s * s));
      }
      const double a = eval(*n.args[0], ctx);
      if (n.name == "cos") return std::cos(a);
      if (n.name == "sin") return std::sin(a);
      if (n.name == "exp") return std::exp(a);
      return a;  // const
    }
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.text_ = std::string(text);
  e.root_ = Parser(text).parse_all();
  return e;
}

double Expression::evaluate(SurfaceKind kind, SurfacePoint p,
                            const std::function<double(SurfacePoint, SurfacePoint)>& distance) const {
  return eval(*root_, Context{kind, p, &distance, false});
}

double Expression::evaluate_constant() const {
  return eval(*root_, Context{SurfaceKind::Torus, {}, nullptr, true});
}

Field field_from_expression(const GridPtr& grid, const Expression& expr) {
  const std::function<double(SurfacePoint, SurfacePoint)> dist = [&](SurfacePoint a, SurfacePoint b) {
    return grid->distance(a, b);
  };
  return Field::from_function(grid, [&](SurfacePoint p) { return expr.evaluate(grid->kind(), p, dist); });
}

double parse_number(std::string_view text) { return Expression::parse(text).evaluate_constant(); }

}  // namespace lcs
