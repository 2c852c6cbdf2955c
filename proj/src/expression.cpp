#include "ergokit/expression.hpp"

#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <optional>
#include <utility>

#include "ergokit/errors.hpp"

namespace ergokit {
namespace {

using Node = Expression::Node;
using NodePtr = std::unique_ptr<const Node>;
using Function = Expression::Function;

struct FunctionInfo {
  std::string_view name;
  Function id;
  std::size_t min_args;
  std::size_t max_args;
};

constexpr std::array<FunctionInfo, 8> kFunctions{{
    {"sin", Function::Sin, 1, 1},
    {"cos", Function::Cos, 1, 1},
    {"exp", Function::Exp, 1, 1},
    {"abs", Function::Abs, 1, 1},
    {"sqrt", Function::Sqrt, 1, 1},
    {"mod", Function::Mod, 2, 2},
    {"min", Function::Min, 2, static_cast<std::size_t>(-1)},
    {"max", Function::Max, 2, static_cast<std::size_t>(-1)},
}};

const FunctionInfo* find_function(std::string_view name) {
  for (const auto& f : kFunctions)
    if (f.name == name) return &f;
  return nullptr;
}

NodePtr make_number(double v) {
  auto n = std::make_unique<Node>();
  n->kind = Expression::Kind::Number;
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    NodePtr e = parse_expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

  std::vector<std::string> take_names() { return std::move(names_); }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, pos_ + 1); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr binary(char op, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_unique<Node>();
    n->kind = Expression::Kind::Binary;
    n->op = op;
    n->children.push_back(std::move(lhs));
    n->children.push_back(std::move(rhs));
    return n;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+'))
        lhs = binary('+', std::move(lhs), parse_term());
      else if (accept('-'))
        lhs = binary('-', std::move(lhs), parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (accept('*'))
        lhs = binary('*', std::move(lhs), parse_factor());
      else if (accept('/'))
        lhs = binary('/', std::move(lhs), parse_factor());
      else
        return lhs;
    }
  }

  NodePtr parse_factor() {
    NodePtr base = parse_unary();
    if (accept('^')) return binary('^', std::move(base), parse_factor());
    return base;
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      auto n = std::make_unique<Node>();
      n->kind = Expression::Kind::Negate;
      n->children.push_back(parse_atom());
      return n;
    }
    return parse_atom();
  }

  NodePtr parse_atom() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        digits();
      else
        pos_ = mark;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return make_number(value);
  }

  NodePtr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));

    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      const FunctionInfo* info = find_function(name);
      if (info == nullptr) throw UnknownIdentifier(name, start + 1);
      ++pos_;
      auto n = std::make_unique<Node>();
      n->kind = Expression::Kind::Call;
      n->function = info->id;
      n->children.push_back(parse_expr());
      while (accept(',')) n->children.push_back(parse_expr());
      expect(')');
      if (n->children.size() < info->min_args || n->children.size() > info->max_args) {
        pos_ = start;
        fail("wrong number of arguments to '" + name + "'");
      }
      return n;
    }

    if (name == "x") {
      auto n = std::make_unique<Node>();
      n->kind = Expression::Kind::Variable;
      return n;
    }
    if (name == "pi") return make_number(std::numbers::pi);

    auto n = std::make_unique<Node>();
    n->kind = Expression::Kind::Parameter;
    std::size_t index = 0;
    while (index < names_.size() && names_[index] != name) ++index;
    if (index == names_.size()) names_.push_back(name);
    n->parameter = index;
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::string> names_;
};

double eval_node(const Node& n, double x, std::span<const double> params,
                 const std::vector<std::string>& names) {
  switch (n.kind) {
    case Expression::Kind::Number:
      return n.value;
    case Expression::Kind::Variable:
      return x;
    case Expression::Kind::Parameter: {
      double v = n.parameter < params.size() ? params[n.parameter] : std::nan("");
      if (std::isnan(v)) throw UnboundParameter(names[n.parameter]);
      return v;
    }
    case Expression::Kind::Negate:
      return -eval_node(*n.children[0], x, params, names);
    case Expression::Kind::Binary: {
      double a = eval_node(*n.children[0], x, params, names);
      double b = eval_node(*n.children[1], x, params, names);
      switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default: return std::pow(a, b);
      }
    }
    case Expression::Kind::Call: {
      double a = eval_node(*n.children[0], x, params, names);
      switch (n.function) {
        case Function::Sin: return std::sin(a);
        case Function::Cos: return std::cos(a);
        case Function::Exp: return std::exp(a);
        case Function::Abs: return std::fabs(a);
        case Function::Sqrt: return std::sqrt(a);
        case Function::Mod: {
          double b = eval_node(*n.children[1], x, params, names);
          return a - b * std::floor(a / b);
        }
        case Function::Min:
        case Function::Max: {
          for (std::size_t i = 1; i < n.children.size(); ++i) {
            double b = eval_node(*n.children[i], x, params, names);
            a = n.function == Function::Min ? std::fmin(a, b) : std::fmax(a, b);
          }
          return a;
        }
      }
    }
  }
  return std::nan("");
}

void print_node(const Node& n, const std::vector<std::string>& names, std::string& out) {
  switch (n.kind) {
    case Expression::Kind::Number: {
      std::array<char, 32> buf{};
      std::snprintf(buf.data(), buf.size(), "%.17g", n.value);
      out += buf.data();
      return;
    }
    case Expression::Kind::Variable:
      out += 'x';
      return;
    case Expression::Kind::Parameter:
      out += names[n.parameter];
      return;
    case Expression::Kind::Negate:
      out += "(-(";
      print_node(*n.children[0], names, out);
      out += "))";
      return;
    case Expression::Kind::Binary:
      out += '(';
      print_node(*n.children[0], names, out);
      out += n.op;
      print_node(*n.children[1], names, out);
      out += ')';
      return;
    case Expression::Kind::Call:
      out += function_name(n.function);
      out += '(';
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i > 0) out += ',';
        print_node(*n.children[i], names, out);
      }
      out += ')';
      return;
  }
}

bool same_tree(const Node& a, const Node& b, const std::vector<std::string>& na,
               const std::vector<std::string>& nb) {
  if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
  switch (a.kind) {
    case Expression::Kind::Number:
      if (std::memcmp(&a.value, &b.value, sizeof(double)) != 0) return false;
      break;
    case Expression::Kind::Parameter:
      if (na[a.parameter] != nb[b.parameter]) return false;
      break;
    case Expression::Kind::Binary:
      if (a.op != b.op) return false;
      break;
    case Expression::Kind::Call:
      if (a.function != b.function) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!same_tree(*a.children[i], *b.children[i], na, nb)) return false;
  return true;
}

}  // namespace

std::string_view function_name(Expression::Function f) noexcept {
  for (const auto& info : kFunctions)
    if (info.id == f) return info.name;
  return "?";
}

Expression Expression::parse(std::string_view text) {
  Parser parser(text);
  auto state = std::make_shared<State>();
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw SyntaxError("empty expression", 1);
  state->root = parser.parse_all();
  state->names = parser.take_names();
  return Expression(std::move(state));
}

double Expression::evaluate(double x, std::span<const double> parameters) const {
  return eval_node(*state_->root, x, parameters, state_->names);
}

std::string Expression::to_string() const {
  std::string out;
  print_node(*state_->root, state_->names, out);
  return out;
}

bool operator==(const Expression& a, const Expression& b) {
  return same_tree(a.root(), b.root(), a.parameter_names(), b.parameter_names());
}

}  // namespace ergokit
