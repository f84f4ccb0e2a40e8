#include <lorhol/expr.hpp>

#include <lorhol/errors.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <type_traits>

namespace lorhol {

namespace {

struct FuncName {
  std::string_view name;
  Func func;
};

constexpr std::array<FuncName, 10> kFunctions{{
    {"sin", Func::Sin},
    {"cos", Func::Cos},
    {"tan", Func::Tan},
    {"exp", Func::Exp},
    {"log", Func::Log},
    {"sqrt", Func::Sqrt},
    {"abs", Func::Abs},
    {"sinh", Func::Sinh},
    {"cosh", Func::Cosh},
    {"tanh", Func::Tanh},
}};

std::string_view func_name(Func f) {
  for (const auto& entry : kFunctions)
    if (entry.func == f) return entry.name;
  return "?";
}

NodePtr make_binary(NodeKind kind, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_unary(NodeKind kind, NodePtr operand) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(operand);
  return n;
}

NodePtr make_constant(double c) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->value = c;
  return n;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Constant:
      out += format_number(n.value);
      return;
    case NodeKind::NamedConstant:
    case NodeKind::Variable:
      out += n.name;
      return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      const char* op = n.kind == NodeKind::Add   ? " + "
                       : n.kind == NodeKind::Sub ? " - "
                       : n.kind == NodeKind::Mul ? " * "
                                                 : " / ";
      out += '(';
      print(*n.lhs, out);
      out += op;
      print(*n.rhs, out);
      out += ')';
      return;
    }
    case NodeKind::Pow:
      out += '(';
      print(*n.lhs, out);
      out += '^';
      out += std::to_string(n.exponent);
      out += ')';
      return;
    case NodeKind::Neg:
      out += "(-";
      print(*n.lhs, out);
      out += ')';
      return;
    case NodeKind::Call:
      out += func_name(n.func);
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
  }
}

std::string node_text(const Node& n) {
  std::string s;
  print(n, s);
  return s;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(std::string_view src, std::span<const std::string> coords) : src_(src), coords_(coords) {}

  NodePtr parse() {
    NodePtr e = sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' but reached end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  NodePtr sum() {
    NodePtr lhs = product();
    for (;;) {
      if (accept('+'))
        lhs = make_binary(NodeKind::Add, lhs, product());
      else if (accept('-'))
        lhs = make_binary(NodeKind::Sub, lhs, product());
      else
        return lhs;
    }
  }

  NodePtr product() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = make_binary(NodeKind::Mul, lhs, unary());
      else if (accept('/'))
        lhs = make_binary(NodeKind::Div, lhs, unary());
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make_unary(NodeKind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (!accept('^')) return base;
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Pow;
    n->lhs = std::move(base);
    n->exponent = integer_exponent();
    return n;
  }

  int integer_exponent() {
    const bool paren = accept('(');
    skip_ws();
    const std::size_t start = pos_;
    bool negative = false;
    if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) {
      negative = src_[pos_] == '-';
      ++pos_;
    }
    const std::size_t digits_start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const bool trailing_fraction =
        pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E' ||
                               std::isalpha(static_cast<unsigned char>(src_[pos_])));
    if (pos_ == digits_start || trailing_fraction) {
      pos_ = start;
      fail("exponent must be an integer literal");
    }
    const std::string digits(src_.substr(digits_start, pos_ - digits_start));
    if (digits.size() > 6) {
      pos_ = start;
      fail("exponent too large");
    }
    if (paren) expect(')');
    const int k = std::stoi(digits);
    return negative ? -k : k;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = sum();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t count = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) fail("malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        digits();
      }
    }
    const std::string text(src_.substr(start, pos_ - start));
    const double v = std::strtod(text.c_str(), nullptr);
    if (!std::isfinite(v)) {
      pos_ = start;
      fail("number out of range");
    }
    return make_constant(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));

    for (std::size_t i = 0; i < coords_.size(); ++i) {
      if (coords_[i] == name) {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::Variable;
        n->var = static_cast<int>(i);
        n->name = name;
        return n;
      }
    }
    if (name == "pi" || name == "e") {
      auto n = std::make_shared<Node>();
      n->kind = NodeKind::NamedConstant;
      n->name = name;
      n->value = name == "pi" ? std::numbers::pi : std::numbers::e;
      return n;
    }
    for (const auto& entry : kFunctions) {
      if (entry.name == name) {
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] != '(') fail("expected '(' after function " + name);
        ++pos_;
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::Call;
        n->func = entry.func;
        n->lhs = sum();
        expect(')');
        return n;
      }
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  std::string_view src_;
  std::span<const std::string> coords_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

template <class T>
T lift(double c, int n) {
  if constexpr (std::is_same_v<T, double>)
    return c;
  else
    return T::constant(c, n);
}

template <class T>
constexpr bool kNeedsDerivative = !std::is_same_v<T, double>;

template <class T>
T checked(const Node& n, T r) {
  if (!std::isfinite(value_of(r))) throw DomainError("non-finite value", node_text(n));
  return r;
}

template <class T>
T reciprocal(const Node& where, const T& b) {
  const double x = value_of(b);
  if (x == 0.0) throw DomainError("division by zero", node_text(where));
  return chain(b, 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x));
}

template <class T>
T eval_node(const Node& n, std::span<const T> vars, int dim) {
  switch (n.kind) {
    case NodeKind::Constant:
    case NodeKind::NamedConstant:
      return lift<T>(n.value, dim);
    case NodeKind::Variable:
      if (n.var < 0 || static_cast<std::size_t>(n.var) >= vars.size())
        throw InputError("variable '" + n.name + "' has no value");
      return vars[static_cast<std::size_t>(n.var)];
    case NodeKind::Add:
      return checked(n, eval_node(*n.lhs, vars, dim) + eval_node(*n.rhs, vars, dim));
    case NodeKind::Sub:
      return checked(n, eval_node(*n.lhs, vars, dim) - eval_node(*n.rhs, vars, dim));
    case NodeKind::Mul:
      return checked(n, eval_node(*n.lhs, vars, dim) * eval_node(*n.rhs, vars, dim));
    case NodeKind::Div: {
      const T num = eval_node(*n.lhs, vars, dim);
      const T den = eval_node(*n.rhs, vars, dim);
      return checked(n, num * reciprocal(n, den));
    }
    case NodeKind::Neg:
      return -eval_node(*n.lhs, vars, dim);
    case NodeKind::Pow: {
      const int k = n.exponent;
      if (k == 0) return lift<T>(1.0, dim);
      const T a = eval_node(*n.lhs, vars, dim);
      const double x = value_of(a);
      if (k < 0 && x == 0.0) throw DomainError("negative power of zero", node_text(n));
      const double f0 = std::pow(x, k);
      const double f1 = k * std::pow(x, k - 1);
      const double f2 = (k == 1) ? 0.0 : k * (k - 1) * std::pow(x, k - 2);
      return checked(n, chain(a, f0, f1, f2));
    }
    case NodeKind::Call: {
      const T a = eval_node(*n.lhs, vars, dim);
      const double x = value_of(a);
      switch (n.func) {
        case Func::Sin:
          return chain(a, std::sin(x), std::cos(x), -std::sin(x));
        case Func::Cos:
          return chain(a, std::cos(x), -std::sin(x), -std::cos(x));
        case Func::Tan: {
          if (std::cos(x) == 0.0) throw DomainError("tan at a pole", node_text(n));
          const double t = std::tan(x);
          return checked(n, chain(a, t, 1.0 + t * t, 2.0 * t * (1.0 + t * t)));
        }
        case Func::Exp: {
          const double ex = std::exp(x);
          return checked(n, chain(a, ex, ex, ex));
        }
        case Func::Log:
          if (x <= 0.0) throw DomainError("log of nonpositive value", node_text(n));
          return chain(a, std::log(x), 1.0 / x, -1.0 / (x * x));
        case Func::Sqrt: {
          if (x < 0.0) throw DomainError("sqrt of negative value", node_text(n));
          if (x == 0.0 && kNeedsDerivative<T>)
            throw DomainError("sqrt not differentiable at 0", node_text(n));
          const double s = std::sqrt(x);
          return chain(a, s, 0.5 / s, -0.25 / (s * x));
        }
        case Func::Abs:
          if (x == 0.0 && kNeedsDerivative<T>)
            throw DomainError("abs not differentiable at 0", node_text(n));
          return chain(a, std::abs(x), x > 0 ? 1.0 : -1.0, 0.0);
        case Func::Sinh:
          return checked(n, chain(a, std::sinh(x), std::cosh(x), std::sinh(x)));
        case Func::Cosh:
          return checked(n, chain(a, std::cosh(x), std::sinh(x), std::cosh(x)));
        case Func::Tanh: {
          const double t = std::tanh(x);
          return chain(a, t, 1.0 - t * t, -2.0 * t * (1.0 - t * t));
        }
      }
      break;
    }
  }
  throw Error("corrupt expression node");
}

template <class T>
T eval_seeded(const Expr& e, std::span<const double> p) {
  const int dim = static_cast<int>(p.size());
  if (dim > kMaxDim) throw InputError("too many variables for jet evaluation");
  std::array<T, kMaxDim> vars{};
  for (int i = 0; i < dim; ++i) vars[i] = T::variable(p[i], i, dim);
  return eval_node<T>(e.root(), std::span<const T>(vars.data(), p.size()), dim);
}

bool nodes_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Constant:
      return a.value == b.value;
    case NodeKind::NamedConstant:
      return a.name == b.name;
    case NodeKind::Variable:
      return a.var == b.var && a.name == b.name;
    case NodeKind::Neg:
      return nodes_equal(*a.lhs, *b.lhs);
    case NodeKind::Pow:
      return a.exponent == b.exponent && nodes_equal(*a.lhs, *b.lhs);
    case NodeKind::Call:
      return a.func == b.func && nodes_equal(*a.lhs, *b.lhs);
    default:
      return nodes_equal(*a.lhs, *b.lhs) && nodes_equal(*a.rhs, *b.rhs);
  }
}

void collect_vars(const Node& n, std::vector<int>& out) {
  if (n.kind == NodeKind::Variable) out.push_back(n.var);
  if (n.lhs) collect_vars(*n.lhs, out);
  if (n.rhs) collect_vars(*n.rhs, out);
}

NodePtr remap(const NodePtr& n, std::span<const int> mapping, std::span<const std::string> names) {
  if (n->kind == NodeKind::Variable) {
    const int to = mapping[static_cast<std::size_t>(n->var)];
    auto out = std::make_shared<Node>(*n);
    out->var = to;
    out->name = names[static_cast<std::size_t>(to)];
    return out;
  }
  if (!n->lhs) return n;
  auto out = std::make_shared<Node>(*n);
  out->lhs = remap(n->lhs, mapping, names);
  if (n->rhs) out->rhs = remap(n->rhs, mapping, names);
  return out;
}

}  // namespace

Expr::Expr() : root_(make_constant(0.0)) {}

std::string Expr::to_string() const { return node_text(*root_); }

bool Expr::is_zero_literal() const {
  return root_->kind == NodeKind::Constant && root_->value == 0.0;
}

Expr Expr::constant(double c) {
  if (std::signbit(c) && c != 0.0) return Expr(make_unary(NodeKind::Neg, make_constant(-c)));
  return Expr(make_constant(c == 0.0 ? 0.0 : c));
}

Expr Expr::variable(int index, std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->var = index;
  n->name = std::move(name);
  return Expr(n);
}

Expr operator+(const Expr& a, const Expr& b) {
  return Expr(make_binary(NodeKind::Add, a.node(), b.node()));
}
Expr operator-(const Expr& a, const Expr& b) {
  return Expr(make_binary(NodeKind::Sub, a.node(), b.node()));
}
Expr operator*(const Expr& a, const Expr& b) {
  return Expr(make_binary(NodeKind::Mul, a.node(), b.node()));
}
Expr operator/(const Expr& a, const Expr& b) {
  return Expr(make_binary(NodeKind::Div, a.node(), b.node()));
}
Expr operator-(const Expr& a) { return Expr(make_unary(NodeKind::Neg, a.node())); }

Expr parse_expr(std::string_view source, std::span<const std::string> coords) {
  return Expr(Parser(source, coords).parse());
}

bool structurally_equal(const Expr& a, const Expr& b) { return nodes_equal(a.root(), b.root()); }

std::vector<int> variables_of(const Expr& e) {
  std::vector<int> out;
  collect_vars(e.root(), out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Expr remap_variables(const Expr& e, std::span<const int> mapping,
                     std::span<const std::string> names) {
  return Expr(remap(e.node(), mapping, names));
}

double eval(const Expr& e, std::span<const double> p) {
  return eval_node<double>(e.root(), p, static_cast<int>(p.size()));
}

Jet1 eval_jet1(const Expr& e, std::span<const double> p) { return eval_seeded<Jet1>(e, p); }

Jet2 eval_jet2(const Expr& e, std::span<const double> p) { return eval_seeded<Jet2>(e, p); }

}  // namespace lorhol
