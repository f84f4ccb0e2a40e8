#pragma once

// Scalar expressions over chart coordinates.
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := atom ('^' integer)?        integer may carry a sign, optionally
//                                         parenthesized: x^2, x^-1, x^(-1)
//   atom    := number | name | func '(' sum ')' | '(' sum ')'
// Names resolve to coordinates first, then to the constants pi and e.
// Functions: sin cos tan exp log sqrt abs sinh cosh tanh.

#include <lorhol/jet.hpp>

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lorhol {

enum class NodeKind { Constant, NamedConstant, Variable, Add, Sub, Mul, Div, Pow, Neg, Call };

enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Sinh, Cosh, Tanh };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;   // Constant / NamedConstant
  std::string name;     // NamedConstant ("pi", "e") / Variable
  int var = -1;         // Variable index into the coordinate list
  int exponent = 0;     // Pow
  Func func = Func::Sin;
  NodePtr lhs;          // unary operand or left operand
  NodePtr rhs;
};

// Immutable expression tree. Copies share structure.
class Expr {
 public:
  Expr();  // the constant 0
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  const Node& root() const { return *root_; }
  const NodePtr& node() const { return root_; }

  // Canonical, fully parenthesized text; parses back to an identical tree.
  std::string to_string() const;

  bool is_zero_literal() const;

  static Expr constant(double c);  // negative values become Neg(Constant)
  static Expr variable(int index, std::string name);

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  NodePtr root_;
};

Expr parse_expr(std::string_view source, std::span<const std::string> coords);

bool structurally_equal(const Expr& a, const Expr& b);

// Variable indices referenced by the expression, sorted, unique.
std::vector<int> variables_of(const Expr& e);

// Rebuilds `e` with variable i renamed to index mapping[i] and names[mapping[i]].
Expr remap_variables(const Expr& e, std::span<const int> mapping,
                     std::span<const std::string> names);

// Evaluation. Domain violations throw DomainError naming the subexpression.
double eval(const Expr& e, std::span<const double> p);
Jet1 eval_jet1(const Expr& e, std::span<const double> p);
Jet2 eval_jet2(const Expr& e, std::span<const double> p);

}  // namespace lorhol
