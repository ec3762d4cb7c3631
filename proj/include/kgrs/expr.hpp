#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrs/jet.hpp"

namespace kgrs {

enum class UnaryOp { Neg, Exp, Log, Sin, Cos, Sqrt, Tanh, Cosh, Sinh };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

const char* unary_name(UnaryOp op);

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { Constant, Variable, Unary, Binary };

  Kind kind = Kind::Constant;
  double value = 0.0;  // constant
  int variable = 0;    // 0-based coordinate index
  int exponent = 0;    // integer exponent for BinaryOp::Pow
  UnaryOp unary = UnaryOp::Neg;
  BinaryOp binary = BinaryOp::Add;
  NodePtr lhs;  // operand of unary nodes, base of Pow
  NodePtr rhs;
};

// Immutable scalar expression in chart coordinates x1..x_dim.
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {}

  static Expr constant(double v, int dim);
  static Expr variable(int index, int dim);  // 0-based

  const ExprNode& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }
  int dim() const noexcept { return dim_; }
  bool empty() const noexcept { return !root_; }

  // True when the tree is a constant leaf (after parsing, "0" or "-1.5").
  bool is_constant() const;

  // Deterministic text form accepted by parse(); structurally exact.
  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  Expr pow(int exponent) const;
  Expr apply(UnaryOp op) const;

 private:
  NodePtr root_;
  int dim_ = 0;
};

bool structurally_equal(const ExprNode& a, const ExprNode& b);

// Grammar:
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | atom ("^" ["-"] integer)?
//   atom   := number | ident | ident "(" expr ")" | "(" expr ")"
// A "-" applied directly to a number literal folds into a negative constant.
Expr parse(std::string_view text, int dim);

struct EvalOptions {
  double division_floor = 1e-14;
};

double eval(const Expr& e, std::span<const double> point, const EvalOptions& opt = {});
Jet eval_jet(const Expr& e, std::span<const double> point, int order,
             const EvalOptions& opt = {});

// Flattened postfix program for fast repeated plain evaluation (grid scans).
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e, const EvalOptions& opt = {});

  double operator()(std::span<const double> point) const;

  // Evaluates at `count` points whose coordinates are given column-wise:
  // coords[v][i] is coordinate v of point i. Invalid points yield NaN.
  void eval_batch(std::span<const double* const> coords, std::size_t count,
                  double* out) const;

 private:
  struct Instr {
    enum class Op : unsigned char { Const, Var, Neg, Exp, Log, Sin, Cos, Sqrt, Tanh, Cosh, Sinh,
                                    Add, Sub, Mul, Div, Pow };
    Op op;
    int arg = 0;
    double value = 0.0;
  };
  void emit(const ExprNode& n);

  std::vector<Instr> code_;
  int max_stack_ = 0;
  double floor_ = 1e-14;
};

struct FdDiscrepancy {
  double gradient = 0.0;      // max relative difference, gradient entries
  double hessian = 0.0;       // max relative difference, Hessian entries
  double max() const { return gradient > hessian ? gradient : hessian; }
};

// Compares jet derivatives with fourth-order central differences. Gradient
// step 1e-4 * max(1, |x_i|); second derivatives use 1e-2 * max(1, |x_i|).
FdDiscrepancy fd_crosscheck(const Expr& e, std::span<const double> point,
                            const EvalOptions& opt = {});

}  // namespace kgrs
