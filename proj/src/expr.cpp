#include "kgrs/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "kgrs/error.hpp"

namespace kgrs {

namespace {

struct FunctionName {
  const char* name;
  UnaryOp op;
};

constexpr FunctionName kFunctions[] = {
    {"exp", UnaryOp::Exp},   {"log", UnaryOp::Log},   {"sin", UnaryOp::Sin},
    {"cos", UnaryOp::Cos},   {"sqrt", UnaryOp::Sqrt}, {"tanh", UnaryOp::Tanh},
    {"cosh", UnaryOp::Cosh}, {"sinh", UnaryOp::Sinh},
};

NodePtr make_constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Constant;
  n->value = v;
  return n;
}

NodePtr make_variable(int index) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Variable;
  n->variable = index;
  return n;
}

NodePtr make_unary(UnaryOp op, NodePtr arg) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Unary;
  n->unary = op;
  n->lhs = std::move(arg);
  return n;
}

NodePtr make_binary(BinaryOp op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Binary;
  n->binary = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr make_pow(NodePtr base, int exponent) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Binary;
  n->binary = BinaryOp::Pow;
  n->exponent = exponent;
  n->lhs = std::move(base);
  return n;
}

class Parser {
 public:
  Parser(std::string_view text, int dim) : s_(text), dim_(dim) {}

  NodePtr parse_all() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ < s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, ErrorKind kind = ErrorKind::Syntax) const {
    throw SyntaxError(kind, msg, pos_);
  }
  [[noreturn]] void fail_at(std::size_t at, const std::string& msg, ErrorKind kind) const {
    throw SyntaxError(kind, msg, at);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(BinaryOp::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make_binary(BinaryOp::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(BinaryOp::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = make_binary(BinaryOp::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor() {
    if (peek() == '-') {
      // Unary minus binds looser than '^': -x1^2 == -(x1^2).
      ++pos_;
      skip_ws();
      const bool literal = pos_ < s_.size() &&
                           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.');
      if (literal) {
        NodePtr num = number();
        if (peek() != '^') return make_constant(-num->value);
        return make_unary(UnaryOp::Neg, power_suffix(num));
      }
      return make_unary(UnaryOp::Neg, factor());
    }
    return power_suffix(atom());
  }

  NodePtr power_suffix(NodePtr base) {
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      bool negative = false;
      if (pos_ < s_.size() && s_[pos_] == '-') {
        negative = true;
        ++pos_;
      }
      const std::size_t digits = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == digits) fail_at(start, "integer exponent expected", ErrorKind::Syntax);
      if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E')) {
        fail_at(start, "exponent must be an integer", ErrorKind::Syntax);
      }
      const std::string text(s_.substr(digits, pos_ - digits));
      if (text.size() > 3) fail_at(start, "exponent too large", ErrorKind::Syntax);
      int value = std::stoi(text);
      if (negative) value = -value;
      return make_pow(base, value);
    }
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (peek() == ',') fail("unexpected ','", ErrorKind::Arity);
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t count = digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) fail_at(start, "malformed number", ErrorKind::Syntax);
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    const std::string text(s_.substr(start, pos_ - start));
    const double v = std::strtod(text.c_str(), nullptr);
    if (!std::isfinite(v)) fail_at(start, "number out of range", ErrorKind::Syntax);
    return make_constant(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(s_.substr(start, pos_ - start));
    if (name.size() >= 2 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      const int index = name.size() > 3 ? 0 : std::stoi(name.substr(1));
      if (index < 1 || index > dim_) {
        fail_at(start, "unknown identifier '" + name + "' for chart dimension " + std::to_string(dim_),
                ErrorKind::UnknownIdentifier);
      }
      if (peek() == '(') fail("variable '" + name + "' is not callable", ErrorKind::Arity);
      return make_variable(index - 1);
    }
    for (const auto& f : kFunctions) {
      if (name == f.name) {
        if (!accept('(')) {
          fail("function '" + name + "' expects one parenthesized argument", ErrorKind::Arity);
        }
        if (peek() == ')') fail("function '" + name + "' expects one argument", ErrorKind::Arity);
        NodePtr arg = expr();
        if (peek() == ',') fail("function '" + name + "' expects one argument", ErrorKind::Arity);
        if (!accept(')')) fail("expected ')'");
        return make_unary(f.op, arg);
      }
    }
    fail_at(start, "unknown identifier '" + name + "'", ErrorKind::UnknownIdentifier);
  }

  std::string_view s_;
  int dim_;
  std::size_t pos_ = 0;
};

std::string format_number(double v) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::InvalidArgument, "cannot serialize a non-finite constant");
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", std::fabs(v));
  std::string s(buf);
  return std::signbit(v) ? "-" + s : s;
}

void serialize(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      out += format_number(n.value);
      return;
    case ExprNode::Kind::Variable:
      out += "x" + std::to_string(n.variable + 1);
      return;
    case ExprNode::Kind::Unary:
      out += n.unary == UnaryOp::Neg ? std::string("-") : std::string(unary_name(n.unary));
      out += "(";
      serialize(*n.lhs, out);
      out += ")";
      return;
    case ExprNode::Kind::Binary:
      if (n.binary == BinaryOp::Pow) {
        out += "(";
        serialize(*n.lhs, out);
        out += ")^" + std::to_string(n.exponent);
        return;
      }
      out += "(";
      serialize(*n.lhs, out);
      switch (n.binary) {
        case BinaryOp::Add: out += " + "; break;
        case BinaryOp::Sub: out += " - "; break;
        case BinaryOp::Mul: out += " * "; break;
        case BinaryOp::Div: out += " / "; break;
        case BinaryOp::Pow: break;
      }
      serialize(*n.rhs, out);
      out += ")";
      return;
  }
}

double apply_unary(UnaryOp op, double v) {
  switch (op) {
    case UnaryOp::Neg: return -v;
    case UnaryOp::Exp: return std::exp(v);
    case UnaryOp::Log:
      if (!(v > 0.0)) throw Error(ErrorKind::Domain, "log of nonpositive value " + std::to_string(v));
      return std::log(v);
    case UnaryOp::Sin: return std::sin(v);
    case UnaryOp::Cos: return std::cos(v);
    case UnaryOp::Sqrt:
      if (v < 0.0) throw Error(ErrorKind::Domain, "sqrt of negative value " + std::to_string(v));
      return std::sqrt(v);
    case UnaryOp::Tanh: return std::tanh(v);
    case UnaryOp::Cosh: return std::cosh(v);
    case UnaryOp::Sinh: return std::sinh(v);
  }
  return v;
}

double checked_div(double a, double b, double floor) {
  if (!(std::fabs(b) >= floor)) {
    throw Error(ErrorKind::Domain, "division by near-zero value " + std::to_string(b));
  }
  return a / b;
}

double int_pow(double base, int exponent, double floor) {
  if (exponent < 0) return checked_div(1.0, int_pow(base, -exponent, floor), floor);
  double r = 1.0;
  double b = base;
  unsigned e = static_cast<unsigned>(exponent);
  while (e) {
    if (e & 1u) r *= b;
    e >>= 1u;
    if (e) b *= b;
  }
  return r;
}

double eval_node(const ExprNode& n, std::span<const double> x, const EvalOptions& opt) {
  switch (n.kind) {
    case ExprNode::Kind::Constant: return n.value;
    case ExprNode::Kind::Variable: return x[n.variable];
    case ExprNode::Kind::Unary: return apply_unary(n.unary, eval_node(*n.lhs, x, opt));
    case ExprNode::Kind::Binary: {
      const double a = eval_node(*n.lhs, x, opt);
      switch (n.binary) {
        case BinaryOp::Add: return a + eval_node(*n.rhs, x, opt);
        case BinaryOp::Sub: return a - eval_node(*n.rhs, x, opt);
        case BinaryOp::Mul: return a * eval_node(*n.rhs, x, opt);
        case BinaryOp::Div: return checked_div(a, eval_node(*n.rhs, x, opt), opt.division_floor);
        case BinaryOp::Pow: return int_pow(a, n.exponent, opt.division_floor);
      }
    }
  }
  return 0.0;
}

Jet jet_node(const ExprNode& n, std::span<const double> x, int dim, int order,
             const EvalOptions& opt) {
  switch (n.kind) {
    case ExprNode::Kind::Constant: return Jet(dim, order, n.value);
    case ExprNode::Kind::Variable: return Jet::variable(dim, order, n.variable, x[n.variable]);
    case ExprNode::Kind::Unary: {
      Jet a = jet_node(*n.lhs, x, dim, order, opt);
      switch (n.unary) {
        case UnaryOp::Neg: return -a;
        case UnaryOp::Exp: return exp(a);
        case UnaryOp::Log: return log(a);
        case UnaryOp::Sin: return sin(a);
        case UnaryOp::Cos: return cos(a);
        case UnaryOp::Sqrt: return sqrt(a);
        case UnaryOp::Tanh: return tanh(a);
        case UnaryOp::Cosh: return cosh(a);
        case UnaryOp::Sinh: return sinh(a);
      }
      return a;
    }
    case ExprNode::Kind::Binary: {
      Jet a = jet_node(*n.lhs, x, dim, order, opt);
      if (n.binary == BinaryOp::Pow) return ipow(a, n.exponent, opt.division_floor);
      // Constant factors skip the full product table.
      if (n.rhs->kind == ExprNode::Kind::Constant) {
        const double c = n.rhs->value;
        switch (n.binary) {
          case BinaryOp::Add: return a += c;
          case BinaryOp::Sub: return a += -c;
          case BinaryOp::Mul: return a *= c;
          case BinaryOp::Div:
            if (!(std::fabs(c) >= opt.division_floor)) {
              throw Error(ErrorKind::Domain, "division by near-zero constant");
            }
            return a *= 1.0 / c;
          case BinaryOp::Pow: break;
        }
      }
      Jet b = jet_node(*n.rhs, x, dim, order, opt);
      switch (n.binary) {
        case BinaryOp::Add: return a += b;
        case BinaryOp::Sub: return a -= b;
        case BinaryOp::Mul:
          if (n.lhs->kind == ExprNode::Kind::Constant) return b *= n.lhs->value;
          return a * b;
        case BinaryOp::Div: return divide(a, b, opt.division_floor);
        case BinaryOp::Pow: break;
      }
    }
  }
  return Jet(dim, order);
}

}  // namespace

const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "neg";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Log: return "log";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Tanh: return "tanh";
    case UnaryOp::Cosh: return "cosh";
    case UnaryOp::Sinh: return "sinh";
  }
  return "?";
}

Expr Expr::constant(double v, int dim) { return Expr(make_constant(v), dim); }
Expr Expr::variable(int index, int dim) {
  if (index < 0 || index >= dim) throw Error(ErrorKind::InvalidArgument, "variable index out of range");
  return Expr(make_variable(index), dim);
}

bool Expr::is_constant() const { return root_ && root_->kind == ExprNode::Kind::Constant; }

std::string Expr::to_string() const {
  std::string out;
  if (root_) serialize(*root_, out);
  return out;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(make_binary(BinaryOp::Add, a.root_, b.root_), a.dim_); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make_binary(BinaryOp::Sub, a.root_, b.root_), a.dim_); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make_binary(BinaryOp::Mul, a.root_, b.root_), a.dim_); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make_binary(BinaryOp::Div, a.root_, b.root_), a.dim_); }
Expr operator-(const Expr& a) { return Expr(make_unary(UnaryOp::Neg, a.root_), a.dim_); }
Expr Expr::pow(int exponent) const { return Expr(make_pow(root_, exponent), dim_); }
Expr Expr::apply(UnaryOp op) const { return Expr(make_unary(op, root_), dim_); }

bool structurally_equal(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprNode::Kind::Constant: return a.value == b.value;
    case ExprNode::Kind::Variable: return a.variable == b.variable;
    case ExprNode::Kind::Unary: return a.unary == b.unary && structurally_equal(*a.lhs, *b.lhs);
    case ExprNode::Kind::Binary:
      if (a.binary != b.binary) return false;
      if (a.binary == BinaryOp::Pow) return a.exponent == b.exponent && structurally_equal(*a.lhs, *b.lhs);
      return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
  }
  return false;
}

Expr parse(std::string_view text, int dim) {
  if (dim < 1 || dim > Jet::kMaxDim) {
    throw Error(ErrorKind::InvalidArgument, "chart dimension must be between 1 and 4");
  }
  Parser p(text, dim);
  return Expr(p.parse_all(), dim);
}

double eval(const Expr& e, std::span<const double> point, const EvalOptions& opt) {
  if (static_cast<int>(point.size()) != e.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "point dimension does not match expression chart");
  }
  return eval_node(e.root(), point, opt);
}

Jet eval_jet(const Expr& e, std::span<const double> point, int order, const EvalOptions& opt) {
  if (static_cast<int>(point.size()) != e.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "point dimension does not match expression chart");
  }
  if (order < 0 || order > Jet::kMaxOrder) {
    throw Error(ErrorKind::InvalidArgument, "jet order must be 0..4");
  }
  return jet_node(e.root(), point, e.dim(), order, opt);
}

CompiledExpr::CompiledExpr(const Expr& e, const EvalOptions& opt) : floor_(opt.division_floor) {
  emit(e.root());
  int depth = 0;
  for (const auto& in : code_) {
    using Op = Instr::Op;
    switch (in.op) {
      case Op::Const:
      case Op::Var: ++depth; break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: --depth; break;
      default: break;
    }
    max_stack_ = std::max(max_stack_, depth);
  }
}

void CompiledExpr::emit(const ExprNode& n) {
  using Op = Instr::Op;
  switch (n.kind) {
    case ExprNode::Kind::Constant: code_.push_back({Op::Const, 0, n.value}); return;
    case ExprNode::Kind::Variable: code_.push_back({Op::Var, n.variable, 0.0}); return;
    case ExprNode::Kind::Unary: {
      emit(*n.lhs);
      static constexpr Op map[] = {Op::Neg, Op::Exp, Op::Log, Op::Sin, Op::Cos,
                                   Op::Sqrt, Op::Tanh, Op::Cosh, Op::Sinh};
      code_.push_back({map[static_cast<int>(n.unary)], 0, 0.0});
      return;
    }
    case ExprNode::Kind::Binary:
      emit(*n.lhs);
      if (n.binary == BinaryOp::Pow) {
        code_.push_back({Op::Pow, n.exponent, 0.0});
        return;
      }
      emit(*n.rhs);
      switch (n.binary) {
        case BinaryOp::Add: code_.push_back({Op::Add}); break;
        case BinaryOp::Sub: code_.push_back({Op::Sub}); break;
        case BinaryOp::Mul: code_.push_back({Op::Mul}); break;
        case BinaryOp::Div: code_.push_back({Op::Div}); break;
        case BinaryOp::Pow: break;
      }
      return;
  }
}

double CompiledExpr::operator()(std::span<const double> point) const {
  const double* cols[Jet::kMaxDim];
  for (std::size_t v = 0; v < point.size() && v < Jet::kMaxDim; ++v) cols[v] = &point[v];
  double out = 0.0;
  eval_batch(std::span<const double* const>(cols, point.size()), 1, &out);
  return out;
}

void CompiledExpr::eval_batch(std::span<const double* const> coords, std::size_t count,
                              double* out) const {
  using Op = Instr::Op;
  constexpr std::size_t kChunk = 256;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> stack(static_cast<std::size_t>(std::max(max_stack_, 1)) * kChunk);
  for (std::size_t base = 0; base < count; base += kChunk) {
    const std::size_t m = std::min(kChunk, count - base);
    int sp = 0;
    for (const auto& in : code_) {
      double* top = stack.data() + static_cast<std::size_t>(sp) * kChunk;
      double* a = top - kChunk;  // operand of unary ops, lhs of binary ops
      switch (in.op) {
        case Op::Const:
          std::fill_n(top, m, in.value);
          ++sp;
          break;
        case Op::Var: {
          const double* src = coords[in.arg] + base;
          std::copy_n(src, m, top);
          ++sp;
          break;
        }
        case Op::Neg: for (std::size_t i = 0; i < m; ++i) a[i] = -a[i]; break;
        case Op::Exp: for (std::size_t i = 0; i < m; ++i) a[i] = std::exp(a[i]); break;
        case Op::Log:
          for (std::size_t i = 0; i < m; ++i) a[i] = a[i] > 0.0 ? std::log(a[i]) : nan;
          break;
        case Op::Sin: for (std::size_t i = 0; i < m; ++i) a[i] = std::sin(a[i]); break;
        case Op::Cos: for (std::size_t i = 0; i < m; ++i) a[i] = std::cos(a[i]); break;
        case Op::Sqrt:
          for (std::size_t i = 0; i < m; ++i) a[i] = a[i] >= 0.0 ? std::sqrt(a[i]) : nan;
          break;
        case Op::Tanh: for (std::size_t i = 0; i < m; ++i) a[i] = std::tanh(a[i]); break;
        case Op::Cosh: for (std::size_t i = 0; i < m; ++i) a[i] = std::cosh(a[i]); break;
        case Op::Sinh: for (std::size_t i = 0; i < m; ++i) a[i] = std::sinh(a[i]); break;
        case Op::Pow:
          for (std::size_t i = 0; i < m; ++i) {
            const double r = int_pow(a[i], std::abs(in.arg), floor_);
            a[i] = in.arg >= 0 ? r : (std::fabs(r) >= floor_ ? 1.0 / r : nan);
          }
          break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
          double* lhs = a - kChunk;
          const double* rhs = a;
          if (in.op == Op::Add) {
            for (std::size_t i = 0; i < m; ++i) lhs[i] += rhs[i];
          } else if (in.op == Op::Sub) {
            for (std::size_t i = 0; i < m; ++i) lhs[i] -= rhs[i];
          } else if (in.op == Op::Mul) {
            for (std::size_t i = 0; i < m; ++i) lhs[i] *= rhs[i];
          } else {
            for (std::size_t i = 0; i < m; ++i) {
              lhs[i] = std::fabs(rhs[i]) >= floor_ ? lhs[i] / rhs[i] : nan;
            }
          }
          --sp;
          break;
        }
      }
    }
    std::copy_n(stack.data(), m, out + base);
  }
}

FdDiscrepancy fd_crosscheck(const Expr& e, std::span<const double> point, const EvalOptions& opt) {
  const int n = e.dim();
  const Jet j = eval_jet(e, point, 2, opt);
  std::vector<double> x(point.begin(), point.end());
  auto f = [&](const std::vector<double>& p) { return eval(e, p, opt); };
  auto rel = [](double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(a)); };

  // Gradient: five-point stencil, h = 1e-4 * scale. Second derivatives use a
  // wider 1e-2 step so that cancellation stays well below the 1e-9 level.
  std::vector<double> h1(n), h2(n);
  for (int i = 0; i < n; ++i) {
    const double scale = std::max(1.0, std::fabs(x[i]));
    h1[i] = 1e-4 * scale;
    h2[i] = 1e-2 * scale;
  }
  auto shifted = [&](int i, double di, int k, double dk) {
    std::vector<double> p = x;
    p[i] += di;
    if (k >= 0) p[k] += dk;
    return f(p);
  };

  FdDiscrepancy d;
  for (int i = 0; i < n; ++i) {
    const double h = h1[i];
    const double g = (-shifted(i, 2 * h, -1, 0) + 8 * shifted(i, h, -1, 0) -
                      8 * shifted(i, -h, -1, 0) + shifted(i, -2 * h, -1, 0)) / (12 * h);
    d.gradient = std::max(d.gradient, rel(j.partial(i), g));
  }
  const double f0 = f(x);
  static constexpr double o[4] = {2.0, 1.0, -1.0, -2.0};
  for (int i = 0; i < n; ++i) {
    for (int k = i; k < n; ++k) {
      double fd = 0.0;
      if (i == k) {
        const double h = h2[i];
        fd = (-shifted(i, 2 * h, -1, 0) + 16 * shifted(i, h, -1, 0) - 30 * f0 +
              16 * shifted(i, -h, -1, 0) - shifted(i, -2 * h, -1, 0)) / (12 * h * h);
      } else {
        // Fourth-order mixed stencil from the 1D first-derivative weights.
        static constexpr double c[4] = {-1.0, 8.0, -8.0, 1.0};
        const double hi = h2[i], hk = h2[k];
        for (int a = 0; a < 4; ++a) {
          for (int b = 0; b < 4; ++b) {
            fd += c[a] * c[b] * shifted(i, o[a] * hi, k, o[b] * hk);
          }
        }
        fd /= 144.0 * hi * hk;
      }
      d.hessian = std::max(d.hessian, rel(j.second_partial(i, k), fd));
    }
  }
  return d;
}

}  // namespace kgrs
