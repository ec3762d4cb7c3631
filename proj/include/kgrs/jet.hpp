#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace kgrs {

// Truncated multivariate Taylor expansion of a scalar around a point.
//
// Coefficients are stored densely over all multi-indices of total degree
// <= order, in graded order (degree 0, then all degree-1 indices, ...). The
// coefficient of multi-index a is d^a u / a!, so the gradient sits at indices
// 1..dim and mixed second partials are read back through hessian().
//
// Because the enumeration within each degree does not depend on the
// truncation order, a jet of order k is a prefix of the order-4 table and
// mixed-order arithmetic simply truncates to the lower order.
class Jet {
 public:
  static constexpr int kMaxDim = 4;
  static constexpr int kMaxOrder = 4;
  static constexpr int kMaxSize = 70;  // binomial(4 + 4, 4)

  Jet() = default;
  Jet(int dim, int order, double value = 0.0);

  // x_index (0-based) expanded around `value`.
  static Jet variable(int dim, int order, int index, double value);

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  int size() const noexcept;

  double value() const noexcept { return c_[0]; }
  double operator[](int i) const noexcept { return c_[i]; }
  double& operator[](int i) noexcept { return c_[i]; }
  std::span<const double> coefficients() const noexcept {
    return {c_.data(), static_cast<std::size_t>(size())};
  }

  // Taylor coefficient for an explicit multi-index (length dim).
  double coefficient(std::span<const int> multi_index) const;

  // First and second partial derivatives at the expansion point.
  double partial(int i) const noexcept { return c_[1 + i]; }
  double second_partial(int i, int j) const noexcept;

  // Exact partial derivative jet; its order is one lower.
  Jet derivative(int var) const;
  Jet truncated(int order) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator-(Jet a) { return a *= -1.0; }

  // Adds a*b into *this, truncated to this jet's order.
  void fma(const Jet& a, const Jet& b);

 private:
  std::int8_t dim_ = 0;
  std::int8_t order_ = 0;
  std::array<double, kMaxSize> c_{};
};

// Index bookkeeping for dense multi-index tables.
struct MultiIndexTable {
  struct Product {
    std::uint8_t lhs;
    std::uint8_t rhs;
    std::uint8_t out;
  };

  int dim = 0;
  std::vector<std::array<std::uint8_t, Jet::kMaxDim>> indices;
  std::vector<std::uint8_t> degree;
  // raise[i * dim + v]: index of (indices[i] + e_v), or 255 if out of range.
  std::vector<std::uint8_t> raise;
  // Pairs sorted by output degree; product_count[k] pairs cover order k.
  std::vector<Product> products;
  std::array<int, Jet::kMaxOrder + 1> product_count{};
  std::array<int, Jet::kMaxOrder + 1> size_for_order{};

  static const MultiIndexTable& get(int dim);
  int index_of(std::span<const int> multi_index) const;
};

int jet_size(int dim, int order);

// Evaluates u |-> phi(u) given phi and its first four derivatives at u.value().
Jet compose(const Jet& u, const std::array<double, Jet::kMaxOrder + 1>& derivs);

Jet reciprocal(const Jet& u, double floor = 1e-14);
Jet divide(const Jet& a, const Jet& b, double floor = 1e-14);
Jet ipow(const Jet& u, int exponent, double floor = 1e-14);
Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sin(const Jet& u);
Jet cos(const Jet& u);
Jet sqrt(const Jet& u);
Jet tanh(const Jet& u);
Jet cosh(const Jet& u);
Jet sinh(const Jet& u);

}  // namespace kgrs
