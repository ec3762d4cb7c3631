#include "kgrs/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "kgrs/error.hpp"

namespace kgrs {

namespace {

void enumerate_degree(int dim, int pos, int remaining,
                      std::array<std::uint8_t, Jet::kMaxDim>& current,
                      std::vector<std::array<std::uint8_t, Jet::kMaxDim>>& out) {
  if (pos == dim - 1) {
    current[pos] = static_cast<std::uint8_t>(remaining);
    out.push_back(current);
    return;
  }
  for (int a = remaining; a >= 0; --a) {
    current[pos] = static_cast<std::uint8_t>(a);
    enumerate_degree(dim, pos + 1, remaining - a, current, out);
  }
  current[pos] = 0;
}

int encode(const std::array<std::uint8_t, Jet::kMaxDim>& a) {
  int key = 0;
  for (int v = 0; v < Jet::kMaxDim; ++v) key = key * 5 + a[v];
  return key;
}

MultiIndexTable build_table(int dim) {
  MultiIndexTable t;
  t.dim = dim;
  std::array<std::uint8_t, Jet::kMaxDim> cur{};
  for (int d = 0; d <= Jet::kMaxOrder; ++d) {
    enumerate_degree(dim, 0, d, cur, t.indices);
    t.size_for_order[d] = static_cast<int>(t.indices.size());
  }
  std::map<int, int> lookup;
  for (std::size_t i = 0; i < t.indices.size(); ++i) {
    int deg = 0;
    for (int v = 0; v < dim; ++v) deg += t.indices[i][v];
    t.degree.push_back(static_cast<std::uint8_t>(deg));
    lookup[encode(t.indices[i])] = static_cast<int>(i);
  }
  t.raise.assign(t.indices.size() * dim, 255);
  for (std::size_t i = 0; i < t.indices.size(); ++i) {
    if (t.degree[i] == Jet::kMaxOrder) continue;
    for (int v = 0; v < dim; ++v) {
      auto a = t.indices[i];
      ++a[v];
      t.raise[i * dim + v] = static_cast<std::uint8_t>(lookup.at(encode(a)));
    }
  }
  const int n = static_cast<int>(t.indices.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (t.degree[i] + t.degree[j] > Jet::kMaxOrder) continue;
      std::array<std::uint8_t, Jet::kMaxDim> a{};
      for (int v = 0; v < dim; ++v) a[v] = t.indices[i][v] + t.indices[j][v];
      t.products.push_back({static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j),
                            static_cast<std::uint8_t>(lookup.at(encode(a)))});
    }
  }
  std::stable_sort(t.products.begin(), t.products.end(),
                   [&](const auto& x, const auto& y) { return t.degree[x.out] < t.degree[y.out]; });
  for (int k = 0; k <= Jet::kMaxOrder; ++k) {
    t.product_count[k] = static_cast<int>(
        std::count_if(t.products.begin(), t.products.end(),
                      [&](const auto& p) { return t.degree[p.out] <= k; }));
  }
  return t;
}

void check_dims(const Jet& a, const Jet& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "jet dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
  }
}

}  // namespace

const MultiIndexTable& MultiIndexTable::get(int dim) {
  static const std::array<MultiIndexTable, Jet::kMaxDim> tables = [] {
    std::array<MultiIndexTable, Jet::kMaxDim> t;
    for (int d = 1; d <= Jet::kMaxDim; ++d) t[d - 1] = build_table(d);
    return t;
  }();
  if (dim < 1 || dim > Jet::kMaxDim) {
    throw Error(ErrorKind::DimensionMismatch, "unsupported jet dimension " + std::to_string(dim));
  }
  return tables[dim - 1];
}

int MultiIndexTable::index_of(std::span<const int> multi_index) const {
  if (static_cast<int>(multi_index.size()) != dim) {
    throw Error(ErrorKind::DimensionMismatch, "multi-index length does not match jet dimension");
  }
  std::array<std::uint8_t, Jet::kMaxDim> a{};
  int deg = 0;
  for (int v = 0; v < dim; ++v) {
    if (multi_index[v] < 0) return -1;
    a[v] = static_cast<std::uint8_t>(multi_index[v]);
    deg += multi_index[v];
  }
  if (deg > Jet::kMaxOrder) return -1;
  const int begin = deg == 0 ? 0 : size_for_order[deg - 1];
  for (int i = begin; i < size_for_order[deg]; ++i) {
    if (indices[i] == a) return i;
  }
  return -1;
}

int jet_size(int dim, int order) { return MultiIndexTable::get(dim).size_for_order[order]; }

Jet::Jet(int dim, int order, double value)
    : dim_(static_cast<std::int8_t>(dim)), order_(static_cast<std::int8_t>(order)) {
  if (dim < 1 || dim > kMaxDim || order < 0 || order > kMaxOrder) {
    throw Error(ErrorKind::InvalidArgument, "jet dimension must be 1..4 and order 0..4");
  }
  c_[0] = value;
}

Jet Jet::variable(int dim, int order, int index, double value) {
  Jet j(dim, order, value);
  if (index < 0 || index >= dim) {
    throw Error(ErrorKind::InvalidArgument, "variable index out of range");
  }
  if (order >= 1) j.c_[1 + index] = 1.0;
  return j;
}

int Jet::size() const noexcept {
  if (dim_ == 0) return 1;
  return MultiIndexTable::get(dim_).size_for_order[order_];
}

double Jet::coefficient(std::span<const int> multi_index) const {
  const int idx = MultiIndexTable::get(dim_).index_of(multi_index);
  if (idx < 0 || idx >= size()) return 0.0;
  return c_[idx];
}

double Jet::second_partial(int i, int j) const noexcept {
  if (order_ < 2) return 0.0;
  const auto& t = MultiIndexTable::get(dim_);
  const int idx = t.raise[(1 + i) * dim_ + j];
  return i == j ? 2.0 * c_[idx] : c_[idx];
}

Jet Jet::derivative(int var) const {
  if (order_ == 0) {
    throw Error(ErrorKind::InvalidArgument, "cannot differentiate an order-0 jet");
  }
  const auto& t = MultiIndexTable::get(dim_);
  Jet out(dim_, order_ - 1);
  const int n = out.size();
  for (int i = 0; i < n; ++i) {
    const int up = t.raise[i * dim_ + var];
    out.c_[i] = (t.indices[i][var] + 1) * c_[up];
  }
  return out;
}

Jet Jet::truncated(int order) const {
  if (order >= order_) return *this;
  Jet out(dim_, order);
  const int n = out.size();
  std::copy_n(c_.begin(), n, out.c_.begin());
  return out;
}

Jet& Jet::operator+=(const Jet& o) {
  check_dims(*this, o);
  if (o.order_ < order_) *this = truncated(o.order_);
  const int n = size();
  for (int i = 0; i < n; ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_dims(*this, o);
  if (o.order_ < order_) *this = truncated(o.order_);
  const int n = size();
  for (int i = 0; i < n; ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(double s) {
  const int n = size();
  for (int i = 0; i < n; ++i) c_[i] *= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  check_dims(a, b);
  Jet out(a.dim_, std::min(a.order_, b.order_));
  const auto& t = MultiIndexTable::get(a.dim_);
  const int count = t.product_count[out.order_];
  for (int p = 0; p < count; ++p) {
    const auto& e = t.products[p];
    out.c_[e.out] += a.c_[e.lhs] * b.c_[e.rhs];
  }
  return out;
}

void Jet::fma(const Jet& a, const Jet& b) {
  check_dims(a, b);
  check_dims(*this, a);
  const int ord = std::min<int>({order_, a.order_, b.order_});
  if (ord < order_) *this = truncated(ord);
  const auto& t = MultiIndexTable::get(dim_);
  const int count = t.product_count[ord];
  for (int p = 0; p < count; ++p) {
    const auto& e = t.products[p];
    c_[e.out] += a.c_[e.lhs] * b.c_[e.rhs];
  }
}

Jet compose(const Jet& u, const std::array<double, Jet::kMaxOrder + 1>& derivs) {
  Jet out(u.dim(), u.order(), derivs[0]);
  if (u.order() == 0) return out;
  Jet h = u;
  h[0] = 0.0;
  Jet power = h;
  double factorial = 1.0;
  for (int m = 1; m <= u.order(); ++m) {
    factorial *= m;
    const double w = derivs[m] / factorial;
    const int n = power.size();
    for (int i = 0; i < n; ++i) out[i] += w * power[i];
    if (m < u.order()) power = power * h;
  }
  return out;
}

Jet reciprocal(const Jet& u, double floor) {
  const double v = u.value();
  if (!(std::fabs(v) >= floor)) {
    throw Error(ErrorKind::Domain, "division by near-zero value " + std::to_string(v));
  }
  const double r = 1.0 / v;
  return compose(u, {r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r, 24.0 * r * r * r * r * r});
}

Jet divide(const Jet& a, const Jet& b, double floor) { return a * reciprocal(b, floor); }

Jet ipow(const Jet& u, int exponent, double floor) {
  if (exponent < 0) return reciprocal(ipow(u, -exponent, floor), floor);
  Jet result(u.dim(), u.order(), 1.0);
  Jet base = u;
  unsigned e = static_cast<unsigned>(exponent);
  while (e != 0) {
    if (e & 1u) result = result * base;
    e >>= 1u;
    if (e != 0) base = base * base;
  }
  return result;
}

Jet exp(const Jet& u) {
  const double e = std::exp(u.value());
  return compose(u, {e, e, e, e, e});
}

Jet log(const Jet& u) {
  const double v = u.value();
  if (!(v > 0.0)) throw Error(ErrorKind::Domain, "log of nonpositive value " + std::to_string(v));
  const double r = 1.0 / v;
  return compose(u, {std::log(v), r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r});
}

Jet sin(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  return compose(u, {s, c, -s, -c, s});
}

Jet cos(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  return compose(u, {c, -s, -c, s, c});
}

Jet sqrt(const Jet& u) {
  const double v = u.value();
  if (v < 0.0 || (v == 0.0 && u.order() > 0)) {
    throw Error(ErrorKind::Domain, "sqrt outside its differentiable domain at " + std::to_string(v));
  }
  const double s = std::sqrt(v);
  if (u.order() == 0) return Jet(u.dim(), 0, s);
  const double r = 1.0 / v;
  return compose(u, {s, 0.5 * s * r, -0.25 * s * r * r, 0.375 * s * r * r * r,
                     -0.9375 * s * r * r * r * r});
}

Jet tanh(const Jet& u) {
  const double t = std::tanh(u.value());
  const double d = 1.0 - t * t;
  return compose(u, {t, d, -2.0 * t * d, d * (6.0 * t * t - 2.0), d * (16.0 * t - 24.0 * t * t * t)});
}

Jet cosh(const Jet& u) {
  const double c = std::cosh(u.value()), s = std::sinh(u.value());
  return compose(u, {c, s, c, s, c});
}

Jet sinh(const Jet& u) {
  const double c = std::cosh(u.value()), s = std::sinh(u.value());
  return compose(u, {s, c, s, c, s});
}

}  // namespace kgrs
