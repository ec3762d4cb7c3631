#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "kgrs/error.hpp"
#include "kgrs/expr.hpp"

using namespace kgrs;

namespace {

ErrorKind kind_of(const std::string& text, int dim, std::size_t* offset = nullptr) {
  try {
    parse(text, dim);
  } catch (const SyntaxError& e) {
    if (offset) *offset = e.offset();
    return e.kind();
  }
  FAIL("expected a parse error for " << text);
  return ErrorKind::Syntax;
}

std::array<int, 4> multi(int a, int b = 0, int c = 0, int d = 0) { return {a, b, c, d}; }

Expr random_tree(std::mt19937_64& rng, int depth, int dim) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 7);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  switch (pick(rng)) {
    case 0: return Expr::constant(val(rng), dim);
    case 1: return Expr::variable(static_cast<int>(rng() % dim), dim);
    case 2: return -random_tree(rng, depth - 1, dim);
    case 3: return random_tree(rng, depth - 1, dim).apply(static_cast<UnaryOp>(1 + rng() % 8));
    case 4: return random_tree(rng, depth - 1, dim) + random_tree(rng, depth - 1, dim);
    case 5: return random_tree(rng, depth - 1, dim) * random_tree(rng, depth - 1, dim);
    case 6: return random_tree(rng, depth - 1, dim) / random_tree(rng, depth - 1, dim);
    default: return random_tree(rng, depth - 1, dim).pow(static_cast<int>(rng() % 7) - 3);
  }
}

}  // namespace

TEST_CASE("parser accepts the chart functions") {
  CHECK_NOTHROW(parse("4/(1+x1^2+x2^2)", 2));
  CHECK_NOTHROW(parse("-log(1+x1^2+x2^2)", 2));
  CHECK_NOTHROW(parse("sqrt(x1) * tanh(x2) - cosh(x3)/sinh(x4) + sin(x1)^-2 * cos(x2)", 4));
  CHECK(parse("-3", 2).is_constant());
  CHECK(eval(parse("-3", 2), std::vector<double>{0, 0}) == -3.0);
  CHECK(eval(parse("-x1^2", 2), std::vector<double>{3, 0}) == -9.0);
  CHECK(eval(parse("2^3", 1), std::vector<double>{0}) == 8.0);
  CHECK(eval(parse("1.5e1 - .5", 1), std::vector<double>{0}) == 14.5);
}

TEST_CASE("parser errors carry kind and byte offset") {
  std::size_t off = 0;
  CHECK(kind_of("x1 + ", 4, &off) == ErrorKind::Syntax);
  CHECK(off == 5);
  CHECK(kind_of("x5 + 1", 4, &off) == ErrorKind::UnknownIdentifier);
  CHECK(off == 0);
  CHECK(kind_of("x3", 2) == ErrorKind::UnknownIdentifier);
  CHECK(kind_of("foo(x1)", 2) == ErrorKind::UnknownIdentifier);
  CHECK(kind_of("exp x1", 2) == ErrorKind::Arity);
  CHECK(kind_of("exp(x1, x2)", 2) == ErrorKind::Arity);
  CHECK(kind_of("log()", 2) == ErrorKind::Arity);
  CHECK(kind_of("x1^1.5", 2) == ErrorKind::Syntax);
  CHECK(kind_of("(x1", 2, &off) == ErrorKind::Syntax);
  CHECK(off == 3);
  CHECK(kind_of("x1 $ x2", 2, &off) == ErrorKind::Syntax);
  CHECK(off == 3);
}

TEST_CASE("eval_jet polynomial and series coefficients") {
  const Expr sq = parse("x1^2", 4);
  const std::vector<double> p{3, 0, 0, 0};
  const Jet j = eval_jet(sq, p, 2);
  CHECK(j.size() == 15);
  CHECK(j.value() == doctest::Approx(9));
  CHECK(j.partial(0) == doctest::Approx(6));
  for (int i = 1; i < 4; ++i) CHECK(j.partial(i) == 0.0);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) CHECK(j.second_partial(a, b) == doctest::Approx(a == 0 && b == 0 ? 2.0 : 0.0));

  const Jet e = eval_jet(parse("exp(x1)", 4), std::vector<double>{0, 0, 0, 0}, 4);
  CHECK(e.size() == 70);
  const double expect[5] = {1, 1, 0.5, 1.0 / 6, 1.0 / 24};
  for (int k = 0; k <= 4; ++k) {
    const auto m = multi(k);
    CHECK(e.coefficient(m) == doctest::Approx(expect[k]).epsilon(1e-15));
  }

  // f = -log(1 + r^2): df/dx = -2x/(1+r^2) = -1 at (1, 0).
  const Jet f = eval_jet(parse("-log(1+x1^2+x2^2)", 2), std::vector<double>{1, 0}, 2);
  CHECK(f.partial(0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::fabs(f.partial(1)) < 1e-15);
}

TEST_CASE("jet sizes follow binomial(n + k, k)") {
  for (int n : {1, 2, 3, 4})
    for (int k = 0; k <= 4; ++k) {
      double b = 1.0;
      for (int i = 1; i <= k; ++i) b = b * (n + i) / i;
      CHECK(jet_size(n, k) == static_cast<int>(b));
    }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(eval(parse("log(x1)", 1), std::vector<double>{-1}), Error);
  CHECK_THROWS_AS(eval_jet(parse("1/x1", 1), std::vector<double>{0}, 2), Error);
  CHECK_THROWS_AS(eval(parse("1/(x1-x1)", 1), std::vector<double>{0.3}), Error);
  try {
    eval(parse("1/x1", 1), std::vector<double>{1e-15});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

TEST_CASE("plain evaluation matches the jet constant term") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  int compared = 0;
  for (int t = 0; t < 300; ++t) {
    const Expr e = random_tree(rng, 4, 4);
    const std::vector<double> p{u(rng), u(rng), u(rng), u(rng)};
    double v = 0;
    try {
      v = eval(e, p);
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(v) || std::fabs(v) > 1e8) continue;
    Jet j;
    try {
      j = eval_jet(e, p, 3);
    } catch (const Error&) {
      continue;  // e.g. sqrt at 0 is evaluable but not differentiable
    }
    CHECK(j.value() == doctest::Approx(v).epsilon(1e-12));
    const CompiledExpr c(e);
    const double cv = c(p);
    CHECK(cv == doctest::Approx(v).epsilon(1e-12));
    ++compared;
  }
  CHECK(compared > 100);
}

TEST_CASE("jet arithmetic is a ring homomorphism on samples") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.3, 1.2);
  const Expr a = parse("exp(x1)*x2 + sin(x3)", 4);
  const Expr b = parse("1/(1+x1^2+x4^2)", 4);
  const Expr c = parse("log(2+x2) - x3*x4", 4);
  for (int t = 0; t < 20; ++t) {
    const std::vector<double> p{u(rng), u(rng), u(rng), u(rng)};
    const Jet ja = eval_jet(a, p, 4), jb = eval_jet(b, p, 4), jc = eval_jet(c, p, 4);
    const Jet plus = eval_jet(a + b * c, p, 4), minus = eval_jet(a - b * c, p, 4);
    const Jet cp = ja + jb * jc, cm = ja - jb * jc;
    for (int i = 0; i < 70; ++i) {
      CHECK(std::fabs(plus[i] - cp[i]) < 1e-12 * std::max(1.0, std::fabs(cp[i])));
      CHECK(std::fabs(minus[i] - cm[i]) < 1e-12 * std::max(1.0, std::fabs(cm[i])));
    }
  }
}

TEST_CASE("jets of random polynomials match symbolic Taylor coefficients") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), pt(-1.0, 1.0);
  const auto& table = MultiIndexTable::get(4);
  auto binom = [](int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
  };
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    // Random sparse polynomial with monomials of degree <= 4.
    std::map<int, double> poly;
    const int terms = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < terms; ++k) poly[static_cast<int>(rng() % 70)] += coef(rng);
    Expr e = Expr::constant(0.0, 4);
    for (const auto& [idx, c] : poly) {
      Expr m = Expr::constant(c, 4);
      for (int v = 0; v < 4; ++v) {
        const int a = table.indices[idx][v];
        if (a > 0) m = m * Expr::variable(v, 4).pow(a);
      }
      e = e + m;
    }
    // Reparse the serialized form so that the parser is exercised too.
    const Expr parsed = parse(e.to_string(), 4);
    const std::vector<double> p{pt(rng), pt(rng), pt(rng), pt(rng)};
    const Jet j = eval_jet(parsed, p, 4);
    for (int beta = 0; beta < 70; ++beta) {
      double expect = 0.0;
      for (const auto& [idx, c] : poly) {
        double term = c;
        for (int v = 0; v < 4; ++v) {
          const int a = table.indices[idx][v], b = table.indices[beta][v];
          if (b > a) {
            term = 0.0;
            break;
          }
          term *= binom(a, b) * std::pow(p[v], a - b);
        }
        expect += term;
      }
      worst = std::max(worst, std::fabs(j[beta] - expect) / std::max(1.0, std::fabs(expect)));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("parse of serialize is the identity") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 500; ++t) {
    const Expr e = random_tree(rng, 5, 4);
    const std::string s = e.to_string();
    const Expr back = parse(s, 4);
    CHECK_MESSAGE(structurally_equal(e.root(), back.root()), s);
    CHECK(back.to_string() == s);
  }
  const Expr neg = parse("-(3)", 2);
  CHECK(!neg.is_constant());
  CHECK(parse(neg.to_string(), 2).to_string() == neg.to_string());
}

TEST_CASE("finite-difference cross-check") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Expr e = Expr::constant(c(rng), 4);
    for (int k = 0; k < 6; ++k) {
      Expr m = Expr::constant(c(rng), 4);
      const int deg = static_cast<int>(rng() % 4);
      for (int d = 0; d < deg; ++d) m = m * Expr::variable(static_cast<int>(rng() % 4), 4);
      e = e + m;
    }
    const std::vector<double> p{c(rng), c(rng), c(rng), c(rng)};
    CHECK(fd_crosscheck(e, p).max() < 1e-9);
  }
  const Expr conformal = parse("1/(1+x1^2+x2^2)", 2);
  CHECK(fd_crosscheck(conformal, std::vector<double>{0.5, 0.5}).max() < 1e-5);
  const Expr k = parse("2.5", 2);
  CHECK(fd_crosscheck(k, std::vector<double>{0.5, 0.5}).max() == 0.0);
}

TEST_CASE("batch evaluation marks invalid points as NaN") {
  const CompiledExpr c(parse("log(x1) + 1/x2", 2));
  const std::vector<double> x1{1.0, -1.0, 2.0}, x2{1.0, 1.0, 0.0};
  const double* cols[2] = {x1.data(), x2.data()};
  double out[3];
  c.eval_batch(std::span<const double* const>(cols, 2), 3, out);
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(std::isnan(out[1]));
  CHECK(std::isnan(out[2]));
}
