#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

#include "doctest.h"
#include "kgrs/error.hpp"
#include "kgrs/symplectic.hpp"

using namespace kgrs;

namespace {

MatX random_symmetric(std::mt19937_64& rng, int n, double s = 1.0) {
  std::normal_distribution<double> nd(0.0, s);
  MatX A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = nd(rng);
  return 0.5 * (A + A.transpose());
}

MatX random_sp(std::mt19937_64& rng, double s = 1.0) {
  return linearization(canonical_omega(4), random_symmetric(rng, 4, s));
}

double nonzero(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 3.0);
  return (rng() % 2 ? 1.0 : -1.0) * u(rng);
}

}  // namespace

TEST_CASE("sp(4) membership") {
  const MatX om = canonical_omega(4);
  std::mt19937_64 rng(1);
  MatX A1 = MatX::Random(2, 2), S2 = random_symmetric(rng, 2), S3 = random_symmetric(rng, 2);
  MatX blk(4, 4);
  blk << A1, S2, S3, -A1.transpose();
  CHECK(in_sp(blk, om) == 0.0);
  CHECK(in_sp(MatX::Identity(4, 4), om) == doctest::Approx(2.0));
  for (int t = 0; t < 20; ++t) CHECK(in_sp(random_sp(rng), om) < 1e-12);
  CHECK_THROWS_AS(in_sp(MatX::Identity(3, 3), om), Error);
}

TEST_CASE("symplectic group and characteristic polynomial reciprocity") {
  const MatX om = canonical_omega(4);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const MatX P = random_sp(rng, 0.5).exp();
    const auto gm = is_symplectic_group(P, om);
    CHECK(gm.residual < 1e-8);
    CHECK(gm.det == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(char_poly_reciprocity(P) < 1e-8);
  }
  // diag(2, 1, 1/2, 1) pairs x1 with y1.
  MatX d = MatX::Zero(4, 4);
  d.diagonal() << 2, 1, 0.5, 1;
  CHECK(is_symplectic_group(d, om).residual == 0.0);
  CHECK(is_symplectic_group(d, om).det == doctest::Approx(1.0));
  const MatX two = 2.0 * MatX::Identity(4, 4);
  CHECK(is_symplectic_group(two, om).residual > 1.0);
  CHECK(char_poly_reciprocity(MatX::Identity(4, 4)) < 1e-14);
  MatX bad = MatX::Zero(4, 4);
  bad.diagonal() << 2, 3, 1, 1;
  CHECK(char_poly_reciprocity(bad) >= 1e-2);
}

TEST_CASE("two-dimensional elliptic and hyperbolic examples") {
  const MatX om = canonical_omega(2);
  MatX He(2, 2), Hh(2, 2);
  He << 2, 0, 0, 2;
  Hh << 0, 1, 1, 0;
  const auto pe = eig_pattern(linearization(om, He));
  CHECK(pe.j1 == 1);
  CHECK(pe.j2 == 0);
  for (const auto& l : pe.eigenvalues) {
    CHECK(std::fabs(l.real()) < 1e-15);
    CHECK(std::fabs(std::fabs(l.imag()) - 2.0) < 1e-15);
  }
  const auto ph = eig_pattern(linearization(om, Hh));
  CHECK(ph.j2 == 1);
  CHECK(ph.j1 == 0);
  for (const auto& l : ph.eigenvalues) {
    CHECK(std::fabs(std::fabs(l.real()) - 1.0) < 1e-15);
    CHECK(l.imag() == 0.0);
  }
}

TEST_CASE("Cartan family element eigenvalues") {
  const auto p = eig_pattern(cartan_family_element(CartanFamily::EE, 1, 2));
  CHECK(p.triple() == "2,0,0");
  std::vector<double> im;
  for (const auto& l : p.eigenvalues) {
    CHECK(std::fabs(l.real()) < 1e-14);
    im.push_back(l.imag());
  }
  std::sort(im.begin(), im.end());
  CHECK(im[0] == doctest::Approx(-2));
  CHECK(im[1] == doctest::Approx(-1));
  CHECK(im[2] == doctest::Approx(1));
  CHECK(im[3] == doctest::Approx(2));
  CHECK(eig_pattern(cartan_family_element(CartanFamily::EH, 1, 2)).triple() == "1,1,0");
  CHECK(eig_pattern(cartan_family_element(CartanFamily::HH, 1, 2)).triple() == "0,2,0");
  const auto f = eig_pattern(cartan_family_element(CartanFamily::FF, 1, 2));
  CHECK(f.triple() == "0,0,1");
  for (const auto& l : f.eigenvalues) {
    CHECK(std::fabs(std::fabs(l.real()) - 1.0) < 1e-12);
    CHECK(std::fabs(std::fabs(l.imag()) - 2.0) < 1e-12);
  }
}

TEST_CASE("Cartan verdicts over the four families") {
  const MatX om = canonical_omega(4);
  std::mt19937_64 rng(7);
  const std::pair<CartanFamily, SingularityType> fams[] = {
      {CartanFamily::EE, SingularityType::EE},
      {CartanFamily::EH, SingularityType::EH},
      {CartanFamily::HH, SingularityType::HH},
      {CartanFamily::FF, SingularityType::FF}};
  for (const auto& [fam, expect] : fams) {
    for (int t = 0; t < 20; ++t) {
      double A = nonzero(rng), B = nonzero(rng);
      while (std::fabs(std::fabs(A) - std::fabs(B)) < 0.1) B = nonzero(rng);
      const double C = nonzero(rng), D = nonzero(rng);
      const MatX H1 = om * cartan_family_element(fam, A, B);
      const MatX H2 = om * cartan_family_element(fam, C, D);
      CHECK((H1 - H1.transpose()).cwiseAbs().maxCoeff() == 0.0);
      const auto v = cartan_verdict(H1, H2, om);
      CHECK(v.type == expect);
      CHECK(v.span == 2);
      CHECK(v.pattern.j1 + v.pattern.j2 + 2 * v.pattern.j3 == 2);
    }
  }
}

TEST_CASE("Cartan verdict on normal-form Hessians") {
  const MatX om = canonical_omega(4);
  // q1 = (x1^2 + y1^2)/2, q2 = (x2^2 + y2^2)/2 in (x1, x2, y1, y2).
  MatX q1 = MatX::Zero(4, 4), q2 = MatX::Zero(4, 4);
  q1(0, 0) = q1(2, 2) = 1;
  q2(1, 1) = q2(3, 3) = 1;
  CHECK(cartan_verdict(q1, q2, om).type == SingularityType::EE);

  // Focus-focus: q1 = x1 y2 - x2 y1, q2 = x1 y1 + x2 y2.
  MatX f1 = MatX::Zero(4, 4), f2 = MatX::Zero(4, 4);
  f1(0, 3) = f1(3, 0) = 1;
  f1(1, 2) = f1(2, 1) = -1;
  f2(0, 2) = f2(2, 0) = 1;
  f2(1, 3) = f2(3, 1) = 1;
  const auto v = cartan_verdict(f1, f2, om);
  CHECK(v.type == SingularityType::FF);
  CHECK(v.pattern.triple() == "0,0,1");
  // a q2 + b q1 has eigenvalues +-a +- i b.
  const auto p = eig_pattern(linearization(om, 0.7 * f2 + 0.3 * f1));
  for (const auto& l : p.eigenvalues) {
    CHECK(std::fabs(std::fabs(l.real()) - 0.7) < 1e-12);
    CHECK(std::fabs(std::fabs(l.imag()) - 0.3) < 1e-12);
  }

  const auto d = cartan_verdict(2.0 * MatX::Identity(4, 4), 4.0 * MatX::Identity(4, 4), om);
  CHECK(d.type == SingularityType::Degenerate);
  CHECK(d.span == 1);
  CHECK(d.reason == "span-deficient");

  MatX h = MatX::Zero(4, 4);
  h(0, 1) = h(1, 0) = 1;
  CHECK_THROWS_AS(cartan_verdict(q1, h, om), Error);
}

TEST_CASE("eigen pattern is invariant under symplectic conjugation") {
  const MatX om = canonical_omega(4);
  std::mt19937_64 rng(9);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const MatX L = random_sp(rng);
    const MatX P = random_sp(rng, 0.3).exp();
    const auto a = eig_pattern(L), b = eig_pattern(P.inverse() * L * P);
    if (!a.distinct || a.min_gap < 1e-3) continue;
    CHECK(a.triple() == b.triple());
    CHECK(a.z == b.z);
    ++checked;
  }
  CHECK(checked > 80);
  (void)om;
}

TEST_CASE("reduced rank-one pattern") {
  const MatX om = canonical_omega(4);
  MatX W = MatX::Zero(4, 2);
  W(0, 0) = 1;  // x1
  W(2, 1) = 1;  // y1
  MatX hyp = MatX::Zero(4, 4);
  hyp(1, 3) = hyp(3, 1) = 1;  // d^2(x2 y2)
  CHECK(reduced_rank1_pattern(hyp, om, W).type == Rank1Type::Hyperbolic);
  MatX ell = MatX::Zero(4, 4);
  ell(1, 1) = ell(3, 3) = 1;  // d^2 (x2^2 + y2^2)/2
  CHECK(reduced_rank1_pattern(ell, om, W).type == Rank1Type::Elliptic);
  CHECK(reduced_rank1_pattern(MatX::Zero(4, 4), om, W).type == Rank1Type::Degenerate);
  MatX Wbad = MatX::Zero(4, 2);
  Wbad(0, 0) = 1;
  Wbad(1, 1) = 1;  // the (x1, x2) plane is Lagrangian
  CHECK_THROWS_AS(reduced_rank1_pattern(ell, om, Wbad), Error);
}
