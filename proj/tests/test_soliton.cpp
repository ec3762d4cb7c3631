#include <cmath>

#include "doctest.h"
#include "kgrs/error.hpp"
#include "kgrs/gallery.hpp"
#include "kgrs/soliton.hpp"
#include "test_util.hpp"

using namespace kgrs;

TEST_CASE("Kahler verification") {
  const auto flat = gaussian_shrinker(1.0);
  const auto fr = kahler_verify(flat.system, halton_samples(flat.system.domain, 10, 0));
  CHECK(fr.passed);
  CHECK(fr.nabla_J == 0.0);
  CHECK(fr.d_omega == 0.0);

  const auto cig = cigar_product(1, 4);
  const auto samples = halton_samples(cig.system.domain, 100, 0);
  const auto cr = kahler_verify(cig.system, samples);
  CHECK(cr.passed);
  CHECK(cr.nabla_J < 1e-9);
  CHECK(cr.d_omega < 1e-9);
  CHECK(cr.hermitian < 1e-9);

  SolitonSystem bad = cig.system;
  bad.J[0 * 4 + 1] = parse("-1.01", 4);
  const auto br = kahler_verify(bad, samples);
  CHECK_FALSE(br.passed);
  CHECK(br.hermitian > 1e-3);
}

TEST_CASE("soliton residual") {
  const auto gauss = gaussian_shrinker(1.0);
  CHECK(soliton_residual(gauss.system, halton_samples(gauss.system.domain, 50, 0)).sup == 0.0);
  for (auto [a, b] : {std::pair{1.0, 4.0}, {2.0, 3.0}, {1.0, 1.0}}) {
    const auto cig = cigar_product(a, b);
    const auto r = soliton_residual(cig.system, halton_samples(cig.system.domain, 200, 0));
    CHECK(r.passed);
    CHECK(r.sup < 1e-8);
  }
  auto wrong = cigar_product(1, 4);
  wrong.system.lambda = 0.1;
  const auto samples = halton_samples(wrong.system.domain, 50, 0);
  const auto wr = soliton_residual(wrong.system, samples);
  CHECK_FALSE(wr.passed);
  // |Rc + Hess f - 0.1 g| = 0.1 |g| pointwise.
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto geo = compute_geometry(wrong.system, samples[i], Depth::First);
    CHECK(wr.per_point[i] == doctest::Approx(0.1 * geo.g.cwiseAbs().maxCoeff()).epsilon(1e-6));
  }
}

TEST_CASE("identity suite") {
  const auto gauss = gaussian_shrinker(1.0);
  const auto gr = identity_suite(gauss.system, halton_samples(gauss.system.domain, 50, 0));
  CHECK(gr.passed);
  CHECK(gr.trace_identity == 0.0);
  CHECK(gr.hamilton_std < 1e-12);
  CHECK(gr.hamilton_mean == doctest::Approx(0.0));

  const auto cig = cigar_product(1, 4);
  const auto cr = identity_suite(cig.system, halton_samples(cig.system.domain, 200, 0));
  CHECK(cr.passed);
  CHECK(cr.trace_identity < 1e-7);
  CHECK(cr.ricci_gradient < 1e-7);
  CHECK(cr.scalar_laplacian < 1e-7);
  CHECK(cr.hamilton_variance < 1e-12);
  // S + |grad f|^2 = 4/a + 4/b on the cigar product.
  CHECK(cr.hamilton_mean == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(cr.hess_f_cross < 1e-8);
  CHECK(cr.min_S >= -1e-9);
  CHECK(cr.hess_J_commutator < 1e-8);

  auto off = cig;
  off.system.lambda = 0.1;
  const auto orpt = identity_suite(off.system, halton_samples(off.system.domain, 20, 0));
  CHECK(orpt.gated);
  CHECK_FALSE(orpt.passed);
}

TEST_CASE("Poisson bracket of f and S") {
  for (const auto& spec : {cigar_product(1, 4), cigar_product(2, 3), cigar_product(1, 1), gaussian_shrinker(1.0)}) {
    const auto r = poisson_bracket_fS(spec.system, halton_samples(spec.system.domain, 200, 0));
    CHECK(r.sup < 1e-9);
  }
  const auto gauss = gaussian_shrinker(1.0);
  CHECK(poisson_bracket_fS(gauss.system, halton_samples(gauss.system.domain, 20, 0)).sup == 0.0);

  // Flat chart, f = x1 x3 with synthetic second function x1.
  SolitonSystem s = normal_form_system(NormalForm::EllipticElliptic).system;
  s.f = parse("x1*x3", 4);
  s.F2 = parse("x1", 4);
  CHECK(poisson_bracket_fS(s, halton_samples(s.domain, 20, 0)).sup > 1e-3);
}

TEST_CASE("Killing field identities") {
  const auto cig = cigar_product(1, 4);
  const auto r = killing_suite(cig.system, halton_samples(cig.system.domain, 50, 0));
  CHECK(r.passed);
  CHECK(r.lie_derivative < 1e-7);
  CHECK(r.nabla_J_grad_f < 1e-7);
  CHECK(r.nabla_hess_f < 1e-7);
  CHECK(r.ricci_J_defect < 1e-8);
  CHECK(r.hess_J_defect < 1e-8);

  const auto gauss = gaussian_shrinker(1.0);
  const auto g = killing_suite(gauss.system, halton_samples(gauss.system.domain, 20, 0));
  CHECK(g.lie_derivative < 1e-12);
  CHECK(g.nabla_J_grad_f < 1e-12);
  CHECK(g.nabla_hess_f < 1e-12);

  auto pert = gauss;
  pert.system.f = parse("(x1^2 + x2^2 + x3^2 + x4^2)/2 + 0.01*x1^3", 4);
  const auto p = killing_suite(pert.system, halton_samples(pert.system.domain, 20, 0));
  CHECK(p.lie_derivative > 1e-4);
  CHECK_FALSE(p.passed);
}

TEST_CASE("Hessian of S formula") {
  const auto cig = cigar_product(1, 4);
  const auto r = hess_S_formula_check(cig.system, halton_samples(cig.system.domain, 100, 0));
  CHECK(r.sup < 1e-6);
  const auto o = compute_geometry(cig.system, std::vector<double>{0, 0, 0, 0}, Depth::Full);
  const Mat endo = o.ginv * o.hess_S;
  const double expect[4] = {-8, -8, -0.5, -0.5};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::fabs(endo(i, j) - (i == j ? expect[i] : 0.0)) < 1e-8);
  const Mat rhs = hess_S_formula(o, 0.0);
  CHECK((o.hess_S - rhs).cwiseAbs().maxCoeff() < 1e-8);
  const auto pt = hess_S_formula_check(cig.system, {{0.5, 0, 0.3, 0}});
  CHECK(pt.sup < 1e-6);

  const auto gauss = gaussian_shrinker(1.0);
  const auto go = compute_geometry(gauss.system, std::vector<double>{0.2, 0.1, 0, 1}, Depth::Full);
  CHECK(go.hess_S.cwiseAbs().maxCoeff() == 0.0);
  CHECK(hess_S_formula(go, 1.0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("radial Hessian identity") {
  const auto cig = cigar_product(1, 4);
  const std::vector<double> p{1, 0, 0, 0};
  const auto geo = compute_geometry(cig.system, p, Depth::First);
  Vec E = Vec::Zero(4);
  E[2] = 1.0 / std::sqrt(geo.g(2, 2));
  const auto r = radial_hessian_identity(cig.system, p, E);
  CHECK(r.residual < 1e-6);
  CHECK(r.J_invariance < 1e-8);

  const Vec bad = geo.grad_f / std::sqrt(geo.grad_f.dot(geo.df));
  CHECK_THROWS_AS(radial_hessian_identity(cig.system, p, bad), Error);

  const auto gauss = gaussian_shrinker(1.0);
  Vec e3 = Vec::Zero(4);
  e3[2] = 1.0;
  const auto gr = radial_hessian_identity(gauss.system, std::vector<double>{1, 0, 0, 0}, e3);
  CHECK(gr.lhs == 0.0);
  CHECK(gr.rhs == 0.0);
}
