#include <cmath>

#include "doctest.h"
#include "kgrs/error.hpp"
#include "kgrs/gallery.hpp"
#include "kgrs/geometry.hpp"
#include "test_util.hpp"

using namespace kgrs;

namespace {

double max_abs_gamma(const PointGeometry& geo) {
  double m = 0.0;
  for (double v : geo.gamma.v) m = std::max(m, std::fabs(v));
  return m;
}

std::vector<GallerySpec> soliton_gallery() {
  return {gaussian_shrinker(1.0), cigar_product(1, 4), cigar_product(2, 3), cigar_product(1, 1)};
}

}  // namespace

TEST_CASE("Christoffel symbols") {
  const auto flat = gaussian_shrinker(1.0);
  CHECK(max_abs_gamma(compute_geometry(flat.system, std::vector<double>{0.3, -1, 2, 0.5}, Depth::First)) == 0.0);

  CHECK(max_abs_gamma(compute_geometry(single_cigar(), std::vector<double>{0, 0}, Depth::First)) < 1e-15);

  SolitonSystem warped = make_system(4, "1", "0");
  warped.g[0] = parse("exp(2*x1)", 4);
  const PointGeometry geo = compute_geometry(warped, std::vector<double>{0, 0, 0, 0}, Depth::First);
  CHECK(geo.gamma(0, 0, 0) == doctest::Approx(1.0));
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (k + i + j != 0) CHECK(geo.gamma(k, i, j) == 0.0);

  // Closed form for g = e^{2 x1} dx1^2: Gamma^1_11 = 1 everywhere.
  const PointGeometry geo2 = compute_geometry(warped, std::vector<double>{0.7, 0, 0, 0}, Depth::First);
  CHECK(geo2.gamma(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("metric compatibility and torsion") {
  for (const auto& spec : soliton_gallery()) {
    for (const auto& p : halton_samples(spec.system.domain, 20, 1)) {
      CHECK(metric_compatibility_residual(spec.system, p) < 1e-10);
    }
  }
}

TEST_CASE("single cigar curvature at the origin") {
  const PointGeometry geo = compute_geometry(single_cigar(), std::vector<double>{0, 0}, Depth::Full);
  // Gauss curvature 2 at the origin: R(e1,e2,e2,e1) = 2, hence R_1212 = -2.
  CHECK(geo.R(0, 1, 1, 0) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(geo.R(0, 1, 0, 1) == doctest::Approx(-2.0).epsilon(1e-13));
  CHECK(geo.scal == doctest::Approx(4.0).epsilon(1e-13));
  Vec e1 = Vec::Zero(2), e2 = Vec::Zero(2);
  e1[0] = 1;
  e2[1] = 1;
  CHECK(sectional(e1, e2, geo) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(sectional(2.0 * e1, e2, geo) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(sectional(e1 + e2, e2 - 3.0 * e1, geo) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(sectional(e1, 3.0 * e1, geo), Error);
  // Hess f = -2 delta = -Rc at the origin.
  CHECK((geo.hess_f + 2.0 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((geo.hess_f + geo.ric).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("two-dimensional Ricci is (S/2) g") {
  for (const auto& p : halton_samples(Box::cube(2, -3, 3), 50, 4)) {
    const PointGeometry geo = compute_geometry(single_cigar(), p, Depth::Curvature);
    CHECK((geo.ric - 0.5 * geo.scal * geo.g).cwiseAbs().maxCoeff() < 1e-9);
    const double r2 = p[0] * p[0] + p[1] * p[1];
    CHECK(geo.scal == doctest::Approx(4.0 / (1.0 + r2)).epsilon(1e-12));
  }
}

TEST_CASE("product cigar curvature") {
  const auto spec = cigar_product(1, 4);
  const PointGeometry geo = compute_geometry(spec.system, std::vector<double>{0, 0, 0, 0}, Depth::Full);
  CHECK(geo.scal == doctest::Approx(5.0).epsilon(1e-13));
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) {
      CHECK(geo.R(0, 2, k, l) == 0.0);
      CHECK(geo.R(1, 3, k, l) == 0.0);
    }
  const auto flat = gaussian_shrinker(1.0);
  const PointGeometry fg = compute_geometry(flat.system, std::vector<double>{1, 2, 0, 1}, Depth::Full);
  CHECK(fg.scal == 0.0);
  CHECK(fg.R.norm() == 0.0);
  Vec e1 = Vec::Zero(4), e3 = Vec::Zero(4);
  e1[0] = 1;
  e3[2] = 1;
  CHECK(sectional(e1, e3, fg) == 0.0);
}

TEST_CASE("Hessian of f") {
  const SolitonSystem flat = make_system(4, "1", "(x1^2 + x2^2 + x3^2 + x4^2)/2");
  const PointGeometry g1 = compute_geometry(flat, std::vector<double>{0.4, 1, -2, 0}, Depth::First);
  CHECK((g1.hess_f - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(g1.lap_f == doctest::Approx(4.0));
  const SolitonSystem lin = make_system(4, "1", "x1");
  const PointGeometry g2 = compute_geometry(lin, std::vector<double>{0.4, 1, -2, 0}, Depth::First);
  CHECK(g2.hess_f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Riemann symmetries and contracted Bianchi on the gallery") {
  for (const auto& spec : soliton_gallery()) {
    for (const auto& p : halton_samples(spec.system.domain, 100, 2)) {
      const PointGeometry geo = compute_geometry(spec.system, p, Depth::Full);
      CHECK(riemann_symmetries(geo).max() < 1e-9);
      CHECK((geo.div_ric - 0.5 * geo.dS).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  const auto spec = cigar_product(1, 4);
  const PointGeometry geo = compute_geometry(spec.system, std::vector<double>{0.3, 0.1, 0.2, 0.4}, Depth::Full);
  CHECK((geo.div_ric - 0.5 * geo.dS).norm() < 1e-8);
}

TEST_CASE("gallery closed-form S matches the curvature pipeline") {
  for (const auto& spec : soliton_gallery()) CHECK(gallery_self_test(spec, 100) < 1e-8);
}
