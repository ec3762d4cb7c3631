#include "kgrs/gallery.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "kgrs/error.hpp"
#include "kgrs/geometry.hpp"

namespace kgrs {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void set_zero(SolitonSystem& s) {
  for (auto& e : s.g) e = Expr::constant(0.0, s.dim);
  for (auto& e : s.J) e = Expr::constant(0.0, s.dim);
}

void set_block_standard_J(SolitonSystem& s) {
  // J d1 = d2, J d3 = d4 (complex coordinates x1 + i x2, x3 + i x4).
  s.J[1 * 4 + 0] = Expr::constant(1.0, 4);
  s.J[0 * 4 + 1] = Expr::constant(-1.0, 4);
  s.J[3 * 4 + 2] = Expr::constant(1.0, 4);
  s.J[2 * 4 + 3] = Expr::constant(-1.0, 4);
}

std::string pretty(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e6) return std::to_string(static_cast<long long>(v));
  std::string s = num(v);
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

}  // namespace

GallerySpec gaussian_shrinker(double lambda, double half_width) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "gaussian_shrinker needs lambda > 0");
  GallerySpec g;
  g.name = lambda == 1.0 ? "gaussian_shrinker" : "gaussian_shrinker_" + pretty(lambda);
  SolitonSystem& s = g.system;
  s.name = g.name;
  s.dim = 4;
  s.domain = Box::cube(4, -half_width, half_width);
  set_zero(s);
  for (int i = 0; i < 4; ++i) s.g[i * 5] = Expr::constant(1.0, 4);
  set_block_standard_J(s);
  s.f = parse(num(lambda) + "*(x1^2 + x2^2 + x3^2 + x4^2)/2", 4);
  s.lambda = lambda;
  s.aux_S = Expr::constant(0.0, 4);
  g.rank0 = {{0, 0, 0, 0}};
  g.mu = {{lambda, lambda}};
  g.expected = {{"rank0[0].verdict", "DEGENERATE(hess-multiple-of-identity)"},
                {"dependent", "true"}};
  return g;
}

GallerySpec cigar_product(double a, double b, double half_width) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::InvalidArgument, "cigar_product needs a, b > 0");
  GallerySpec g;
  g.name = "cigar_product_" + pretty(a) + "_" + pretty(b);
  SolitonSystem& s = g.system;
  s.name = g.name;
  s.dim = 4;
  s.domain = Box::cube(4, -half_width, half_width);
  set_zero(s);
  const Expr g1 = parse(num(a) + "/(1 + x1^2 + x2^2)", 4);
  const Expr g2 = parse(num(b) + "/(1 + x3^2 + x4^2)", 4);
  s.g[0] = s.g[5] = g1;
  s.g[10] = s.g[15] = g2;
  set_block_standard_J(s);
  s.f = parse("-log(1 + x1^2 + x2^2) - log(1 + x3^2 + x4^2)", 4);
  s.lambda = 0.0;
  s.aux_S = parse("4/(" + num(a) + "*(1 + x1^2 + x2^2)) + 4/(" + num(b) + "*(1 + x3^2 + x4^2))", 4);
  g.rank0 = {{0, 0, 0, 0}};
  g.mu = {{-2.0 / a, -2.0 / b}};
  g.branch_conditions = {parse("x1^2 + x2^2", 4), parse("x3^2 + x4^2", 4),
                         parse(num(a) + "*(1 + x1^2 + x2^2) - " + num(b) + "*(1 + x3^2 + x4^2)", 4)};
  if (a == b) {
    g.expected = {{"rank0[0].verdict", "DEGENERATE(hess-multiple-of-identity)"}};
  } else {
    g.expected = {{"rank0[0].verdict", "EE"},
                  {"branch.axis.verdict", "elliptic"},
                  {"branch.diagonal.verdict", "DEGENERATE(excess-dimension)"}};
  }
  return g;
}

GallerySpec normal_form_system(NormalForm kind) {
  GallerySpec g;
  SolitonSystem& s = g.system;
  s.kind = SystemKind::Hamiltonian;
  s.dim = 4;
  s.domain = Box::cube(4, -2.0, 2.0);
  set_zero(s);
  for (int i = 0; i < 4; ++i) s.g[i * 5] = Expr::constant(1.0, 4);
  // Coordinates (x1, x2, y1, y2) = (x1, x2, x3, x4) with the canonical
  // Omega = [[0, I], [-I, 0]]; for the flat metric J equals Omega.
  s.J[0 * 4 + 2] = Expr::constant(1.0, 4);
  s.J[1 * 4 + 3] = Expr::constant(1.0, 4);
  s.J[2 * 4 + 0] = Expr::constant(-1.0, 4);
  s.J[3 * 4 + 1] = Expr::constant(-1.0, 4);
  switch (kind) {
    case NormalForm::EllipticElliptic:
      g.name = "normal_form_ee";
      s.f = parse("(x1^2 + x3^2)/2", 4);
      s.F2 = parse("(x2^2 + x4^2)/2", 4);
      g.rank0 = {{0, 0, 0, 0}};
      g.expected = {{"rank0[0].verdict", "EE"}, {"rank0[0].triple", "2,0,0"}};
      break;
    case NormalForm::FocusFocus:
      g.name = "normal_form_ff";
      s.f = parse("x1*x4 - x2*x3", 4);
      s.F2 = parse("x1*x3 + x2*x4", 4);
      g.rank0 = {{0, 0, 0, 0}};
      g.expected = {{"rank0[0].verdict", "FF"}, {"rank0[0].triple", "0,0,1"}};
      break;
    case NormalForm::Rank1Elliptic:
      g.name = "normal_form_rank1_elliptic";
      s.f = parse("x3", 4);
      s.F2 = parse("(x2^2 + x4^2)/2", 4);
      g.expected = {{"rank1[origin].verdict", "elliptic"}};
      break;
    case NormalForm::Rank1Hyperbolic:
      g.name = "normal_form_rank1_hyperbolic";
      s.f = parse("x3", 4);
      s.F2 = parse("x2*x4", 4);
      g.expected = {{"rank1[origin].verdict", "hyperbolic"}};
      break;
  }
  s.name = g.name;
  return g;
}

std::vector<std::string> gallery_names() {
  return {"gaussian_shrinker",          "cigar_product_1_4",
          "cigar_product_2_3",          "cigar_product_1_1",
          "normal_form_ee",             "normal_form_ff",
          "normal_form_rank1_elliptic", "normal_form_rank1_hyperbolic"};
}

namespace {

double parse_param(const std::string& text, const std::string& name) {
  std::string t = text;
  for (char& c : t)
    if (c == 'p') c = '.';
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0') {
    throw Error(ErrorKind::InvalidArgument, "bad parameter '" + text + "' in gallery name " + name);
  }
  return v;
}

}  // namespace

GallerySpec gallery_by_name(const std::string& name) {
  if (name == "gaussian_shrinker") return gaussian_shrinker(1.0);
  if (name == "normal_form_ee") return normal_form_system(NormalForm::EllipticElliptic);
  if (name == "normal_form_ff") return normal_form_system(NormalForm::FocusFocus);
  if (name == "normal_form_rank1_elliptic") return normal_form_system(NormalForm::Rank1Elliptic);
  if (name == "normal_form_rank1_hyperbolic") return normal_form_system(NormalForm::Rank1Hyperbolic);
  const std::string gs = "gaussian_shrinker_";
  if (name.rfind(gs, 0) == 0) return gaussian_shrinker(parse_param(name.substr(gs.size()), name));
  const std::string cp = "cigar_product_";
  if (name.rfind(cp, 0) == 0) {
    const std::string rest = name.substr(cp.size());
    const auto us = rest.find('_');
    if (us != std::string::npos) {
      return cigar_product(parse_param(rest.substr(0, us), name),
                           parse_param(rest.substr(us + 1), name));
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown gallery system '" + name + "'");
}

double gallery_self_test(const GallerySpec& spec, int samples) {
  const SolitonSystem& s = spec.system;
  if (!s.aux_S || s.kind != SystemKind::Soliton) return 0.0;
  double worst = 0.0;
  for (const auto& p : halton_samples(s.domain, samples, 0)) {
    const PointGeometry geo = compute_geometry(s, p, Depth::Curvature);
    worst = std::max(worst, std::fabs(geo.scal - eval(*s.aux_S, p)));
  }
  return worst;
}

}  // namespace kgrs
