// Acceptance run: one PASS/FAIL line per criterion.
//
// Usage: kgrs_acceptance [--allow-fail N]...
// Exit status is 0 when every failing criterion is listed with --allow-fail.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kgrs/atlas.hpp"
#include "kgrs/error.hpp"
#include "kgrs/gallery.hpp"
#include "kgrs/image.hpp"
#include "kgrs/soliton.hpp"
#include "kgrs/specfile.hpp"
#include "kgrs/symplectic.hpp"

#ifndef KGRS_CLI_PATH
#error "KGRS_CLI_PATH must name the command-line binary"
#endif

using namespace kgrs;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;
  std::string failed;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      failed += " [failed: " + what + "]";
    }
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

const std::vector<double> kOrigin{0.0, 0.0, 0.0, 0.0};

// ---- 1 ----
void soliton_certification(Outcome& o) {
  std::vector<GallerySpec> systems{gaussian_shrinker(1.0), cigar_product(1.0, 4.0), cigar_product(2.0, 3.0),
                                   cigar_product(1.0, 1.0)};
  double res = 0.0, ident = 0.0, var = 0.0;
  for (const auto& g : systems) {
    const PointSet pts = halton_samples(g.system.domain, 200, 0);
    const SolitonResidual r = soliton_residual(g.system, pts);
    const IdentityReport id = identity_suite(g.system, pts);
    o.require(!id.gated, g.name + " identity gate");
    res = std::max(res, r.sup);
    ident = std::max({ident, id.trace_identity, id.ricci_gradient, id.ricci_divergence, id.scalar_laplacian});
    var = std::max(var, id.hamilton_variance);
  }
  o.require(res < 1e-8, "soliton residual");
  o.require(ident < 1e-7, "identities");
  o.require(var < 1e-12, "Hamilton variance");
  o.detail << "residual " << sci(res) << ", identities " << sci(ident) << ", Hamilton variance " << sci(var);
}

// ---- 2 ----
void integrability(Outcome& o) {
  double worst = 0.0;
  for (const auto& name : gallery_names()) {
    const GallerySpec g = gallery_by_name(name);
    if (g.system.kind != SystemKind::Soliton) continue;
    const PoissonReport p = poisson_bracket_fS(g.system, halton_samples(g.system.domain, 200, 0));
    worst = std::max(worst, p.sup);
  }
  o.require(worst < 1e-9, "|{f,S}|");
  o.detail << "sup |omega(grad f, grad S)| " << sci(worst);
}

// ---- 3 ----
void hessian_of_S(Outcome& o) {
  const GallerySpec g = cigar_product(1.0, 4.0);
  const HessSReport h = hess_S_formula_check(g.system, halton_samples(g.system.domain, 100, 0));
  const PointGeometry geo = compute_geometry(g.system, kOrigin, Depth::Full);
  const Mat mixed = geo.ginv * geo.hess_S;
  Mat expect = Mat::Zero(4, 4);
  expect.diagonal() << -8.0, -8.0, -0.5, -0.5;
  const double origin = (mixed - expect).cwiseAbs().maxCoeff();
  o.require(h.sup < 1e-6, "formula residual");
  o.require(origin < 1e-8, "origin Hess S");
  o.detail << "formula residual " << sci(h.sup) << ", g^-1 Hess S at origin vs diag(-8,-8,-0.5,-0.5) " << sci(origin);
}

// ---- 4 ----
void killing_identities(Outcome& o) {
  const GallerySpec g = cigar_product(1.0, 4.0);
  const KillingReport k = killing_suite(g.system, halton_samples(g.system.domain, 50, 0));
  const double worst = std::max({k.lie_derivative, k.nabla_J_grad_f, k.nabla_hess_f});
  o.require(worst < 1e-7, "Killing residuals");
  o.detail << "L_{J grad f} g " << sci(k.lie_derivative) << ", nabla(J grad f) " << sci(k.nabla_J_grad_f)
           << ", nabla Hess f " << sci(k.nabla_hess_f);
}

// ---- 5 ----
void sp4_classification(Outcome& o) {
  const MatX om = canonical_omega(4);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.3, 3.0);
  auto nonzero = [&] { return (rng() % 2 ? 1.0 : -1.0) * u(rng); };
  const std::pair<CartanFamily, SingularityType> fams[] = {{CartanFamily::EE, SingularityType::EE},
                                                           {CartanFamily::EH, SingularityType::EH},
                                                           {CartanFamily::HH, SingularityType::HH},
                                                           {CartanFamily::FF, SingularityType::FF}};
  int correct = 0, total = 0, triples = 0;
  for (const auto& [fam, expect] : fams) {
    for (int t = 0; t < 20; ++t) {
      double A = nonzero(), B = nonzero();
      while (std::fabs(std::fabs(A) - std::fabs(B)) < 0.1) B = nonzero();
      const double C = nonzero(), D = nonzero();
      const CartanVerdict v = cartan_verdict(om * cartan_family_element(fam, A, B),
                                             om * cartan_family_element(fam, C, D), om);
      ++total;
      correct += v.type == expect;
      triples += v.pattern.j1 + v.pattern.j2 + 2 * v.pattern.j3 == 2;
    }
  }
  o.require(correct == total, "family verdicts");
  o.require(triples == total, "triple identity");
  // Two-dimensional examples: q = x^2 + y^2 and q = x y.
  const MatX om2 = canonical_omega(2);
  MatX He(2, 2), Hh(2, 2);
  He << 2, 0, 0, 2;
  Hh << 0, 1, 1, 0;
  const EigenPattern pe = eig_pattern(linearization(om2, He));
  const EigenPattern ph = eig_pattern(linearization(om2, Hh));
  bool exact = pe.j1 == 1 && ph.j2 == 1;
  for (const auto& l : pe.eigenvalues) exact = exact && l.real() == 0.0 && std::fabs(l.imag()) == 2.0;
  for (const auto& l : ph.eigenvalues) exact = exact && std::fabs(l.real()) == 1.0 && l.imag() == 0.0;
  o.require(exact, "2D examples");
  o.detail << correct << "/" << total << " family verdicts, triple identity " << triples << "/" << total
           << ", 2D elliptic +-2i and hyperbolic +-1 " << (exact ? "exact" : "inexact");
}

// ---- 6 ----
void normal_forms(Outcome& o) {
  const auto ff = find_rank0(normal_form_system(NormalForm::FocusFocus).system);
  bool ff_ok = ff.size() == 1 && ff[0].verdict == "FF";
  if (ff_ok) {
    for (const auto& l : ff[0].eigenvalues) ff_ok = ff_ok && std::fabs(l.real()) > 1e-6 && std::fabs(l.imag()) > 1e-6;
  }
  const SingularPointRecord h = classify_rank1(normal_form_system(NormalForm::Rank1Hyperbolic).system, kOrigin);
  bool h_ok = h.verdict == "hyperbolic" && !h.eigenvalues.empty();
  for (const auto& l : h.eigenvalues) h_ok = h_ok && std::fabs(l.imag()) < 1e-9 && std::fabs(l.real()) > 1e-6;
  const SingularPointRecord e = classify_rank1(normal_form_system(NormalForm::Rank1Elliptic).system, kOrigin);
  bool e_ok = e.verdict == "elliptic" && !e.eigenvalues.empty();
  for (const auto& l : e.eigenvalues) e_ok = e_ok && std::fabs(l.real()) < 1e-9 && std::fabs(l.imag()) > 1e-6;
  const auto ee = find_rank0(normal_form_system(NormalForm::EllipticElliptic).system);
  bool ee_ok = ee.size() == 1 && ee[0].verdict == "EE";
  if (ee_ok) {
    for (const auto& l : ee[0].eigenvalues) ee_ok = ee_ok && std::fabs(l.real()) < 1e-9 && std::fabs(l.imag()) > 1e-6;
  }
  o.require(ff_ok, "focus-focus");
  o.require(h_ok, "rank-1 hyperbolic");
  o.require(e_ok && ee_ok, "elliptic blocs");
  o.detail << "FF eigenvalues +-a+-ib " << (ff_ok ? "yes" : "no") << ", (y1, x2y2) hyperbolic with real pair "
           << (h_ok ? "yes" : "no") << ", elliptic blocs imaginary " << (e_ok && ee_ok ? "yes" : "no");
}

// ---- 7 ----
void rank0_analysis(Outcome& o) {
  const GallerySpec g = cigar_product(1.0, 4.0);
  const auto r0 = find_rank0(g.system);
  bool one = r0.size() == 1;
  double off = 1e300, dmu = 1e300;
  if (one) {
    off = 0.0;
    for (double v : r0[0].x) off = std::max(off, std::fabs(v));
    dmu = std::max(std::fabs(r0[0].mu1 + 2.0), std::fabs(r0[0].mu2 + 0.5));
  }
  o.require(one && off < 1e-9, "single origin");
  o.require(dmu < 1e-6, "mu");
  o.require(one && r0[0].shortcut_verdict == "EE" && r0[0].cartan_verdict == "EE" && r0[0].verdict == "EE",
            "EE by both paths");
  const auto sym = find_rank0(cigar_product(1.0, 1.0).system);
  o.require(sym.size() == 1 && sym[0].label() == "DEGENERATE(hess-multiple-of-identity)", "symmetric degenerate");
  const Rank1Seeds seeds = find_rank1_seeds(g.system);
  const MorseReport m = morse_report(g.system, r0, seeds.points);
  o.require(m.morse && m.points.size() == 1 && m.points[0].even && m.points[0].isolated, "Morse report");
  o.detail << r0.size() << " rank-0 point, |mu - (-2,-0.5)| " << sci(dmu) << ", shortcut/Cartan "
           << (one ? r0[0].shortcut_verdict + "/" + r0[0].cartan_verdict : "-") << ", symmetric "
           << (sym.empty() ? "-" : sym[0].label()) << ", Morse index "
           << (m.points.empty() ? -1 : m.points[0].index);
}

// ---- 8 ----
void rank1_analysis(Outcome& o) {
  const GallerySpec g = cigar_product(1.0, 4.0);
  int elliptic = 0, dim2 = 0, oracle = 0;
  const std::vector<std::vector<double>> axis{{1.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}, {0.3, -0.4, 0.0, 0.0}};
  for (const auto& x : axis) {
    const SingularPointRecord r = classify_rank1(g.system, x);
    elliptic += r.verdict == "elliptic";
    dim2 += r.singular_dimension == 2;
    const std::string l = level_set_oracle(g.system, x);
    oracle += l == "min" || l == "max";
  }
  const int n = static_cast<int>(axis.size());
  o.require(elliptic == n, "axis elliptic");
  o.require(oracle == n, "level-set oracle");
  o.require(dim2 == n, "axis dimension 2");
  // a(1 + r1^2) = b(1 + r2^2): r1^2 = 4 r2^2 + 3.
  const std::vector<double> diag{2.0, 0.0, 0.5, 0.0}, diag2{0.0, std::sqrt(7.0), 0.0, 1.0};
  int degenerate = 0, dim3 = 0;
  for (const auto& x : {diag, diag2}) {
    const SingularPointRecord r = classify_rank1(g.system, x);
    degenerate += r.label() == "DEGENERATE(excess-dimension)";
    dim3 += r.singular_dimension == 3;
  }
  o.require(degenerate == 2 && dim3 == 2, "diagonal excess dimension");
  o.detail << elliptic << "/" << n << " axis points elliptic, oracle extremum " << oracle << "/" << n
           << ", dimension 2 " << dim2 << "/" << n << ", diagonal DEGENERATE(excess-dimension) dim 3 " << dim3
           << "/2";
}

// ---- 9 ----
void branch_geometry(Outcome& o) {
  const GallerySpec g = cigar_product(1.0, 4.0);
  const auto r0 = find_rank0(g.system);
  const BranchRecord b = trace_branch(g.system, std::vector<double>{1.0, 0.0, 0.0, 0.0}, r0);
  const BranchGeometryReport geo = branch_geometry_check(g.system, b, 20);
  o.require(geo.points == 20, "20 points");
  o.require(geo.max() < 1e-5, "residuals");
  o.require(b.forward.kind == EndKind::HitsRank0 && b.forward.rank0_index == 0, "inward hits-rank0");
  o.detail << geo.points << " points, geodesy " << sci(geo.total_geodesy) << ", curvature " << sci(geo.curvature)
           << ", Hess diagonals " << sci(std::max({geo.hess_f_diag, geo.hess_S_diag, geo.hess_S_J_diag}))
           << ", inward " << end_kind_name(b.forward.kind);
}

// ---- 10 ----
void branch_counting(Outcome& o) {
  const AtlasResult a = scan_system(cigar_product(1.0, 4.0).system);
  bool two = a.counts.size() == 1 && a.counts[0].count == 2 && !a.counts[0].violation;
  double worst = 0.0;
  int eigen = 0;
  if (!a.counts.empty()) {
    for (const auto& d : a.counts[0].directions) {
      if (d.family.rfind("DEGENERATE", 0) == 0) continue;
      worst = std::max(worst, d.residual);
      ++eigen;
    }
  }
  o.require(two, "count 2");
  o.require(eigen >= 2 && worst < 1e-5, "eigenvector directions");
  const AtlasResult s = scan_system(cigar_product(1.0, 1.0).system);
  const bool sym = s.counts.size() == 1 && s.counts[0].count == 3 && s.counts[0].degenerate_point &&
                   s.rank0[0].verdict == "DEGENERATE";
  o.require(sym, "symmetric 3 with DEGENERATE");
  o.detail << "count " << (a.counts.empty() ? -1 : a.counts[0].count) << " from " << eigen
           << " traced approaches, Rayleigh residual " << sci(worst)
           << ", symmetric count " << (s.counts.empty() ? -1 : s.counts[0].count) << " alongside "
           << (s.rank0.empty() ? "-" : s.rank0[0].label());
}

// ---- 11 ----
void moment_image(Outcome& o) {
  const GallerySpec g = cigar_product(1.0, 4.0);
  const double c = -std::log(100.0);
  const LevelExtrema e = level_extrema(g.system, c);
  o.require(std::fabs(e.S_min - 0.4) < 1e-3, "S-");
  o.require(std::fabs(e.S_max - 4.01) < 1e-3, "S+");
  // Level samples: u = 1 + r1^2 log-uniform in [1, e^-c], v = e^-c / u.
  const double E = std::exp(-c);
  int inside = 0, total = 0;
  for (const auto& h : halton_samples(g.system.domain, 10000, 5, 0.0)) {
    const double u = std::pow(E, (h[0] + 10.0) / 20.0);
    const double r1 = std::sqrt(u - 1.0), r2 = std::sqrt(E / u - 1.0);
    const double a1 = std::atan2(h[1], h[2]), a2 = std::atan2(h[3], h[1] + h[2]);
    const std::vector<double> p{r1 * std::cos(a1), r1 * std::sin(a1), r2 * std::cos(a2), r2 * std::sin(a2)};
    if (!g.system.domain.contains(p)) continue;
    const double S = eval(*g.system.aux_S, p);
    ++total;
    inside += S >= e.S_min - 1e-9 && S <= e.S_max + 1e-9;
  }
  o.require(total >= 9000 && inside == total, "band correctness");
  const ImageBoundary b = image_boundary(g.system, 256);
  o.require(b.max_jump < 0.1, "continuity jump < 0.1");
  const ImageBoundary gb = image_boundary(gaussian_shrinker(1.0).system, 16);
  double height = 0.0;
  for (std::size_t k = 0; k < gb.f.size(); ++k)
    if (gb.valid[k]) height = std::max(height, std::fabs(gb.upper[k] - gb.lower[k]));
  o.require(height < 1e-10, "Gaussian height");
  const double h = (b.f_max - b.f_min) / 256.0;
  o.detail << "S- " << e.S_min << ", S+ " << e.S_max << ", band " << inside << "/" << total
           << ", max jump at 256 " << sci(b.max_jump) << " (slope bound 4h = " << sci(4.0 * h)
           << "), Gaussian height " << sci(height);
}

// ---- 12 ----
void fiber_oracle(Outcome& o) {
  const GallerySpec g = cigar_product(1.0, 4.0);
  const double c = -std::log(100.0);
  const FiberResult two = fiber_components(g.system, c, 0.8);
  const FiberResult one = fiber_components(g.system, c, 2.0);
  const FiberResult gauss = fiber_components(gaussian_shrinker(1.0).system, 1.0, 0.0);
  o.require(two.count() == 2 && two.stable, "s = 0.8");
  o.require(one.count() == 1 && one.stable, "s = 2.0");
  o.require(gauss.count() == 1, "Gaussian");
  auto grids = [](const FiberResult& f) {
    std::string s;
    for (std::size_t k = 0; k < f.grids.size(); ++k)
      s += (k ? "," : "") + std::to_string(f.components[k]) + "@" + std::to_string(f.grids[k]);
    return s;
  };
  o.detail << "s=0.8: " << grids(two) << ", s=2.0: " << grids(one) << ", Gaussian: " << grids(gauss);
}

// ---- 13 ----
void differentiation(Outcome& o) {
  double fd = 0.0;
  for (const auto& name : gallery_names()) {
    const SolitonSystem s = gallery_by_name(name).system;
    std::vector<const Expr*> exprs{&s.f};
    for (const auto& e : s.g)
      if (!e.is_constant()) exprs.push_back(&e);
    if (s.aux_S) exprs.push_back(&*s.aux_S);
    if (s.F2) exprs.push_back(&*s.F2);
    for (const auto& p : halton_samples(s.domain, 50, 0))
      for (const Expr* e : exprs) fd = std::max(fd, fd_crosscheck(*e, p).max());
  }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), pt(-1.0, 1.0);
  const auto& table = MultiIndexTable::get(4);
  auto binom = [](int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
  };
  double sym = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::map<int, double> poly;
    const int terms = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < terms; ++k) poly[static_cast<int>(rng() % 70)] += coef(rng);
    Expr e = Expr::constant(0.0, 4);
    for (const auto& [idx, cf] : poly) {
      Expr m = Expr::constant(cf, 4);
      for (int v = 0; v < 4; ++v)
        if (table.indices[idx][v] > 0) m = m * Expr::variable(v, 4).pow(table.indices[idx][v]);
      e = e + m;
    }
    const std::vector<double> p{pt(rng), pt(rng), pt(rng), pt(rng)};
    const Jet j = eval_jet(parse(e.to_string(), 4), p, 4);
    for (int beta = 0; beta < 70; ++beta) {
      double expect = 0.0;
      for (const auto& [idx, cf] : poly) {
        double term = cf;
        for (int v = 0; v < 4 && term != 0.0; ++v) {
          const int a = table.indices[idx][v], b = table.indices[beta][v];
          term = b > a ? 0.0 : term * binom(a, b) * std::pow(p[v], a - b);
        }
        expect += term;
      }
      sym = std::max(sym, std::fabs(j[beta] - expect) / std::max(1.0, std::fabs(expect)));
    }
  }
  o.require(fd < 1e-5, "jet vs FD");
  o.require(sym < 1e-10, "jet vs symbolic");
  o.detail << "jet vs FD " << sci(fd) << ", jet vs symbolic on 1000 polynomials " << sci(sym);
}

// ---- 14 ----
int shell(const std::string& cmd) {
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void replace_once(std::string& s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  if (at != std::string::npos) s.replace(at, from.size(), to);
}

void cli_contract(Outcome& o) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("kgrs_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = KGRS_CLI_PATH;
  auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  int bad = 0;
  std::string codes;
  for (const auto& name : gallery_names()) {
    const fs::path spec = dir / (name + ".spec");
    if (shell(cli + " gallery --export " + name + " -o " + q(spec)) != 0) ++bad;
    const int code = shell(cli + " -q verify " + q(spec) + " > /dev/null");
    if (code != 0) {
      ++bad;
      codes += " " + name + "=" + std::to_string(code);
    }
  }
  const fs::path cigar = dir / "cigar_product_1_4.spec";
  const std::string base = slurp(cigar);
  const int scan_sym = shell(cli + " -q scan " + q(dir / "cigar_product_1_1.spec") + " > /dev/null");

  std::string j = base;
  replace_once(j, "J34 = -1", "J34 = -1.5");
  std::string lam = base;
  replace_once(lam, "lambda = 0", "lambda = 0.10000000000000001");
  std::string cubic = slurp(dir / "gaussian_shrinker.spec");
  const auto fpos = cubic.find("f = ");
  const auto fend = cubic.find('\n', fpos);
  cubic = cubic.substr(0, fend) + " + 0.01*x1^3" + cubic.substr(fend);
  const std::string malformed = "[chart]\ndim = 4\nx1 = [-1, 1\n";
  const std::map<std::string, std::pair<std::string, int>> controls{
      {"j_perturbed", {j, 2}}, {"lambda_0.1", {lam, 1}}, {"gaussian_cubic", {cubic, 1}}, {"malformed", {malformed, 2}}};
  int control_ok = 0;
  for (const auto& [name, spec] : controls) {
    const fs::path p = dir / (name + ".spec");
    std::ofstream(p, std::ios::binary) << spec.first;
    const int code = shell(cli + " -q verify " + q(p) + " > /dev/null 2>&1");
    control_ok += code == spec.second;
    codes += " " + name + "=" + std::to_string(code);
  }
  const std::string run = cli + " -q --no-timings --seed 0 report " + q(cigar) + " -o ";
  const int r1 = shell(run + q(dir / "a.json"));
  const int r2 = shell(run + q(dir / "b.json"));
  const std::string a = slurp(dir / "a.json"), b = slurp(dir / "b.json");
  const bool identical = !a.empty() && a == b;
  fs::remove_all(dir);

  o.require(bad == 0, "gallery verify exit 0");
  o.require(scan_sym == 0, "degenerate scan exit 0");
  o.require(control_ok == static_cast<int>(controls.size()), "negative controls");
  o.require(r1 == 0 && r2 == 0 && identical, "byte-identical JSON");
  o.detail << "gallery verify failures " << bad << ", scan cigar(1,1) exit " << scan_sym << ", controls"
           << codes << ", report JSON " << a.size() << " bytes " << (identical ? "identical" : "differs");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> allowed;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--allow-fail" && i + 1 < argc) allowed.insert(std::atoi(argv[++i]));
  }
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"soliton certification", soliton_certification},
      {"integrability", integrability},
      {"Hessian of S", hessian_of_S},
      {"Killing field identities", killing_identities},
      {"sp(4) classification", sp4_classification},
      {"normal-form systems", normal_forms},
      {"rank-0 analysis", rank0_analysis},
      {"rank-1 analysis", rank1_analysis},
      {"branch geometry", branch_geometry},
      {"branch counting", branch_counting},
      {"moment image", moment_image},
      {"fiber oracle", fiber_oracle},
      {"differentiation integrity", differentiation},
      {"determinism and CLI contract", cli_contract},
  };
  int passed = 0;
  std::vector<int> unexpected;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.failed += std::string(" [exception: ") + e.what() + "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const int id = static_cast<int>(k + 1);
    std::printf("%s %2d %s: %s%s (%.1f s)\n", o.ok ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                o.detail.str().c_str(), o.failed.c_str(), secs);
    std::fflush(stdout);
    if (o.ok) ++passed;
    else if (!allowed.count(id)) unexpected.push_back(id);
  }
  std::printf("%d/%zu criteria pass", passed, criteria.size());
  if (!allowed.empty()) {
    std::printf("; documented failures allowed:");
    for (int a : allowed) std::printf(" %d", a);
  }
  std::printf("\n");
  return unexpected.empty() ? 0 : 1;
}
