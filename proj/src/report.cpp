#include "kgrs/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "kgrs/atlas.hpp"
#include "kgrs/error.hpp"
#include "kgrs/geometry.hpp"
#include "kgrs/image.hpp"
#include "kgrs/soliton.hpp"
#include "kgrs/specfile.hpp"

namespace kgrs {

using nlohmann::json;

const char* command_name(Command c) {
  switch (c) {
    case Command::Verify: return "verify";
    case Command::Scan: return "scan";
    case Command::Image: return "image";
    case Command::Fibers: return "fibers";
    case Command::Report: return "report";
  }
  return "?";
}

Command command_from_name(const std::string& name) {
  for (Command c : {Command::Verify, Command::Scan, Command::Image, Command::Fibers, Command::Report}) {
    if (name == command_name(c)) return c;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown command '" + name + "'");
}

std::string spec_digest(const SolitonSystem& sys) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : export_spec(sys)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// ---- pipeline -------------------------------------------------------------

void add_check(RunReport& r, const std::string& name, double value, double tol, const std::string& note = {}) {
  const Check c = make_check(name, value, tol, note);
  r.checks.push_back({c.name, c.value, c.tolerance, c.passed, c.note});
}

double second_value(const SolitonSystem& sys, std::span<const double> x) {
  if (const Expr* e = sys.explicit_second()) return eval(*e, x);
  return compute_geometry(sys, x, Depth::Curvature).scal;
}

PointRecord point_record(const SolitonSystem& sys, const SingularPointRecord& p) {
  PointRecord q;
  q.rank = p.rank;
  q.x = p.x;
  q.verdict = p.label();
  q.triple = p.triple;
  if (p.rank == 0) q.mu = {p.mu1, p.mu2};
  for (const auto& e : p.eigenvalues) q.eigenvalues.push_back({e.real(), e.imag()});
  q.hess_f_eigenvalues = p.hess_f_eigenvalues;
  q.singular_dimension = p.singular_dimension;
  q.f = eval(sys.f, p.x);
  q.S = second_value(sys, p.x);
  return q;
}

void verify_stage(const SolitonSystem& sys, const RunOptions& opt, RunReport& r) {
  const PointSet samples = halton_samples(sys.domain, opt.samples, opt.seed);
  const KahlerReport k = kahler_verify(sys, samples);
  add_check(r, "kahler.J_squared", k.J_squared, k.tolerance);
  add_check(r, "kahler.hermitian", k.hermitian, k.tolerance);
  add_check(r, "kahler.nabla_J", k.nabla_J, k.tolerance);
  add_check(r, "kahler.d_omega", k.d_omega, k.tolerance);

  const PoissonReport pb = poisson_bracket_fS(sys, samples);
  add_check(r, "poisson.f_S", pb.sup, pb.tolerance);

  // Jet derivatives against finite differences for every nonconstant input.
  const PointSet fd_points(samples.begin(), samples.begin() + std::min<std::size_t>(50, samples.size()));
  std::vector<const Expr*> exprs{&sys.f};
  for (const auto& e : sys.g)
    if (!e.is_constant()) exprs.push_back(&e);
  if (sys.aux_S) exprs.push_back(&*sys.aux_S);
  if (sys.F2) exprs.push_back(&*sys.F2);
  double fd = 0.0;
  for (const Expr* e : exprs)
    for (const auto& p : fd_points) fd = std::max(fd, fd_crosscheck(*e, p).max());
  add_check(r, "jet.fd_discrepancy", fd, sys.tolerances.get("fd"));

  if (sys.kind != SystemKind::Soliton) return;
  const SolitonResidual sr = soliton_residual(sys, samples);
  add_check(r, "soliton.residual", sr.sup, sr.tolerance);
  const IdentityReport id = identity_suite(sys, samples);
  const std::string gated = id.gated ? "gated: soliton residual above the gate" : "";
  auto idc = [&](const std::string& name, double v, double tol) {
    add_check(r, name, id.gated ? std::numeric_limits<double>::infinity() : v, tol, gated);
  };
  idc("identity.trace_identity", id.trace_identity, id.tolerance);
  idc("identity.ricci_gradient", id.ricci_gradient, id.tolerance);
  idc("identity.ricci_divergence", id.ricci_divergence, id.tolerance);
  idc("identity.hamilton_variance", id.hamilton_variance, id.variance_tolerance);
  idc("identity.scalar_laplacian", id.scalar_laplacian, id.tolerance);
  idc("identity.hess_f_grad_f_J_grad_S", id.hess_f_cross, id.tolerance);
  idc("identity.hess_f_J_commutator", id.hess_J_commutator, id.tolerance);

  const PointSet ks(samples.begin(), samples.begin() + std::min<std::size_t>(50, samples.size()));
  const KillingReport kr = killing_suite(sys, ks);
  add_check(r, "killing.lie_derivative", kr.lie_derivative, kr.tolerance);
  add_check(r, "killing.nabla_J_grad_f", kr.nabla_J_grad_f, kr.tolerance);
  add_check(r, "killing.nabla_hess_f", kr.nabla_hess_f, kr.tolerance);

  const PointSet hs(samples.begin(), samples.begin() + std::min<std::size_t>(100, samples.size()));
  const HessSReport h = hess_S_formula_check(sys, hs);
  add_check(r, "hess_S.formula", h.sup, h.tolerance);

  if (sys.aux_S) {
    double worst = 0.0;
    for (const auto& p : hs)
      worst = std::max(worst, std::fabs(compute_geometry(sys, p, Depth::Curvature).scal - eval(*sys.aux_S, p)));
    add_check(r, "aux_S.agreement", worst, sys.tolerances.get("soliton"));
  }
}

AtlasOptions atlas_options(const SolitonSystem& sys) {
  AtlasOptions a;
  a.symplectic.pairing = sys.tolerances.get("pairing");
  a.symplectic.zero = sys.tolerances.get("zero");
  a.symplectic.commute = sys.tolerances.get("commute");
  return a;
}

void nondegenerate_stage(const SolitonSystem& sys, RunReport& r) {
  const AtlasOptions a = atlas_options(sys);
  int degenerate = 0;
  for (const auto& p : find_rank0(sys, a)) {
    degenerate += p.verdict == "DEGENERATE";
    r.points.push_back(point_record(sys, p));
  }
  const Rank1Seeds seeds = find_rank1_seeds(sys, a);
  for (const auto& x : seeds.points) {
    const SingularPointRecord p = classify_rank1(sys, x, a);
    degenerate += p.verdict == "DEGENERATE";
    r.points.push_back(point_record(sys, p));
  }
  add_check(r, "nondegenerate", degenerate, 0.5, std::to_string(degenerate) + " degenerate singular points");
}

AtlasResult scan_stage(const SolitonSystem& sys, RunReport& r) {
  const AtlasResult res = scan_system(sys, atlas_options(sys));
  r.points.clear();
  for (const auto& p : res.rank0) r.points.push_back(point_record(sys, p));
  // The level-set oracle cross-checks the first few points of each verdict.
  std::map<std::string, int> oracle_runs;
  for (const auto& p : res.rank1) {
    PointRecord q = point_record(sys, p);
    if (p.verdict != "DEGENERATE" && oracle_runs[p.verdict]++ < 8) q.oracle = level_set_oracle(sys, p.x);
    r.points.push_back(std::move(q));
  }
  const double branch_tol = sys.tolerances.get("branch");
  for (std::size_t k = 0; k < res.branches.size(); ++k) {
    const BranchRecord& b = res.branches[k];
    BranchSummary s;
    s.family = b.family;
    s.seed = b.seed;
    s.backward = end_kind_name(b.backward.kind);
    s.forward = end_kind_name(b.forward.kind);
    s.backward_rank0 = b.backward.rank0_index;
    s.forward_rank0 = b.forward.rank0_index;
    s.max_wedge = b.max_wedge;
    s.membership_preserved = b.membership_preserved;
    for (const auto& p : b.points) s.image.push_back({p.f, p.S});
    const BranchGeometryReport& g = res.branch_checks[k];
    if (g.points > 0) {
      s.geometry = {{"total_geodesy", g.total_geodesy},
                    {"curvature", g.curvature},
                    {"hess_f_diag", g.hess_f_diag},
                    {"hess_S_diag", g.hess_S_diag},
                    {"hess_S_J_diag", g.hess_S_J_diag}};
      add_check(r, "branch[" + std::to_string(k) + "].geometry", g.max(), branch_tol);
    }
    r.branches.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < res.counts.size(); ++i) {
    const BranchCount& c = res.counts[i];
    CountRecord q;
    q.rank0 = static_cast<int>(i);
    q.count = c.count;
    q.degenerate_point = c.degenerate_point;
    q.violation = c.violation;
    q.dependent_case = c.dependent_case;
    double worst = 0.0;
    for (const auto& d : c.directions) {
      q.rayleigh_residuals.push_back(d.residual);
      if (d.family.rfind("DEGENERATE", 0) != 0) worst = std::max(worst, d.residual);
    }
    r.counts.push_back(std::move(q));
    add_check(r, "rank0[" + std::to_string(i) + "].branch_count", c.violation ? 1.0 : 0.0, 0.5,
              std::to_string(c.count) + " adjacent branches");
    if (!c.degenerate_point && !c.directions.empty()) {
      add_check(r, "rank0[" + std::to_string(i) + "].eigen_directions", worst, branch_tol);
    }
  }
  MorseRecord m;
  m.morse = res.morse.morse;
  m.dependent_caveat = res.morse.dependent_caveat;
  for (const auto& p : res.morse.points) {
    m.index.push_back(p.index);
    m.even.push_back(p.even);
    m.isolated.push_back(p.isolated);
  }
  r.morse = m;
  int degenerate = 0;
  for (const auto& p : r.points) degenerate += p.verdict.rfind("DEGENERATE", 0) == 0;
  if (degenerate > 0) r.findings.push_back(std::to_string(degenerate) + " degenerate singular points");
  if (res.seeds.dependent_case) r.findings.push_back("dependent case: grad f parallel to grad S on most of the domain");
  return res;
}

void image_stage(const SolitonSystem& sys, const RunOptions& opt, const AtlasResult& atlas, RunReport& r) {
  LevelOptions lo;
  lo.seed = opt.seed;
  const ImageBoundary b = image_boundary(sys, opt.resolution, lo);
  ImageRecord im;
  im.resolution = opt.resolution;
  im.f = b.f;
  double disorder = 0.0;
  for (std::size_t k = 0; k < b.f.size(); ++k) {
    if (b.valid[k]) {
      im.lower.emplace_back(b.lower[k]);
      im.upper.emplace_back(b.upper[k]);
      disorder = std::max(disorder, b.lower[k] - b.upper[k]);
    } else {
      im.lower.emplace_back(std::nullopt);
      im.upper.emplace_back(std::nullopt);
    }
  }
  im.f_min = b.f_min;
  im.f_max = b.f_max;
  im.max_jump = b.max_jump;
  im.jumps = b.jumps;
  CriticalValues cv = critical_value_curves(sys, atlas);
  label_curves(sys, cv, 8, 1e-3, lo);
  for (const auto& c : cv.curves) {
    im.curves.push_back({c.family, c.degenerate, c.placement, c.hyperbolic_evidence, c.points});
    if (c.hyperbolic_evidence) r.findings.push_back("interior critical curve of family " + c.family);
  }
  im.rank0 = cv.rank0;
  im.rank0_in_band = cv.rank0_in_band;
  int outside = 0;
  for (bool in : cv.rank0_in_band) outside += !in;
  add_check(r, "image.band_order", std::max(0.0, disorder), 1e-9);
  add_check(r, "image.rank0_in_band", outside, 0.5);
  add_check(r, "image.flagged_jumps", static_cast<double>(b.jumps.size()), 0.5,
            "max adjacent jump " + std::to_string(b.max_jump));
  r.image = std::move(im);
}

void fiber_stage(const SolitonSystem& sys, const RunOptions& opt, RunReport& r) {
  FiberOptions fo;
  fo.grids = {std::max(2, opt.fiber_grid / 2), opt.fiber_grid};
  const Expr* second = sys.explicit_second() ? sys.explicit_second() : (sys.aux_S ? &*sys.aux_S : nullptr);
  for (std::size_t k = 0; k < opt.fibers.size(); ++k) {
    const auto [c, s] = opt.fibers[k];
    const FiberResult fr = fiber_components(sys, c, s, fo);
    FiberRecord q;
    q.c = c;
    q.s = s;
    q.count = fr.count();
    q.grids = fr.grids;
    q.components = fr.components;
    q.representatives = fr.representatives;
    q.solve_tolerance = fr.solve_tolerance;
    q.stable = fr.stable;
    q.closed_form = fr.closed_form;
    const std::string tag = "fiber[" + std::to_string(k) + "]";
    add_check(r, tag + ".stable", fr.stable ? 0.0 : 1.0, 0.5, std::to_string(q.count) + " components");
    if (fr.closed_form && second) {
      double worst = 0.0;
      for (const auto& p : fr.representatives) {
        worst = std::max({worst, std::fabs(eval(sys.f, p) - c), std::fabs(eval(*second, p) - s)});
      }
      add_check(r, tag + ".representatives", worst, 10.0 * fr.solve_tolerance);
    }
    r.fibers.push_back(std::move(q));
  }
}

}  // namespace

RunReport run(Command command, const SolitonSystem& input, const RunOptions& opt) {
  RunReport r;
  r.command = command_name(command);
  r.system = input.name;
  r.seed = opt.seed;
  std::string stage = "setup";
  try {
    SolitonSystem sys = input;
    for (const auto& [k, v] : opt.tolerances) sys.tolerances.set(k, v);
    r.spec_digest = spec_digest(sys);
    auto timed = [&](const std::string& name, const std::function<void()>& fn) {
      stage = name;
      const auto t0 = std::chrono::steady_clock::now();
      fn();
      if (opt.timings) r.timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    const bool verify = command == Command::Verify || command == Command::Report;
    const bool scan = command == Command::Scan || command == Command::Image || command == Command::Report;
    const bool image = command == Command::Image || command == Command::Report;
    if (command == Command::Image && opt.resolution < 16) {
      throw Error(ErrorKind::InvalidArgument, "image resolution must be at least 16");
    }
    if (command == Command::Fibers && opt.fibers.empty()) {
      throw Error(ErrorKind::InvalidArgument, "fibers needs at least one (c, s) target");
    }
    if (verify) timed("verify", [&] { verify_stage(sys, opt, r); });
    if (command == Command::Verify && opt.expect_nondegenerate) {
      timed("classify", [&] { nondegenerate_stage(sys, r); });
    }
    AtlasResult atlas;
    if (scan) timed("scan", [&] { atlas = scan_stage(sys, r); });
    if (command == Command::Report && opt.expect_nondegenerate) {
      int degenerate = 0;
      for (const auto& p : r.points) degenerate += p.verdict.rfind("DEGENERATE", 0) == 0;
      add_check(r, "nondegenerate", degenerate, 0.5, std::to_string(degenerate) + " degenerate singular points");
    }
    if (image) timed("image", [&] { image_stage(sys, opt, atlas, r); });
    if (!opt.fibers.empty() && (command == Command::Fibers || command == Command::Report)) {
      timed("fibers", [&] { fiber_stage(sys, opt, r); });
    }
  } catch (const Error& e) {
    r.error = stage + ": " + error_kind_name(e.kind()) + ": " + e.what();
    r.exit_code = 2;
    return r;
  } catch (const std::exception& e) {
    r.error = stage + ": internal: " + e.what();
    r.exit_code = 2;
    return r;
  }
  r.exit_code = std::all_of(r.checks.begin(), r.checks.end(), [](const CheckRecord& c) { return c.passed; }) ? 0 : 1;
  return r;
}

// ---- JSON -----------------------------------------------------------------

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double get_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  throw Error(ErrorKind::Parse, "expected a number, got '" + s + "'");
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> get_nums(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(get_num(x));
  return v;
}

json pairs(const std::vector<std::array<double, 2>>& v) {
  json a = json::array();
  for (const auto& p : v) a.push_back(json::array({num(p[0]), num(p[1])}));
  return a;
}

std::vector<std::array<double, 2>> get_pairs(const json& j) {
  std::vector<std::array<double, 2>> v;
  for (const auto& p : j) v.push_back({get_num(p.at(0)), get_num(p.at(1))});
  return v;
}

json point_json(const PointRecord& p) {
  return {{"rank", p.rank},
          {"x", nums(p.x)},
          {"verdict", p.verdict},
          {"triple", p.triple},
          {"mu", nums(p.mu)},
          {"eigenvalues", pairs(p.eigenvalues)},
          {"hess_f_eigenvalues", nums(p.hess_f_eigenvalues)},
          {"singular_dimension", p.singular_dimension},
          {"oracle", p.oracle},
          {"f", num(p.f)},
          {"S", num(p.S)}};
}

PointRecord point_from(const json& j) {
  PointRecord p;
  p.rank = j.at("rank").get<int>();
  p.x = get_nums(j.at("x"));
  p.verdict = j.at("verdict").get<std::string>();
  p.triple = j.at("triple").get<std::string>();
  p.mu = get_nums(j.at("mu"));
  p.eigenvalues = get_pairs(j.at("eigenvalues"));
  p.hess_f_eigenvalues = get_nums(j.at("hess_f_eigenvalues"));
  p.singular_dimension = j.at("singular_dimension").get<int>();
  p.oracle = j.at("oracle").get<std::string>();
  p.f = get_num(j.at("f"));
  p.S = get_num(j.at("S"));
  return p;
}

json branch_json(const BranchSummary& b) {
  json g = json::object();
  for (const auto& [k, v] : b.geometry) g[k] = num(v);
  return {{"family", b.family},
          {"seed", nums(b.seed)},
          {"backward", b.backward},
          {"forward", b.forward},
          {"backward_rank0", b.backward_rank0},
          {"forward_rank0", b.forward_rank0},
          {"max_wedge", num(b.max_wedge)},
          {"membership_preserved", b.membership_preserved},
          {"image", pairs(b.image)},
          {"geometry", g}};
}

BranchSummary branch_from(const json& j) {
  BranchSummary b;
  b.family = j.at("family").get<std::string>();
  b.seed = get_nums(j.at("seed"));
  b.backward = j.at("backward").get<std::string>();
  b.forward = j.at("forward").get<std::string>();
  b.backward_rank0 = j.at("backward_rank0").get<int>();
  b.forward_rank0 = j.at("forward_rank0").get<int>();
  b.max_wedge = get_num(j.at("max_wedge"));
  b.membership_preserved = j.at("membership_preserved").get<bool>();
  b.image = get_pairs(j.at("image"));
  for (const auto& [k, v] : j.at("geometry").items()) b.geometry[k] = get_num(v);
  return b;
}

json optional_nums(const std::vector<std::optional<double>>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(x ? num(*x) : json(nullptr));
  return a;
}

std::vector<std::optional<double>> get_optional_nums(const json& j) {
  std::vector<std::optional<double>> v;
  for (const auto& x : j) v.push_back(x.is_null() ? std::nullopt : std::optional<double>(get_num(x)));
  return v;
}

json image_json(const ImageRecord& im) {
  json curves = json::array();
  for (const auto& c : im.curves) {
    curves.push_back({{"family", c.family},
                      {"degenerate", c.degenerate},
                      {"placement", c.placement},
                      {"hyperbolic_evidence", c.hyperbolic_evidence},
                      {"points", pairs(c.points)}});
  }
  return {{"resolution", im.resolution},
          {"f", nums(im.f)},
          {"lower", optional_nums(im.lower)},
          {"upper", optional_nums(im.upper)},
          {"f_min", num(im.f_min)},
          {"f_max", num(im.f_max)},
          {"max_jump", num(im.max_jump)},
          {"jumps", im.jumps},
          {"curves", curves},
          {"rank0", pairs(im.rank0)},
          {"rank0_in_band", im.rank0_in_band}};
}

ImageRecord image_from(const json& j) {
  ImageRecord im;
  im.resolution = j.at("resolution").get<int>();
  im.f = get_nums(j.at("f"));
  im.lower = get_optional_nums(j.at("lower"));
  im.upper = get_optional_nums(j.at("upper"));
  im.f_min = get_num(j.at("f_min"));
  im.f_max = get_num(j.at("f_max"));
  im.max_jump = get_num(j.at("max_jump"));
  im.jumps = j.at("jumps").get<std::vector<int>>();
  for (const auto& c : j.at("curves")) {
    im.curves.push_back({c.at("family").get<std::string>(), c.at("degenerate").get<bool>(),
                         c.at("placement").get<std::string>(), c.at("hyperbolic_evidence").get<bool>(),
                         get_pairs(c.at("points"))});
  }
  im.rank0 = get_pairs(j.at("rank0"));
  im.rank0_in_band = j.at("rank0_in_band").get<std::vector<bool>>();
  return im;
}

}  // namespace

std::string to_json(const RunReport& r, bool include_timings) {
  json j;
  j["version"] = r.version;
  j["command"] = r.command;
  j["system"] = r.system;
  j["spec_digest"] = r.spec_digest;
  j["seed"] = r.seed;
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"value", num(c.value)}, {"tolerance", num(c.tolerance)},
                      {"passed", c.passed}, {"note", c.note}});
  }
  j["checks"] = checks;
  json points = json::array();
  for (const auto& p : r.points) points.push_back(point_json(p));
  j["singular_points"] = points;
  json branches = json::array();
  for (const auto& b : r.branches) branches.push_back(branch_json(b));
  j["branches"] = branches;
  json counts = json::array();
  for (const auto& c : r.counts) {
    counts.push_back({{"rank0", c.rank0}, {"count", c.count}, {"degenerate_point", c.degenerate_point},
                      {"violation", c.violation}, {"dependent_case", c.dependent_case},
                      {"rayleigh_residuals", nums(c.rayleigh_residuals)}});
  }
  j["branch_counts"] = counts;
  if (r.morse) {
    j["morse"] = {{"morse", r.morse->morse}, {"dependent_caveat", r.morse->dependent_caveat},
                  {"index", r.morse->index}, {"even", r.morse->even}, {"isolated", r.morse->isolated}};
  } else {
    j["morse"] = nullptr;
  }
  j["image"] = r.image ? image_json(*r.image) : json(nullptr);
  json fibers = json::array();
  for (const auto& f : r.fibers) {
    json reps = json::array();
    for (const auto& p : f.representatives) reps.push_back(nums(p));
    fibers.push_back({{"c", num(f.c)}, {"s", num(f.s)}, {"count", f.count}, {"grids", f.grids},
                      {"components", f.components}, {"representatives", reps},
                      {"solve_tolerance", num(f.solve_tolerance)}, {"stable", f.stable},
                      {"closed_form", f.closed_form}});
  }
  j["fibers"] = fibers;
  j["findings"] = r.findings;
  if (include_timings) {
    json t = json::object();
    for (const auto& [k, v] : r.timings) t[k] = num(v);
    j["timings"] = t;
  }
  j["error"] = r.error;
  j["exit_code"] = r.exit_code;
  return j.dump(2) + "\n";
}

RunReport from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunReport r;
    r.version = j.at("version").get<std::string>();
    r.command = j.at("command").get<std::string>();
    r.system = j.at("system").get<std::string>();
    r.spec_digest = j.at("spec_digest").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& c : j.at("checks")) {
      r.checks.push_back({c.at("name").get<std::string>(), get_num(c.at("value")), get_num(c.at("tolerance")),
                          c.at("passed").get<bool>(), c.at("note").get<std::string>()});
    }
    for (const auto& p : j.at("singular_points")) r.points.push_back(point_from(p));
    for (const auto& b : j.at("branches")) r.branches.push_back(branch_from(b));
    for (const auto& c : j.at("branch_counts")) {
      r.counts.push_back({c.at("rank0").get<int>(), c.at("count").get<int>(), c.at("degenerate_point").get<bool>(),
                          c.at("violation").get<bool>(), c.at("dependent_case").get<bool>(),
                          get_nums(c.at("rayleigh_residuals"))});
    }
    if (!j.at("morse").is_null()) {
      const json& m = j.at("morse");
      r.morse = MorseRecord{m.at("morse").get<bool>(), m.at("dependent_caveat").get<bool>(),
                            m.at("index").get<std::vector<int>>(), m.at("even").get<std::vector<bool>>(),
                            m.at("isolated").get<std::vector<bool>>()};
    }
    if (!j.at("image").is_null()) r.image = image_from(j.at("image"));
    for (const auto& f : j.at("fibers")) {
      FiberRecord q;
      q.c = get_num(f.at("c"));
      q.s = get_num(f.at("s"));
      q.count = f.at("count").get<int>();
      q.grids = f.at("grids").get<std::vector<int>>();
      q.components = f.at("components").get<std::vector<int>>();
      for (const auto& p : f.at("representatives")) q.representatives.push_back(get_nums(p));
      q.solve_tolerance = get_num(f.at("solve_tolerance"));
      q.stable = f.at("stable").get<bool>();
      q.closed_form = f.at("closed_form").get<bool>();
      r.fibers.push_back(std::move(q));
    }
    r.findings = j.at("findings").get<std::vector<std::string>>();
    if (j.contains("timings")) {
      for (const auto& [k, v] : j.at("timings").items()) r.timings[k] = get_num(v);
    }
    r.error = j.at("error").get<std::string>();
    r.exit_code = j.at("exit_code").get<int>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed report JSON: ") + e.what());
  }
}

// ---- CSV / SVG --------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

const char* verdict_color(const std::string& family) {
  if (family.rfind("DEGENERATE", 0) == 0) return "#c0392b";
  if (family == "elliptic") return "#1f77b4";
  if (family == "hyperbolic") return "#2ca02c";
  return "#7f7f7f";
}

}  // namespace

std::string image_csv(const RunReport& r) {
  std::ostringstream out;
  out << "f,S_lower,S_upper,valid\n";
  if (!r.image) return out.str();
  const ImageRecord& im = *r.image;
  for (std::size_t k = 0; k < im.f.size(); ++k) {
    const bool valid = im.lower[k].has_value() && im.upper[k].has_value();
    out << fmt(im.f[k]) << "," << (valid ? fmt(*im.lower[k]) : "") << "," << (valid ? fmt(*im.upper[k]) : "")
        << "," << (valid ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string eigen_csv(const RunReport& r) {
  std::ostringstream out;
  out << "point,rank,verdict,eigen_index,re,im\n";
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const PointRecord& p = r.points[i];
    for (std::size_t k = 0; k < p.eigenvalues.size(); ++k) {
      out << i << "," << p.rank << "," << csv_field(p.verdict) << "," << k << "," << fmt(p.eigenvalues[k][0])
          << "," << fmt(p.eigenvalues[k][1]) << "\n";
    }
  }
  return out.str();
}

std::string image_svg(const RunReport& r) {
  const double W = 640, H = 480, pad = 40;
  double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
  double smin = fmin, smax = -fmin;
  auto extend = [&](double f, double s) {
    if (!std::isfinite(f) || !std::isfinite(s)) return;
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
    smin = std::min(smin, s);
    smax = std::max(smax, s);
  };
  std::vector<CurveRecord> curves;
  std::vector<std::array<double, 2>> rank0;
  if (r.image) {
    const ImageRecord& im = *r.image;
    for (std::size_t k = 0; k < im.f.size(); ++k) {
      if (im.lower[k]) extend(im.f[k], *im.lower[k]);
      if (im.upper[k]) extend(im.f[k], *im.upper[k]);
    }
    curves = im.curves;
    rank0 = im.rank0;
  } else {
    for (const auto& b : r.branches)
      if (b.membership_preserved) curves.push_back({b.family, false, "", false, b.image});
    for (const auto& p : r.points)
      if (p.rank == 0) rank0.push_back({p.f, p.S});
  }
  for (const auto& c : curves)
    for (const auto& p : c.points) extend(p[0], p[1]);
  for (const auto& p : rank0) extend(p[0], p[1]);
  if (!std::isfinite(fmin)) fmin = 0.0, fmax = 1.0, smin = 0.0, smax = 1.0;
  if (fmax - fmin < 1e-12) fmin -= 0.5, fmax += 0.5;
  if (smax - smin < 1e-12) smin -= 0.5, smax += 0.5;
  auto X = [&](double f) { return pad + (f - fmin) / (fmax - fmin) * (W - 2 * pad); };
  auto Y = [&](double s) { return H - pad - (s - smin) / (smax - smin) * (H - 2 * pad); };
  auto pt = [&](double f, double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f,%.3f", X(f), Y(s));
    return std::string(buf);
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
      << W << " " << H << "\">\n";
  out << "<title>" << xml_escape(r.system) << " moment image</title>\n";
  out << "<rect class=\"frame\" x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\""
      << H - 2 * pad << "\" fill=\"none\" stroke=\"#444\"/>\n";
  if (r.image) {
    const ImageRecord& im = *r.image;
    std::string upper, lower;
    for (std::size_t k = 0; k < im.f.size(); ++k) {
      if (im.upper[k]) upper += pt(im.f[k], *im.upper[k]) + " ";
    }
    for (std::size_t k = im.f.size(); k-- > 0;) {
      if (im.lower[k]) lower += pt(im.f[k], *im.lower[k]) + " ";
    }
    out << "<polygon class=\"band\" points=\"" << upper << lower << "\" fill=\"#dde8f5\" stroke=\"#6b8bb5\"/>\n";
  }
  for (const auto& c : curves) {
    out << "<polyline class=\"branch\" data-family=\"" << xml_escape(c.family) << "\"";
    if (!c.placement.empty()) out << " data-placement=\"" << c.placement << "\"";
    out << " fill=\"none\" stroke=\"" << verdict_color(c.family) << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : c.points) out << pt(p[0], p[1]) << " ";
    out << "\"/>\n";
  }
  for (const auto& p : rank0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "<circle class=\"rank0\" cx=\"%.3f\" cy=\"%.3f\" r=\"5\" fill=\"#000\"/>\n",
                  X(p[0]), Y(p[1]));
    out << buf;
  }
  char axis[200];
  std::snprintf(axis, sizeof axis,
                "<text x=\"%g\" y=\"%g\" font-size=\"12\">f in [%.4g, %.4g], S in [%.4g, %.4g]</text>\n", pad,
                H - 10, fmin, fmax, smin, smax);
  out << axis << "</svg>\n";
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace kgrs
