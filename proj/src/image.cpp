#include "kgrs/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "kgrs/error.hpp"

namespace kgrs {

namespace {

const Expr* closed_second(const SolitonSystem& sys) {
  if (const Expr* e = sys.explicit_second()) return e;
  if (sys.aux_S) return &*sys.aux_S;
  return nullptr;
}

struct LevelContext {
  const SolitonSystem& sys;
  const Expr* second;
  double c;
  int n;

  double S(std::span<const double> p) const {
    if (second) return eval(*second, p);
    return compute_geometry(sys, p, Depth::Curvature).scal;
  }

  Eigen::VectorXd dS(std::span<const double> p) const {
    Eigen::VectorXd g(n);
    if (second) {
      const Jet j = eval_jet(*second, p, 1);
      for (int i = 0; i < n; ++i) g[i] = j.partial(i);
    } else {
      const PointGeometry geo = compute_geometry(sys, p, Depth::Full);
      for (int i = 0; i < n; ++i) g[i] = geo.dS[i];
    }
    return g;
  }

  // Coordinates pinned at a face of the box.
  std::vector<bool> pinned(std::span<const double> p) const {
    std::vector<bool> m(static_cast<std::size_t>(n), false);
    const double eps = 1e-12 * std::max(1.0, sys.domain.scale());
    for (int i = 0; i < n; ++i)
      m[i] = p[i] <= sys.domain.lo[i] + eps || p[i] >= sys.domain.hi[i] - eps;
    return m;
  }

  // Newton projection onto {f = c} along the coordinate gradient, moving only
  // coordinates not listed in `fixed`.
  bool project(std::vector<double>& p, const std::vector<bool>* fixed = nullptr) const {
    const double scale = sys.domain.scale();
    for (int it = 0; it < 40; ++it) {
      const Jet j = eval_jet(sys.f, p, 1);
      const double r = j.value() - c;
      if (!std::isfinite(r)) return false;
      if (std::fabs(r) < 1e-12 * std::max(1.0, std::fabs(c))) return sys.domain.contains(p);
      double g2 = 0.0;
      for (int i = 0; i < n; ++i)
        if (!fixed || !(*fixed)[i]) g2 += j.partial(i) * j.partial(i);
      if (!(g2 > 0.0)) return false;
      const double step = std::fabs(r) / std::sqrt(g2);
      const double shrink = step > 0.5 * scale ? 0.5 * scale / step : 1.0;
      for (int i = 0; i < n; ++i)
        if (!fixed || !(*fixed)[i]) p[i] -= shrink * r * j.partial(i) / g2;
      if (!sys.domain.contains(p, -0.5 * scale)) return false;
    }
    return false;
  }

  // Ascent direction for sign * S tangent to the level, with coordinates
  // pushing out of the box held fixed.
  Eigen::VectorXd direction(std::span<const double> p, double sign, std::vector<bool>& fixed) const {
    const Jet fj = eval_jet(sys.f, p, 1);
    const Eigen::VectorXd gs = sign * dS(p);
    Eigen::VectorXd d(n);
    for (int pass = 0; pass <= n; ++pass) {
      Eigen::VectorXd nf = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i)
        if (!fixed[i]) nf[i] = fj.partial(i);
      d = gs;
      for (int i = 0; i < n; ++i)
        if (fixed[i]) d[i] = 0.0;
      if (nf.norm() > 0.0) {
        nf /= nf.norm();
        d -= d.dot(nf) * nf;
      }
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        if (fixed[i]) continue;
        const bool at_lo = p[i] <= sys.domain.lo[i] + 1e-12 * std::max(1.0, sys.domain.scale());
        const bool at_hi = p[i] >= sys.domain.hi[i] - 1e-12 * std::max(1.0, sys.domain.scale());
        if ((at_lo && d[i] < 0.0) || (at_hi && d[i] > 0.0)) {
          fixed[i] = true;
          changed = true;
        }
      }
      if (!changed) break;
    }
    return d;
  }

  // Lagrange-Newton on the free coordinates: dS - mu df = 0, f = c.
  void polish(std::vector<double>& p, double sign, double& cur) const {
    const std::vector<bool> fixed = pinned(p);
    std::vector<int> free;
    for (int i = 0; i < n; ++i)
      if (!fixed[i]) free.push_back(i);
    const int m = static_cast<int>(free.size());
    if (m == 0) return;
    std::vector<double> x(p);
    const Jet f0 = eval_jet(sys.f, x, 1);
    const Jet s0 = eval_jet(*second, x, 1);
    double gff = 0.0, gsf = 0.0;
    for (int i : free) {
      gff += f0.partial(i) * f0.partial(i);
      gsf += s0.partial(i) * f0.partial(i);
    }
    double mu = gff > 0.0 ? gsf / gff : 0.0;
    for (int it = 0; it < 25; ++it) {
      const Jet fj = eval_jet(sys.f, x, 2);
      const Jet sj = eval_jet(*second, x, 2);
      Eigen::VectorXd F(m + 1);
      Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(m + 1, m + 1);
      for (int a = 0; a < m; ++a) {
        const int i = free[a];
        F[a] = sj.partial(i) - mu * fj.partial(i);
        for (int b = 0; b < m; ++b)
          Jm(a, b) = sj.second_partial(i, free[b]) - mu * fj.second_partial(i, free[b]);
        Jm(a, m) = -fj.partial(i);
        Jm(m, a) = fj.partial(i);
      }
      F[m] = fj.value() - c;
      if (F.norm() < 1e-14) break;
      const Eigen::VectorXd dx = -Jm.completeOrthogonalDecomposition().solve(F);
      if (!dx.allFinite()) break;
      for (int a = 0; a < m; ++a) x[free[a]] += dx[a];
      mu += dx[m];
      if (dx.norm() < 1e-15) break;
    }
    if (!sys.domain.contains(x)) return;
    const double fv = eval(sys.f, x);
    const double v = S(x);
    if (std::fabs(fv - c) < 1e-10 * std::max(1.0, std::fabs(c)) && sign * (v - cur) > -1e-9) {
      p = x;
      cur = v;
    }
  }

  // Box-aware projected gradient steps followed by a Lagrange-Newton polish.
  double refine(std::vector<double>& p, double sign, int steps) const {
    double cur = S(p);
    double t = 0.05 * sys.domain.scale();
    for (int k = 0; k < steps; ++k) {
      std::vector<bool> fixed = pinned(p);
      Eigen::VectorXd d = direction(p, sign, fixed);
      const double dn = d.norm();
      if (dn < 1e-14) break;
      d /= dn;
      bool moved = false;
      for (int h = 0; h < 30 && !moved; ++h) {
        std::vector<double> q(p);
        for (int i = 0; i < n; ++i)
          q[i] = std::clamp(q[i] + t * d[i], sys.domain.lo[i], sys.domain.hi[i]);
        const std::vector<bool> hold = pinned(q);
        if (project(q, &hold)) {
          const double v = S(q);
          if (sign * (v - cur) > 0.0) {
            p = q;
            cur = v;
            moved = true;
            t *= 2.0;
            break;
          }
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    if (second) polish(p, sign, cur);
    return cur;
  }
};

// Box-projected gradient steps on f with backtracking.
double polish_f(const SolitonSystem& sys, std::vector<double> x, double sign) {
  const int n = sys.dim;
  auto clip = [&](std::vector<double>& p) {
    for (int i = 0; i < n; ++i) p[i] = std::clamp(p[i], sys.domain.lo[i], sys.domain.hi[i]);
  };
  double cur = eval(sys.f, x);
  double t = 0.1 * sys.domain.scale();
  for (int it = 0; it < 200; ++it) {
    const Jet j = eval_jet(sys.f, x, 1);
    double gn = 0.0;
    for (int i = 0; i < n; ++i) gn += j.partial(i) * j.partial(i);
    gn = std::sqrt(gn);
    if (!(gn > 1e-15)) break;
    bool moved = false;
    for (int h = 0; h < 40; ++h) {
      std::vector<double> q(x);
      for (int i = 0; i < n; ++i) q[i] += sign * t * j.partial(i) / gn;
      clip(q);
      const double v = eval(sys.f, q);
      if (std::isfinite(v) && sign * (v - cur) > 0.0) {
        x = q;
        cur = v;
        moved = true;
        t *= 2.0;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return cur;
}

bool near_boundary(const Box& box, std::span<const double> x) {
  return !box.contains(x, 1e-6 * std::max(1.0, box.scale()));
}

}  // namespace

LevelExtrema level_extrema(const SolitonSystem& sys, double c, const LevelOptions& opt) {
  const LevelContext ctx{sys, closed_second(sys), c, sys.dim};
  std::vector<std::pair<double, std::vector<double>>> pts;
  for (auto p : halton_samples(sys.domain, opt.samples, opt.seed, 0.0)) {
    if (!ctx.project(p)) continue;
    pts.emplace_back(ctx.S(p), std::move(p));
  }
  if (pts.empty()) {
    throw Error(ErrorKind::EmptyLevel, "no sample reaches the level f = " + std::to_string(c));
  }
  LevelExtrema r;
  r.c = c;
  r.level_points = static_cast<int>(pts.size());
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const int k = std::min<int>(opt.candidates, static_cast<int>(pts.size()));
  r.S_min = std::numeric_limits<double>::infinity();
  r.S_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    std::vector<double> lo = pts[static_cast<std::size_t>(i)].second;
    const double vlo = ctx.refine(lo, -1.0, opt.ascent_steps);
    if (vlo < r.S_min) {
      r.S_min = vlo;
      r.argmin = lo;
    }
    std::vector<double> hi = pts[pts.size() - 1 - static_cast<std::size_t>(i)].second;
    const double vhi = ctx.refine(hi, 1.0, opt.ascent_steps);
    if (vhi > r.S_max) {
      r.S_max = vhi;
      r.argmax = hi;
    }
  }
  r.min_on_boundary = near_boundary(sys.domain, r.argmin);
  r.max_on_boundary = near_boundary(sys.domain, r.argmax);
  return r;
}

ImageBoundary image_boundary(const SolitonSystem& sys, int resolution, const LevelOptions& opt) {
  if (resolution < 2) throw Error(ErrorKind::InvalidArgument, "image resolution must be at least 2");
  ImageBoundary b;
  b.f_min = std::numeric_limits<double>::infinity();
  b.f_max = -std::numeric_limits<double>::infinity();
  const CompiledExpr fc(sys.f);
  std::vector<double> lo_arg, hi_arg;
  for (const auto& p : halton_samples(sys.domain, 4096, opt.seed, 0.0)) {
    const double v = fc(p);
    if (!std::isfinite(v)) continue;
    if (v < b.f_min) {
      b.f_min = v;
      lo_arg = p;
    }
    if (v > b.f_max) {
      b.f_max = v;
      hi_arg = p;
    }
  }
  if (lo_arg.empty()) throw Error(ErrorKind::EmptyLevel, "f is undefined on the domain samples");
  b.f_min = std::min(b.f_min, polish_f(sys, lo_arg, -1.0));
  b.f_max = std::max(b.f_max, polish_f(sys, hi_arg, 1.0));
  for (int k = 0; k < resolution; ++k) {
    const double c = b.f_min + (k + 0.5) * (b.f_max - b.f_min) / resolution;
    b.f.push_back(c);
    try {
      const LevelExtrema e = level_extrema(sys, c, opt);
      b.lower.push_back(e.S_min);
      b.upper.push_back(e.S_max);
      b.valid.push_back(true);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyLevel) throw;
      b.lower.push_back(std::nan(""));
      b.upper.push_back(std::nan(""));
      b.valid.push_back(false);
    }
  }
  // A step much larger than the typical one hints at a missed component.
  std::vector<double> steps;
  for (int k = 0; k + 1 < resolution; ++k) {
    if (!b.valid[k] || !b.valid[k + 1]) continue;
    steps.push_back(std::max(std::fabs(b.upper[k + 1] - b.upper[k]), std::fabs(b.lower[k + 1] - b.lower[k])));
    b.max_jump = std::max(b.max_jump, steps.back());
  }
  if (!steps.empty()) {
    std::vector<double> sorted(steps);
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (int k = 0; k + 1 < resolution; ++k) {
      if (!b.valid[k] || !b.valid[k + 1]) continue;
      const double d = std::max(std::fabs(b.upper[k + 1] - b.upper[k]), std::fabs(b.lower[k + 1] - b.lower[k]));
      if (d > 20.0 * std::max(median, 1e-12) && d > 1e-6) b.jumps.push_back(k);
    }
  }
  return b;
}

namespace {

double interp_S(const ValueCurve& c, double f, bool& inside) {
  inside = false;
  const auto& p = c.points;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    if ((f - p[k][0]) * (f - p[k + 1][0]) > 0.0) continue;
    inside = true;
    const double t = p[k + 1][0] == p[k][0] ? 0.0 : (f - p[k][0]) / (p[k + 1][0] - p[k][0]);
    return p[k][1] + t * (p[k + 1][1] - p[k][1]);
  }
  return 0.0;
}

// Curves whose images coincide over their common f-range describe one family.
bool same_image(const ValueCurve& a, const ValueCurve& b) {
  int overlap = 0;
  for (const auto& q : b.points) {
    bool inside = false;
    const double s = interp_S(a, q[0], inside);
    if (!inside) continue;
    ++overlap;
    if (std::fabs(s - q[1]) > 1e-3 * std::max(1.0, std::fabs(q[1]))) return false;
  }
  return overlap > 0;
}

}  // namespace

CriticalValues critical_value_curves(const SolitonSystem& sys, const AtlasResult& atlas) {
  CriticalValues cv;
  for (const auto& b : atlas.branches) {
    if (!b.membership_preserved) continue;
    ValueCurve c;
    c.family = b.family;
    for (const auto& p : b.points) c.points.push_back({p.f, p.S});
    std::sort(c.points.begin(), c.points.end());
    bool merged = false;
    for (auto& e : cv.curves) {
      if (e.degenerate || !same_image(e, c)) continue;
      e.points.insert(e.points.end(), c.points.begin(), c.points.end());
      std::sort(e.points.begin(), e.points.end());
      merged = true;
      break;
    }
    if (!merged) cv.curves.push_back(std::move(c));
  }
  for (const auto& fam : atlas.degenerate_families) {
    ValueCurve c;
    c.family = "DEGENERATE(excess-dimension)";
    c.degenerate = true;
    c.points = fam;
    cv.curves.push_back(std::move(c));
  }
  const Expr* second = closed_second(sys);
  for (const auto& r : atlas.rank0) {
    const double f = eval(sys.f, r.x);
    const double S = second && sys.explicit_second() ? eval(*second, r.x)
                                                     : compute_geometry(sys, r.x, Depth::Curvature).scal;
    cv.rank0.push_back({f, S});
  }
  return cv;
}

void label_curves(const SolitonSystem& sys, CriticalValues& cv, int probes, double tol,
                  const LevelOptions& opt) {
  for (auto& curve : cv.curves) {
    int on = 0, off = 0;
    curve.boundary_distance = 0.0;
    const std::size_t m = curve.points.size();
    if (m == 0) continue;
    const int k = std::min<int>(probes, static_cast<int>(m));
    for (int i = 0; i < k; ++i) {
      // Interior samples only: the ends touch rank-0 points or the box.
      const std::size_t idx = static_cast<std::size_t>((i + 1.0) * (m - 1.0) / (k + 1.0));
      const auto& p = curve.points[idx];
      try {
        const LevelExtrema e = level_extrema(sys, p[0], opt);
        const double d = std::min(std::fabs(p[1] - e.S_min), std::fabs(p[1] - e.S_max));
        curve.boundary_distance = std::max(curve.boundary_distance, d);
        if (d < tol * std::max(1.0, std::fabs(p[1]))) ++on;
        else ++off;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyLevel) throw;
      }
    }
    curve.placement = off == 0 ? "boundary" : on == 0 ? "interior" : "mixed";
    curve.hyperbolic_evidence = curve.placement == "interior" && !curve.degenerate;
  }
  cv.rank0_in_band.clear();
  for (const auto& p : cv.rank0) {
    bool inside = false;
    try {
      const LevelExtrema e = level_extrema(sys, p[0], opt);
      const double t = tol * std::max(1.0, std::fabs(p[1]));
      inside = p[1] >= e.S_min - t && p[1] <= e.S_max + t;
    } catch (const Error&) {
      inside = false;
    }
    cv.rank0_in_band.push_back(inside);
  }
}

namespace {

// Disjoint-set forest with path halving.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

using Key = std::uint64_t;

Key pack(const std::array<int, 4>& idx) {
  Key k = 0;
  for (int i = 0; i < 4; ++i) k = (k << 16) | static_cast<Key>(idx[i] & 0xffff);
  return k;
}

std::array<int, 4> unpack(Key k) {
  std::array<int, 4> idx{};
  for (int i = 3; i >= 0; --i) {
    idx[i] = static_cast<int>(k & 0xffff);
    k >>= 16;
  }
  return idx;
}

struct FiberContext {
  const SolitonSystem& sys;
  const Expr* second;
  CompiledExpr fc, sc;
  double c, s;
  int n;

  std::array<double, 2> value(std::span<const double> p) const {
    const double f = fc(p);
    const double S = second ? sc(p) : compute_geometry(sys, p, Depth::Curvature).scal;
    return {f, S};
  }

  std::vector<double> point(const std::array<int, 4>& idx, int G, double offset) const {
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) {
      const double w = (sys.domain.hi[i] - sys.domain.lo[i]) / G;
      p[i] = sys.domain.lo[i] + (idx[i] + offset) * w;
    }
    return p;
  }

  // Minimum-norm Gauss-Newton on (f - c, S - s) from the cell center; true
  // when the solution lies in the cell widened by half a cell per side.
  bool solve_near(const std::array<int, 4>& idx, int G, double tol, std::vector<double>& out) const {
    std::vector<double> x = point(idx, G, 0.5);
    try {
      for (int it = 0; it < 12; ++it) {
        const Jet fj = eval_jet(sys.f, x, 1);
        const Jet sj = eval_jet(*second, x, 1);
        Eigen::Vector2d F(fj.value() - c, sj.value() - s);
        if (!F.allFinite()) return false;
        if (F.norm() < tol) break;
        Eigen::MatrixXd Jm(2, n);
        for (int i = 0; i < n; ++i) {
          Jm(0, i) = fj.partial(i);
          Jm(1, i) = sj.partial(i);
        }
        const Eigen::VectorXd dx = -Jm.completeOrthogonalDecomposition().solve(F);
        if (!dx.allFinite()) return false;
        for (int i = 0; i < n; ++i) x[i] += dx[i];
      }
      if (std::fabs(eval(sys.f, x) - c) >= tol || std::fabs(eval(*second, x) - s) >= tol) return false;
    } catch (const Error&) {
      return false;
    }
    for (int i = 0; i < n; ++i) {
      const double w = (sys.domain.hi[i] - sys.domain.lo[i]) / G;
      const double lo = sys.domain.lo[i] + (idx[i] - 0.5) * w;
      if (x[i] < lo || x[i] > lo + 2.0 * w) return false;
    }
    if (!sys.domain.contains(x)) return false;
    out = std::move(x);
    return true;
  }

  // Second-order Taylor bound around the cell center, doubled for safety.
  bool may_contain(const std::array<int, 4>& idx, int G) const {
    const std::vector<double> ctr = point(idx, G, 0.5);
    std::vector<double> hw(n);
    for (int i = 0; i < n; ++i) hw[i] = 0.5 * (sys.domain.hi[i] - sys.domain.lo[i]) / G;
    auto within = [&](const Expr& e, double target) {
      const Jet j = eval_jet(e, ctr, 2);
      double bound = 0.0;
      for (int i = 0; i < n; ++i) {
        bound += std::fabs(j.partial(i)) * hw[i];
        for (int k = 0; k < n; ++k) bound += 0.5 * std::fabs(j.second_partial(i, k)) * hw[i] * hw[k];
      }
      if (!std::isfinite(j.value()) || !std::isfinite(bound)) return true;
      return std::fabs(j.value() - target) <= 2.0 * bound + 1e-12 * std::max(1.0, std::fabs(target));
    };
    try {
      if (!within(sys.f, c)) return false;
      if (second) return within(*second, s);
    } catch (const Error&) {
      return true;
    }
    return true;
  }
};

// Components under vertex adjacency; returns the first cell index of each.
std::vector<int> component_roots(const std::vector<Key>& cells, int n) {
  std::unordered_map<Key, int> index;
  index.reserve(cells.size() * 2);
  for (std::size_t i = 0; i < cells.size(); ++i) index.emplace(cells[i], static_cast<int>(i));
  UnionFind uf(static_cast<int>(cells.size()));
  int total = 1;
  for (int a = 0; a < n; ++a) total *= 3;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto idx = unpack(cells[i]);
    for (int o = 0; o < total; ++o) {
      auto nb = idx;
      int t = o;
      for (int a = 0; a < n; ++a) {
        nb[a] += t % 3 - 1;
        t /= 3;
      }
      if (nb == idx) continue;
      const auto it = index.find(pack(nb));
      if (it != index.end()) uf.unite(static_cast<int>(i), it->second);
    }
  }
  std::vector<int> roots;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (uf.find(static_cast<int>(i)) == static_cast<int>(i)) roots.push_back(static_cast<int>(i));
  return roots;
}

}  // namespace

FiberResult fiber_components(const SolitonSystem& sys, double c, double s, const FiberOptions& opt) {
  const int n = sys.dim;
  const Expr* second = closed_second(sys);
  FiberContext ctx{sys, second, CompiledExpr(sys.f), second ? CompiledExpr(*second) : CompiledExpr(), c, s, n};
  FiberResult r;
  r.c = c;
  r.s = s;
  r.closed_form = second != nullptr;
  std::vector<int> grids = opt.grids;
  // Without a closed form every node costs a curvature evaluation.
  if (!second) grids = {16, 32};
  std::sort(grids.begin(), grids.end());
  if (grids.empty() || grids.front() < 1) throw Error(ErrorKind::InvalidArgument, "fiber grid must be positive");
  r.grids = grids;
  int G = std::min(opt.coarse, grids.front());
  std::vector<Key> cand;
  {
    std::array<int, 4> idx{};
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(G);
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t rem = t;
      for (int i = n - 1; i >= 0; --i) {
        idx[i] = static_cast<int>(rem % G);
        rem /= G;
      }
      cand.push_back(pack(idx));
    }
  }
  std::size_t gi = 0;
  while (gi < grids.size()) {
    std::vector<Key> kept;
    for (Key k : cand) {
      if (!second || ctx.may_contain(unpack(k), G)) kept.push_back(k);
    }
    if (G == grids[gi]) {
      std::unordered_map<Key, std::array<double, 2>> nodes;
      std::vector<Key> marked;
      for (Key k : kept) {
        const auto idx = unpack(k);
        double fl = std::numeric_limits<double>::infinity(), fh = -fl, sl = fl, sh = -fl;
        bool ok = true;
        for (int corner = 0; corner < (1 << n); ++corner) {
          auto ni = idx;
          for (int a = 0; a < n; ++a) ni[a] += (corner >> a) & 1;
          const Key nk = pack(ni);
          auto it = nodes.find(nk);
          if (it == nodes.end()) {
            std::array<double, 2> v{std::nan(""), std::nan("")};
            try {
              v = ctx.value(ctx.point(ni, G, 0.0));
            } catch (const Error&) {
            }
            it = nodes.emplace(nk, v).first;
          }
          const auto& v = it->second;
          if (!std::isfinite(v[0]) || !std::isfinite(v[1])) {
            ok = false;
            break;
          }
          fl = std::min(fl, v[0]);
          fh = std::max(fh, v[0]);
          sl = std::min(sl, v[1]);
          sh = std::max(sh, v[1]);
        }
        if (ok && fl <= c && c <= fh && sl <= s && s <= sh) marked.push_back(k);
      }
      r.marked.push_back(marked.size());
      std::vector<Key> confirmed;
      std::vector<std::vector<double>> points;
      for (Key k : marked) {
        std::vector<double> p;
        if (!second) {
          confirmed.push_back(k);
          points.push_back(ctx.point(unpack(k), G, 0.5));
        } else if (ctx.solve_near(unpack(k), G, r.solve_tolerance, p)) {
          confirmed.push_back(k);
          points.push_back(std::move(p));
        }
      }
      r.confirmed.push_back(confirmed.size());
      const std::vector<int> roots = component_roots(confirmed, n);
      r.components.push_back(static_cast<int>(roots.size()));
      r.representatives.clear();
      for (int i : roots) r.representatives.push_back(points[static_cast<std::size_t>(i)]);
      ++gi;
      if (gi == grids.size()) break;
    }
    std::vector<Key> next;
    next.reserve(kept.size() * (1u << n));
    for (Key k : kept) {
      const auto idx = unpack(k);
      for (int child = 0; child < (1 << n); ++child) {
        auto ci = idx;
        for (int a = 0; a < n; ++a) ci[a] = 2 * idx[a] + ((child >> a) & 1);
        next.push_back(pack(ci));
      }
    }
    cand = std::move(next);
    G *= 2;
    if (G > grids[gi]) {
      throw Error(ErrorKind::InvalidArgument, "fiber grids must be the coarse size times powers of two");
    }
  }
  if (r.count() == 0) {
    throw Error(ErrorKind::EmptyLevel, "no fiber point found for the target value");
  }
  r.stable = std::all_of(r.components.begin(), r.components.end(),
                         [&](int v) { return v == r.components.front(); });
  return r;
}

}  // namespace kgrs
