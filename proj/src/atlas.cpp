#include "kgrs/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kgrs/error.hpp"

namespace kgrs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MatX to_x(const Mat& m) { return MatX(m); }

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec to_vec(std::span<const double> x) {
  Vec v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  return v;
}

Depth metric_depth(const SolitonSystem& sys) {
  return sys.explicit_second() ? Depth::Curvature : Depth::Full;
}

// Second component used for grid scans: F2, then the auxiliary closed form.
const Expr* scan_second(const SolitonSystem& sys) {
  if (const Expr* e = sys.explicit_second()) return e;
  if (sys.aux_S) return &*sys.aux_S;
  return nullptr;
}

// Coordinate gradients and Hessians of f and the second component.
struct CoordPair {
  Vec df, dS;
  Mat hf, hS;
};

CoordPair coord_pair(const SolitonSystem& sys, std::span<const double> x, const Expr* second) {
  const int n = sys.dim;
  CoordPair p;
  p.df.resize(n);
  p.dS.resize(n);
  p.hf.resize(n, n);
  p.hS.resize(n, n);
  const Jet fj = eval_jet(sys.f, x, 2);
  if (second) {
    const Jet sj = eval_jet(*second, x, 2);
    for (int i = 0; i < n; ++i) {
      p.df[i] = fj.partial(i);
      p.dS[i] = sj.partial(i);
      for (int j = 0; j < n; ++j) {
        p.hf(i, j) = fj.second_partial(i, j);
        p.hS(i, j) = sj.second_partial(i, j);
      }
    }
    return p;
  }
  const PointGeometry geo = compute_geometry(sys, x, Depth::Full);
  for (int i = 0; i < n; ++i) {
    p.df[i] = fj.partial(i);
    p.dS[i] = geo.dS[i];
    for (int j = 0; j < n; ++j) {
      p.hf(i, j) = fj.second_partial(i, j);
      double h = geo.hess_S(i, j);
      for (int k = 0; k < n; ++k) h += geo.gamma(k, i, j) * geo.dS[k];
      p.hS(i, j) = h;
    }
  }
  return p;
}

// Components a_i b_j - a_j b_i, i < j.
Eigen::VectorXd wedge_components(const Vec& a, const Vec& b) {
  const int n = static_cast<int>(a.size());
  Eigen::VectorXd w(n * (n - 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) w[k++] = a[i] * b[j] - a[j] * b[i];
  return w;
}

double normalized_wedge(const Vec& a, const Vec& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return wedge_components(a, b).norm() / (na * nb);
}

// Moment-map rank data from a geometry carrying dS.
MomentRank rank_from_geometry(const SolitonSystem& sys, const PointGeometry& geo) {
  MomentRank r;
  const Eigen::LLT<Mat> llt(geo.ginv);
  const Mat L = llt.matrixL();
  const Vec a = L.transpose() * geo.df;
  const Vec b = L.transpose() * geo.dS;
  r.grad_f_norm = a.norm();
  r.grad_S_norm = b.norm();
  r.wedge = normalized_wedge(a, b);
  Mat D(2, geo.n);
  D.row(0) = a.transpose();
  D.row(1) = b.transpose();
  const Eigen::JacobiSVD<Mat> svd(D);
  r.singular_values = {svd.singularValues()[0], svd.singularValues()[1]};
  const double thr = rank0_threshold(sys);
  const bool f_zero = r.grad_f_norm < thr;
  const bool s_zero = sys.kind == SystemKind::Soliton || r.grad_S_norm < thr;
  if (f_zero && s_zero) r.rank = 0;
  else if (r.wedge < sys.tolerances.get("wedge")) r.rank = 1;
  else r.rank = 2;
  return r;
}

std::vector<double> hess_eigenvalues(const PointGeometry& geo) {
  const Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(to_x(geo.hess_f), to_x(geo.g));
  std::vector<double> e(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(e.begin(), e.end());
  return e;
}

// Regular grid of cell centers.
std::vector<std::vector<double>> grid_points(const Box& box, int n, int per_axis) {
  std::vector<std::vector<double>> pts;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(per_axis);
  pts.reserve(total);
  std::vector<int> idx(n, 0);
  for (std::size_t c = 0; c < total; ++c) {
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) {
      const double w = (box.hi[i] - box.lo[i]) / per_axis;
      p[i] = box.lo[i] + (idx[i] + 0.5) * w;
    }
    pts.push_back(std::move(p));
    for (int i = n - 1; i >= 0; --i) {
      if (++idx[i] < per_axis) break;
      idx[i] = 0;
    }
  }
  return pts;
}

void lex_sort(std::vector<std::vector<double>>& pts) {
  std::sort(pts.begin(), pts.end());
}

// Damped Gauss-Newton on the stacked coordinate gradients.
NewtonInfo newton_critical(const SolitonSystem& sys, std::vector<double>& x, int max_iter) {
  const int n = sys.dim;
  const Expr* F2 = sys.explicit_second();
  const double scale = sys.domain.scale();
  const int m = F2 ? 2 * n : n;
  auto residual = [&](std::span<const double> p, Eigen::VectorXd& r, Eigen::MatrixXd* Jm) {
    const Jet fj = eval_jet(sys.f, p, 2);
    r.resize(m);
    if (Jm) Jm->resize(m, n);
    for (int i = 0; i < n; ++i) {
      r[i] = fj.partial(i);
      if (Jm)
        for (int j = 0; j < n; ++j) (*Jm)(i, j) = fj.second_partial(i, j);
    }
    if (F2) {
      const Jet sj = eval_jet(*F2, p, 2);
      for (int i = 0; i < n; ++i) {
        r[n + i] = sj.partial(i);
        if (Jm)
          for (int j = 0; j < n; ++j) (*Jm)(n + i, j) = sj.second_partial(i, j);
      }
    }
  };
  NewtonInfo info;
  Eigen::VectorXd r;
  Eigen::MatrixXd Jm;
  try {
    residual(x, r, &Jm);
    for (info.iterations = 0; info.iterations < max_iter; ++info.iterations) {
      const double rn = r.norm();
      if (!std::isfinite(rn)) break;
      if (rn < 1e-13) {
        info.converged = true;
        break;
      }
      Eigen::VectorXd dx = -Jm.completeOrthogonalDecomposition().solve(r);
      if (!dx.allFinite()) break;
      if (dx.norm() > 0.5 * scale) dx *= 0.5 * scale / dx.norm();
      double t = 1.0;
      bool moved = false;
      Eigen::VectorXd rt;
      std::vector<double> xt(n);
      while (t > 1e-4) {
        for (int i = 0; i < n; ++i) xt[i] = x[i] + t * dx[i];
        residual(xt, rt, nullptr);
        if (std::isfinite(rt.norm()) && rt.norm() < rn) {
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) {
        info.converged = rn < 1e-10;
        break;
      }
      x = xt;
      if (!sys.domain.contains(x, -0.1 * scale)) break;
      residual(x, r, &Jm);
      if (t * dx.norm() < 1e-15 * std::max(1.0, scale)) {
        info.converged = r.norm() < 1e-10;
        break;
      }
    }
    info.residual = r.norm();
  } catch (const Error&) {
    info.converged = false;
  }
  return info;
}

std::string shortcut_label(double mu1, double mu2, double scale, const SymplecticTolerances& tol,
                           DegeneracyReason& reason) {
  if (std::min(std::fabs(mu1), std::fabs(mu2)) < tol.zero * scale) {
    reason = DegeneracyReason::ZeroEigenvalue;
    return "DEGENERATE";
  }
  if (std::fabs(mu1 - mu2) < tol.pairing * scale) {
    reason = DegeneracyReason::HessMultipleOfIdentity;
    return "DEGENERATE";
  }
  reason = DegeneracyReason::None;
  return "EE";
}

DegeneracyReason reason_from_cartan(const std::string& r) {
  if (r == "span-deficient") return DegeneracyReason::SpanDeficient;
  if (r == "no-regular-element") return DegeneracyReason::NoRegularElement;
  if (r == "zero-eigenvalue") return DegeneracyReason::ZeroEigenvalue;
  return DegeneracyReason::None;
}

// Unit field grad f / |grad f| and |grad f| from plain metric values.
struct FlowField {
  const SolitonSystem& sys;
  Vec operator()(const Vec& x, double& gnorm) const {
    const int n = sys.dim;
    std::span<const double> p(x.data(), static_cast<std::size_t>(n));
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = eval(sys.metric(i, j), p);
    const Jet fj = eval_jet(sys.f, p, 1);
    Vec df(n);
    for (int i = 0; i < n; ++i) df[i] = fj.partial(i);
    const Vec v = g.ldlt().solve(df);
    gnorm = std::sqrt(std::max(0.0, df.dot(v)));
    if (!(gnorm > 0.0)) return Vec::Zero(n);
    return v / gnorm;
  }
};

TracePoint sample_trace_point(const SolitonSystem& sys, const Vec& x, double s) {
  const PointGeometry geo = compute_geometry(sys, std::span<const double>(x.data(), x.size()),
                                             metric_depth(sys));
  TracePoint t;
  t.x = to_std(x);
  t.s = s;
  t.f = geo.f;
  t.S = geo.S;
  const double gn = std::sqrt(std::max(0.0, geo.df.dot(geo.grad_f)));
  t.fp = gn;
  if (gn > 0.0) {
    const Vec e = geo.grad_f / gn;
    t.fpp = e.dot(geo.hess_f * e);
    double third = 0.0;
    for (int i = 0; i < geo.n; ++i)
      for (int j = 0; j < geo.n; ++j)
        for (int k = 0; k < geo.n; ++k) third += e[i] * geo.nabla_hess_f(i, j, k) * e[j] * e[k];
    t.fppp = third;
  }
  t.wedge = rank_from_geometry(sys, geo).wedge;
  return t;
}

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct DpStep {
  Vec x;
  double err = 0.0;
  bool ok = false;
};

DpStep dp_step(const FlowField& F, const Vec& x, const Vec& k1, double h, double sign, double tol) {
  double gn = 0.0;
  auto f = [&](const Vec& y) { return (sign * F(y, gn)).eval(); };
  DpStep out;
  const Vec k2 = f(x + h * a21 * k1);
  const Vec k3 = f(x + h * (a31 * k1 + a32 * k2));
  const Vec k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vec k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vec k6 = f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  out.x = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const Vec k7 = f(out.x);
  const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  out.err = err.cwiseAbs().maxCoeff() / tol;
  out.ok = out.x.allFinite() && std::isfinite(out.err);
  return out;
}

double hf_norm(const SolitonSystem& sys, const Vec& x) {
  const PointGeometry geo =
      compute_geometry(sys, std::span<const double>(x.data(), x.size()), Depth::First);
  return std::max(geo.H_f.cwiseAbs().maxCoeff(), 1e-300);
}

// One direction of a trace; returns recorded points (excluding the seed).
std::vector<TracePoint> trace_direction(const SolitonSystem& sys, const Vec& seed, double sign,
                                        const std::vector<SingularPointRecord>& rank0,
                                        const AtlasOptions& opt, BranchEnd& end) {
  const FlowField F{sys};
  const double scale = sys.domain.scale();
  const double floor = rank0_threshold(sys);
  std::vector<TracePoint> pts;
  Vec x = seed;
  double s = 0.0;
  double h = std::min(opt.trace_max_step, 1e-2 * scale);
  const double hmin = 1e-14 * std::max(1.0, scale);
  end.kind = EndKind::StepLimit;
  for (int step = 0; step < opt.trace_max_steps; ++step) {
    double gn = 0.0;
    const Vec k1 = sign * F(x, gn);
    if (gn < floor) {
      end.kind = EndKind::GradientBelowFloor;
      break;
    }
    const double cap = std::min(opt.trace_max_step, 0.5 * gn / hf_norm(sys, x));
    h = std::min(h, cap);
    bool accepted = false;
    bool exited = false;
    while (!accepted) {
      if (h < hmin) throw Error(ErrorKind::StepFailure, "trace step size underflow");
      const DpStep st = dp_step(F, x, k1, h, sign, opt.trace_tolerance);
      if (!st.ok || st.err > 1.0) {
        h *= st.ok ? std::max(0.1, 0.9 * std::pow(st.err, -0.2)) : 0.25;
        continue;
      }
      if (!sys.domain.contains(std::span<const double>(st.x.data(), st.x.size()))) {
        if (h < 1e-3 * opt.trace_max_step) {
          exited = true;
          break;
        }
        h *= 0.5;
        continue;
      }
      x = st.x;
      s += sign * h;
      accepted = true;
      h *= std::min(5.0, 0.9 * std::pow(std::max(st.err, 1e-10), -0.2));
    }
    if (exited) {
      end.kind = EndKind::ExitsDomain;
      break;
    }
    pts.push_back(sample_trace_point(sys, x, s));
  }
  end.point = to_std(x);
  end.rank0_index = -1;
  if (end.kind == EndKind::GradientBelowFloor) {
    double best = kInf;
    for (std::size_t i = 0; i < rank0.size(); ++i) {
      const double d = dist(end.point, rank0[i].x);
      if (d < best) {
        best = d;
        end.rank0_index = static_cast<int>(i);
      }
    }
    if (best < 1e-4 * std::max(1.0, scale)) end.kind = EndKind::HitsRank0;
    else end.rank0_index = -1;
  }
  return pts;
}

Vec g_normalize(const Vec& v, const Mat& g) {
  const double n = std::sqrt(std::max(0.0, v.dot(g * v)));
  return n > 0.0 ? Vec(v / n) : v;
}

// Orthonormal basis (columns) of the g-complement of span(u, Ju).
Mat transverse_basis(const PointGeometry& geo, const Vec& u) {
  const int n = geo.n;
  std::vector<Vec> basis{g_normalize(u, geo.g)};
  Vec ju = geo.J * basis[0];
  ju -= basis[0] * basis[0].dot(geo.g * ju);
  basis.push_back(g_normalize(ju, geo.g));
  for (int k = 0; k < n && static_cast<int>(basis.size()) < n; ++k) {
    Vec e = Vec::Zero(n);
    e[k] = 1.0;
    for (const Vec& b : basis) e -= b * b.dot(geo.g * e);
    const double nn = std::sqrt(std::max(0.0, e.dot(geo.g * e)));
    if (nn > 1e-6) basis.push_back(e / nn);
  }
  Mat T(n, n - 2);
  for (int k = 2; k < n; ++k) T.col(k - 2) = basis[k];
  return T;
}

double S_value(const SolitonSystem& sys, std::span<const double> x) {
  if (const Expr* e = sys.explicit_second()) return eval(*e, x);
  return compute_geometry(sys, x, Depth::Curvature).scal;
}

// Projection residual of v onto span(u, Ju) (u g-unit).
double line_residual(const Vec& v, const Vec& u, const Mat& g, const Mat& J) {
  const Vec ju = J * u;
  const Vec r = v - u * u.dot(g * v) - ju * ju.dot(g * v);
  return std::sqrt(std::max(0.0, r.dot(g * r)));
}

}  // namespace

const char* degeneracy_reason_name(DegeneracyReason r) {
  switch (r) {
    case DegeneracyReason::None: return "";
    case DegeneracyReason::HessMultipleOfIdentity: return "hess-multiple-of-identity";
    case DegeneracyReason::ZeroEigenvalue: return "zero-eigenvalue";
    case DegeneracyReason::SpanDeficient: return "span-deficient";
    case DegeneracyReason::NoRegularElement: return "no-regular-element";
    case DegeneracyReason::ReducedZero: return "reduced-zero";
    case DegeneracyReason::ExcessDimension: return "excess-dimension";
  }
  return "";
}

const char* end_kind_name(EndKind k) {
  switch (k) {
    case EndKind::HitsRank0: return "hits-rank0";
    case EndKind::ExitsDomain: return "exits-domain";
    case EndKind::GradientBelowFloor: return "gradient-below-floor";
    case EndKind::StepLimit: return "step-limit";
  }
  return "";
}

std::string SingularPointRecord::label() const {
  if (verdict == "DEGENERATE" && reason != DegeneracyReason::None) {
    return verdict + "(" + degeneracy_reason_name(reason) + ")";
  }
  return verdict;
}

double rank0_threshold(const SolitonSystem& sys) {
  return sys.tolerances.get("rank0") * (1.0 + std::fabs(sys.lambda)) *
         std::max(1.0, sys.domain.scale());
}

MomentRank moment_rank(const SolitonSystem& sys, std::span<const double> x, SSource source) {
  const bool cheap = sys.explicit_second() || (source == SSource::Aux && sys.aux_S);
  const PointGeometry geo = compute_geometry(sys, x, cheap ? Depth::First : Depth::Full, source);
  return rank_from_geometry(sys, geo);
}

std::vector<SingularPointRecord> find_rank0(const SolitonSystem& sys, const AtlasOptions& opt) {
  const int n = sys.dim;
  std::vector<std::vector<double>> roots;
  std::vector<NewtonInfo> infos;
  for (auto x : grid_points(sys.domain, n, opt.rank0_seeds_per_axis)) {
    const NewtonInfo info = newton_critical(sys, x, opt.newton_max_iterations);
    if (!info.converged || !sys.domain.contains(x)) continue;
    bool dup = false;
    for (const auto& r : roots)
      if (dist(r, x) < opt.dedupe_radius) dup = true;
    if (dup) continue;
    roots.push_back(x);
    infos.push_back(info);
  }
  std::vector<std::size_t> order(roots.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return roots[a] < roots[b]; });
  std::vector<SingularPointRecord> out;
  for (std::size_t i : order) {
    SingularPointRecord rec = classify_rank0(sys, roots[i], opt);
    if (rec.grad_f_norm >= rank0_threshold(sys)) continue;
    rec.newton = infos[i];
    out.push_back(std::move(rec));
  }
  return out;
}

SingularPointRecord classify_rank0(const SolitonSystem& sys, std::span<const double> x,
                                   const AtlasOptions& opt) {
  const PointGeometry geo = compute_geometry(sys, x, metric_depth(sys));
  SingularPointRecord rec;
  rec.x.assign(x.begin(), x.end());
  rec.rank = 0;
  const MomentRank mr = rank_from_geometry(sys, geo);
  rec.grad_f_norm = mr.grad_f_norm;
  rec.wedge = mr.wedge;
  rec.hess_f_eigenvalues = hess_eigenvalues(geo);
  const auto& e = rec.hess_f_eigenvalues;
  double escale = 1.0;
  for (double v : e) escale = std::max(escale, std::fabs(v));
  if (e.size() >= 2) rec.mu1 = 0.5 * (e[0] + e[1]);
  if (e.size() >= 4) rec.mu2 = 0.5 * (e[2] + e[3]);

  const CartanVerdict cv =
      cartan_verdict(to_x(geo.hess_f), to_x(geo.hess_S), to_x(geo.omega), opt.symplectic);
  rec.eigenvalues = cv.pattern.eigenvalues;
  rec.triple = cv.pattern.triple();
  rec.cartan_verdict = singularity_type_name(cv.type);
  if (cv.type == SingularityType::Degenerate) rec.cartan_verdict += "(" + cv.reason + ")";

  if (sys.kind == SystemKind::Soliton && sys.dim == 4) {
    DegeneracyReason sr = DegeneracyReason::None;
    const std::string sv = shortcut_label(rec.mu1, rec.mu2, escale, opt.symplectic, sr);
    rec.shortcut_verdict = sv;
    if (sr != DegeneracyReason::None) rec.shortcut_verdict += std::string("(") + degeneracy_reason_name(sr) + ")";
    const bool s_deg = sv == "DEGENERATE";
    const bool c_deg = cv.type == SingularityType::Degenerate;
    if (s_deg != c_deg || (!s_deg && cv.type != SingularityType::EE)) {
      throw Error(ErrorKind::CrossCheckMismatch,
                  "rank-0 shortcut " + rec.shortcut_verdict + " disagrees with Cartan " + rec.cartan_verdict);
    }
    rec.verdict = sv;
    rec.reason = sr;
  } else {
    rec.verdict = singularity_type_name(cv.type);
    rec.reason = reason_from_cartan(cv.reason);
  }
  return rec;
}

Rank1Seeds find_rank1_seeds(const SolitonSystem& sys, const AtlasOptions& opt) {
  const int n = sys.dim;
  const Expr* second = scan_second(sys);
  const double wedge_tol = sys.tolerances.get("wedge");
  const double floor = rank0_threshold(sys);
  const double scale = sys.domain.scale();
  Rank1Seeds out;
  const auto grid = grid_points(sys.domain, n, opt.rank1_grid);
  out.grid_points = static_cast<int>(grid.size());
  std::vector<double> w(grid.size(), 1.0), gnorm(grid.size(), 0.0);
  int qualifying = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      const CoordPair p = coord_pair(sys, grid[i], second);
      gnorm[i] = p.df.norm();
      w[i] = normalized_wedge(p.df, p.dS);
      if (!std::isfinite(w[i])) w[i] = 1.0;
    } catch (const Error&) {
      w[i] = 1.0;
    }
    if (w[i] < wedge_tol && gnorm[i] > floor) ++qualifying;
  }
  out.qualifying_fraction = grid.empty() ? 0.0 : static_cast<double>(qualifying) / grid.size();
  std::vector<std::vector<double>> found;
  if (out.qualifying_fraction > 0.5) {
    out.dependent_case = true;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (w[i] < wedge_tol && gnorm[i] > floor) found.push_back(grid[i]);
  } else {
    // Grid-local minima of the wedge, refined by Levenberg-Marquardt.
    const int N = opt.rank1_grid;
    std::vector<int> stride(n, 1);
    for (int i = n - 2; i >= 0; --i) stride[i] = stride[i + 1] * N;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      if (gnorm[c] <= floor) continue;
      std::vector<int> idx(n);
      for (int i = 0; i < n; ++i) idx[i] = static_cast<int>(c / stride[i]) % N;
      bool is_min = true;
      int total = 1;
      for (int i = 0; i < n; ++i) total *= 3;
      for (int o = 0; o < total && is_min; ++o) {
        int t = o;
        std::size_t nb = 0;
        bool valid = true, self = true;
        for (int i = n - 1; i >= 0; --i) {
          const int d = t % 3 - 1;
          t /= 3;
          if (d != 0) self = false;
          const int k = idx[i] + d;
          if (k < 0 || k >= N) valid = false;
          nb += static_cast<std::size_t>(k) * stride[i];
        }
        if (!valid || self) continue;
        if (w[nb] < w[c]) is_min = false;
      }
      if (!is_min) continue;
      std::vector<double> x = grid[c];
      double mu = 1e-3;
      double cur = w[c];
      for (int it = 0; it < 80 && cur > 1e-14; ++it) {
        CoordPair p;
        try {
          p = coord_pair(sys, x, second);
        } catch (const Error&) {
          break;
        }
        const double cnorm = std::max(p.df.norm() * p.dS.norm(), 1e-300);
        const Eigen::VectorXd F = wedge_components(p.df, p.dS) / cnorm;
        Eigen::MatrixXd Jm(F.size(), n);
        int k = 0;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j, ++k)
            for (int m = 0; m < n; ++m)
              Jm(k, m) = (p.hf(i, m) * p.dS[j] + p.df[i] * p.hS(j, m) - p.hf(j, m) * p.dS[i] -
                          p.df[j] * p.hS(i, m)) / cnorm;
        const Eigen::MatrixXd JtJ = Jm.transpose() * Jm;
        const Eigen::VectorXd Jtf = Jm.transpose() * F;
        bool improved = false;
        for (int tries = 0; tries < 12 && !improved; ++tries) {
          Eigen::MatrixXd A = JtJ;
          A.diagonal().array() += mu * (1.0 + JtJ.diagonal().array());
          const Eigen::VectorXd dx = -A.ldlt().solve(Jtf);
          std::vector<double> xt(n);
          for (int i = 0; i < n; ++i) xt[i] = x[i] + dx[i];
          double wt = 1.0;
          try {
            const CoordPair q = coord_pair(sys, xt, second);
            wt = normalized_wedge(q.df, q.dS);
          } catch (const Error&) {
            wt = kInf;
          }
          if (std::isfinite(wt) && wt < cur) {
            x = xt;
            cur = wt;
            mu = std::max(1e-12, mu * 0.1);
            improved = true;
          } else {
            mu *= 10.0;
          }
        }
        if (!improved) break;
      }
      if (cur < wedge_tol && sys.domain.contains(x)) {
        const CoordPair p = coord_pair(sys, x, second);
        if (p.df.norm() > floor) found.push_back(x);
      }
    }
  }
  lex_sort(found);
  std::vector<std::vector<double>> unique;
  const double radius = 1e-3 * std::max(1.0, scale);
  for (auto& x : found) {
    bool dup = false;
    for (const auto& u : unique)
      if (dist(u, x) < radius) {
        dup = true;
        break;
      }
    if (!dup) unique.push_back(std::move(x));
  }
  if (static_cast<int>(unique.size()) > opt.max_rank1_seeds) {
    std::vector<std::vector<double>> sub;
    const double stepf = static_cast<double>(unique.size()) / opt.max_rank1_seeds;
    for (int i = 0; i < opt.max_rank1_seeds; ++i)
      sub.push_back(unique[static_cast<std::size_t>(i * stepf)]);
    unique = std::move(sub);
  }
  // Membership is confirmed with the curvature pipeline when S is not explicit.
  if (!sys.explicit_second() && !out.dependent_case) {
    std::vector<std::vector<double>> kept;
    for (auto& x : unique) {
      const MomentRank mr = moment_rank(sys, x, SSource::Metric);
      if (mr.rank == 1) kept.push_back(std::move(x));
    }
    unique = std::move(kept);
  }
  out.points = std::move(unique);
  return out;
}

int singular_set_dimension(const SolitonSystem& sys, std::span<const double> x) {
  const int n = sys.dim;
  const double h = 1e-3;
  auto grads = [&](std::span<const double> p, Vec& df, Vec& dS) {
    const PointGeometry geo = compute_geometry(sys, p, metric_depth(sys));
    df = geo.df;
    dS = geo.dS;
  };
  Vec df0, dS0;
  grads(x, df0, dS0);
  const double c = std::max(df0.squaredNorm() + dS0.squaredNorm(), 1e-300);
  const int m = n * (n - 1) / 2;
  Eigen::MatrixXd Jm(m, n);
  std::vector<double> p(x.begin(), x.end());
  for (int k = 0; k < n; ++k) {
    Vec a, b;
    p[k] = x[k] + h;
    grads(p, a, b);
    const Eigen::VectorXd Fp = wedge_components(a, b) / c;
    p[k] = x[k] - h;
    grads(p, a, b);
    const Eigen::VectorXd Fm = wedge_components(a, b) / c;
    p[k] = x[k];
    Jm.col(k) = (Fp - Fm) / (2.0 * h);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Jm);
  const auto& sv = svd.singularValues();
  const double s1 = sv.size() ? sv[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > std::max(1e-4 * s1, 1e-8)) ++rank;
  return n - rank;
}

SingularPointRecord classify_rank1(const SolitonSystem& sys, std::span<const double> x,
                                   const AtlasOptions& opt) {
  const PointGeometry geo = compute_geometry(sys, x, metric_depth(sys));
  SingularPointRecord rec;
  rec.x.assign(x.begin(), x.end());
  rec.rank = 1;
  const MomentRank mr = rank_from_geometry(sys, geo);
  rec.grad_f_norm = mr.grad_f_norm;
  rec.wedge = mr.wedge;
  if (mr.grad_f_norm < rank0_threshold(sys)) {
    throw Error(ErrorKind::DegenerateSubspace, "grad f vanishes at the rank-1 candidate");
  }
  const double g2 = geo.df.dot(geo.grad_f);
  rec.kappa = geo.dS.dot(geo.grad_f) / g2;
  const Mat H = geo.hess_S - rec.kappa * geo.hess_f;
  MatX W(geo.n, 2);
  W.col(0) = geo.grad_f;
  W.col(1) = geo.J * geo.grad_f;
  const ReducedPattern rp = reduced_rank1_pattern(to_x(H), to_x(geo.omega), W, opt.symplectic);
  rec.eigenvalues = rp.pattern.eigenvalues;
  rec.hess_f_eigenvalues = hess_eigenvalues(geo);
  rec.singular_dimension = singular_set_dimension(sys, x);
  if (rec.singular_dimension > 2) {
    rec.verdict = "DEGENERATE";
    rec.reason = DegeneracyReason::ExcessDimension;
  } else if (rp.type == Rank1Type::Degenerate) {
    rec.verdict = "DEGENERATE";
    rec.reason = DegeneracyReason::ReducedZero;
  } else {
    rec.verdict = rank1_type_name(rp.type);
  }
  return rec;
}

std::string level_set_oracle(const SolitonSystem& sys, std::span<const double> x, double radius,
                             int samples) {
  const PointGeometry geo = compute_geometry(sys, x, Depth::First);
  const double c = geo.f;
  const double S0 = S_value(sys, x);
  const Mat T = transverse_basis(geo, geo.grad_f);
  int pos = 0, neg = 0;
  const double eps = 1e-12 * std::max(1.0, std::fabs(S0));
  for (int k = 0; k < samples; ++k) {
    const double th = 2.0 * std::numbers::pi * k / samples;
    Vec p = to_vec(x) + radius * (std::cos(th) * T.col(0) + std::sin(th) * T.col(1));
    for (int it = 0; it < 8; ++it) {
      const PointGeometry gp =
          compute_geometry(sys, std::span<const double>(p.data(), p.size()), Depth::First);
      const double gg = gp.df.dot(gp.grad_f);
      if (!(gg > 0.0)) break;
      p -= (gp.f - c) / gg * gp.grad_f;
    }
    const double d = S_value(sys, std::span<const double>(p.data(), p.size())) - S0;
    if (d > eps) ++pos;
    else if (d < -eps) ++neg;
  }
  if (pos == samples) return "min";
  if (neg == samples) return "max";
  if (pos > 0 && neg > 0) return "saddle";
  return "flat";
}

BranchRecord trace_branch(const SolitonSystem& sys, std::span<const double> seed,
                          const std::vector<SingularPointRecord>& rank0, const AtlasOptions& opt) {
  BranchRecord b;
  b.seed.assign(seed.begin(), seed.end());
  const Vec x0 = to_vec(seed);
  auto back = trace_direction(sys, x0, -1.0, rank0, opt, b.backward);
  auto fwd = trace_direction(sys, x0, 1.0, rank0, opt, b.forward);
  std::reverse(back.begin(), back.end());
  b.points = std::move(back);
  b.points.push_back(sample_trace_point(sys, x0, 0.0));
  for (auto& p : fwd) b.points.push_back(std::move(p));
  double fp_max = 0.0;
  for (const auto& p : b.points) fp_max = std::max(fp_max, p.fp);
  for (const auto& p : b.points)
    if (p.fp > 1e-4 * fp_max) b.max_wedge = std::max(b.max_wedge, p.wedge);
  b.membership_preserved = b.max_wedge < sys.tolerances.get("branch");
  return b;
}

double BranchGeometryReport::max() const {
  return std::max({total_geodesy, curvature, hess_f_diag, hess_S_diag, hess_S_J_diag});
}

BranchGeometryReport branch_geometry_check(const SolitonSystem& sys, const BranchRecord& branch,
                                           int max_points) {
  BranchGeometryReport r;
  double fp_max = 0.0;
  for (const auto& p : branch.points) fp_max = std::max(fp_max, p.fp);
  std::vector<const TracePoint*> usable;
  for (const auto& p : branch.points)
    if (p.fp > 1e-3 * fp_max) usable.push_back(&p);
  if (usable.empty()) return r;
  const int count = std::min<int>(max_points, static_cast<int>(usable.size()));
  for (int k = 0; k < count; ++k) {
    const std::size_t idx =
        count == 1 ? 0 : static_cast<std::size_t>(std::llround(k * (usable.size() - 1.0) / (count - 1)));
    const TracePoint& tp = *usable[idx];
    const PointGeometry geo = compute_geometry(sys, tp.x, metric_depth(sys));
    const int n = geo.n;
    const double gn = std::sqrt(geo.df.dot(geo.grad_f));
    const Vec E1 = geo.grad_f / gn;
    const Vec E2 = geo.J * E1;
    auto nabla_E1 = [&](const Vec& Y) -> Vec {
      const Vec hy = geo.H_f * Y;
      return hy / gn - E1 * (Y.dot(geo.hess_f * E1) / gn);
    };
    auto nabla_E2 = [&](const Vec& Y) -> Vec {
      Mat NJ = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a)
          for (int c = 0; c < n; ++c) NJ(a, c) += Y[i] * geo.nabla_J(i, a, c);
      return NJ * E1 + geo.J * nabla_E1(Y);
    };
    const Vec E[2] = {E1, E2};
    for (int a = 0; a < 2; ++a)
      for (int bi = 0; bi < 2; ++bi) {
        const Vec v = bi == 0 ? nabla_E1(E[a]) : nabla_E2(E[a]);
        const Vec nrm = v - E1 * E1.dot(geo.g * v) - E2 * E2.dot(geo.g * v);
        r.total_geodesy = std::max(r.total_geodesy, std::sqrt(std::max(0.0, nrm.dot(geo.g * nrm))));
      }
    try {
      r.curvature = std::max(r.curvature, std::fabs(sectional(E1, E2, geo) + tp.fppp / tp.fp));
    } catch (const Error&) {
      r.curvature = kInf;
    }
    r.hess_f_diag = std::max(r.hess_f_diag, std::fabs(E1.dot(geo.hess_f * E1) - tp.fpp));
    const double l = sys.lambda;
    r.hess_S_diag = std::max(r.hess_S_diag, std::fabs(E1.dot(geo.hess_S * E1) -
                                                      (2 * l * tp.fpp - 2 * tp.fpp * tp.fpp -
                                                       2 * tp.fp * tp.fppp)));
    r.hess_S_J_diag = std::max(r.hess_S_J_diag, std::fabs(E2.dot(geo.hess_S * E2) -
                                                          (2 * l * tp.fpp - 2 * tp.fpp * tp.fpp)));
    ++r.points;
  }
  return r;
}

BranchCount branch_count_at(const SolitonSystem& sys, const SingularPointRecord& point, int index,
                            const std::vector<BranchRecord>& branches, bool dependent_case) {
  BranchCount bc;
  bc.dependent_case = dependent_case;
  bc.degenerate_point = point.verdict == "DEGENERATE";
  const PointGeometry geo = compute_geometry(sys, point.x, Depth::First);
  const Vec x0 = to_vec(point.x);
  std::vector<Vec> reps;
  std::vector<std::string> degenerate_families;
  for (std::size_t bi = 0; bi < branches.size(); ++bi) {
    const BranchRecord& b = branches[bi];
    if (!b.membership_preserved) continue;
    for (const BranchEnd* e : {&b.backward, &b.forward}) {
      if (e->kind != EndKind::HitsRank0 || e->rank0_index != index) continue;
      bc.adjacency.push_back(static_cast<int>(bi));
      const Vec u = g_normalize(to_vec(e->point) - x0, geo.g);
      BranchDirection d;
      d.direction = to_std(u);
      d.rayleigh = u.dot(geo.hess_f * u);
      const Vec r = geo.H_f * u - d.rayleigh * u;
      d.residual = std::sqrt(std::max(0.0, r.dot(geo.g * r)));
      d.family = b.family;
      bc.directions.push_back(d);
      if (b.family.rfind("DEGENERATE", 0) == 0) {
        if (std::find(degenerate_families.begin(), degenerate_families.end(), b.family) ==
            degenerate_families.end())
          degenerate_families.push_back(b.family);
        continue;
      }
      bool same = false;
      for (const Vec& c : reps)
        if (line_residual(u, c, geo.g, geo.J) < 1e-3) same = true;
      if (!same) reps.push_back(u);
    }
  }
  bc.count = static_cast<int>(reps.size() + degenerate_families.size());
  bc.violation = bc.count > 2 && !bc.degenerate_point;
  return bc;
}

MorseReport morse_report(const SolitonSystem& sys, const std::vector<SingularPointRecord>& rank0,
                         const std::vector<std::vector<double>>& rank1_samples, bool dependent_case) {
  MorseReport m;
  m.dependent_caveat = dependent_case;
  const double scale = sys.domain.scale();
  const double zero = sys.tolerances.get("zero");
  for (std::size_t i = 0; i < rank0.size(); ++i) {
    const PointGeometry geo = compute_geometry(sys, rank0[i].x, Depth::First);
    MorsePoint p;
    p.hess_eigenvalues = hess_eigenvalues(geo);
    double es = 1.0, emin = kInf;
    for (double v : p.hess_eigenvalues) {
      es = std::max(es, std::fabs(v));
      emin = std::min(emin, std::fabs(v));
      if (v < 0.0) ++p.index;
    }
    for (std::size_t k = 0; k + 1 < p.hess_eigenvalues.size(); k += 2)
      p.pairing_defect =
          std::max(p.pairing_defect, std::fabs(p.hess_eigenvalues[k] - p.hess_eigenvalues[k + 1]));
    p.even = p.index % 2 == 0;
    p.nondegenerate = emin > zero * es;
    p.isolation_radius = 2.0 * std::sqrt(static_cast<double>(sys.dim)) * scale;
    for (std::size_t j = 0; j < rank0.size(); ++j)
      if (j != i) p.isolation_radius = std::min(p.isolation_radius, dist(rank0[i].x, rank0[j].x));
    p.nearest_rank1 = -1.0;
    for (const auto& s : rank1_samples) {
      const double d = dist(rank0[i].x, s);
      if (p.nearest_rank1 < 0.0 || d < p.nearest_rank1) p.nearest_rank1 = d;
    }
    p.isolated = p.isolation_radius > 1e-3 * std::max(1.0, scale);
    if (!p.nondegenerate) m.morse = false;
    m.points.push_back(std::move(p));
  }
  return m;
}

AtlasResult scan_system(const SolitonSystem& sys, const AtlasOptions& opt) {
  AtlasResult res;
  res.rank0 = find_rank0(sys, opt);
  res.seeds = find_rank1_seeds(sys, opt);
  std::vector<SingularPointRecord> degenerate;
  for (const auto& x : res.seeds.points) {
    try {
      SingularPointRecord rec = classify_rank1(sys, x, opt);
      if (rec.verdict == "DEGENERATE") degenerate.push_back(rec);
      res.rank1.push_back(std::move(rec));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateSubspace) throw;
    }
  }

  // One trace per family: a seed is covered when its image lies on a traced
  // image curve and its complex line span(grad f, J grad f) matches there.
  const int max_traces = res.seeds.dependent_case ? 4 : 16;
  auto covered = [&](const SingularPointRecord& rec) {
    const PointGeometry gs = compute_geometry(sys, rec.x, Depth::First);
    const double fs = gs.f;
    const double Ss = S_value(sys, rec.x);
    const Vec us = g_normalize(gs.grad_f, gs.g);
    for (const auto& b : res.branches) {
      if (b.family.rfind("DEGENERATE", 0) == 0) continue;
      for (std::size_t k = 0; k + 1 < b.points.size(); ++k) {
        const TracePoint& p = b.points[k];
        const TracePoint& q = b.points[k + 1];
        if ((fs - p.f) * (fs - q.f) > 0.0) continue;
        const double t = q.f == p.f ? 0.0 : (fs - p.f) / (q.f - p.f);
        const double Si = p.S + t * (q.S - p.S);
        if (std::fabs(Si - Ss) > 1e-3 * std::max(1.0, std::fabs(Ss))) continue;
        const TracePoint& near = t < 0.5 ? p : q;
        const PointGeometry gb = compute_geometry(sys, near.x, Depth::First);
        const Vec ub = g_normalize(gb.grad_f, gs.g);
        if (line_residual(us, ub, gs.g, gs.J) < 1e-3 && line_residual(ub, us, gs.g, gs.J) < 1e-3)
          return true;
      }
    }
    return false;
  };
  for (const auto& rec : res.rank1) {
    if (static_cast<int>(res.branches.size()) >= max_traces) break;
    if (rec.verdict == "DEGENERATE") continue;
    if (covered(rec)) continue;
    BranchRecord b = trace_branch(sys, rec.x, res.rank0, opt);
    b.family = rec.label();
    res.branches.push_back(std::move(b));
  }
  // Degenerate seeds closest to a rank-0 point probe flow invariance.
  if (!degenerate.empty() && !res.seeds.dependent_case) {
    auto near0 = [&](const SingularPointRecord& r) {
      double d = kInf;
      for (const auto& z : res.rank0) d = std::min(d, dist(r.x, z.x));
      return d;
    };
    std::vector<const SingularPointRecord*> order;
    for (const auto& r : degenerate) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(),
                     [&](const SingularPointRecord* a, const SingularPointRecord* b) { return near0(*a) < near0(*b); });
    for (int k = 0; k < std::min<int>(opt.max_degenerate_traces, static_cast<int>(order.size())); ++k) {
      BranchRecord b = trace_branch(sys, order[k]->x, res.rank0, opt);
      b.family = order[k]->label();
      res.branches.push_back(std::move(b));
    }
    std::vector<std::array<double, 2>> poly;
    for (const auto& r : degenerate) {
      const PointGeometry g = compute_geometry(sys, r.x, Depth::First);
      poly.push_back({g.f, S_value(sys, r.x)});
    }
    std::sort(poly.begin(), poly.end());
    res.degenerate_families.push_back(std::move(poly));
  }
  for (const auto& b : res.branches) {
    if (sys.kind == SystemKind::Soliton && b.membership_preserved) {
      res.branch_checks.push_back(branch_geometry_check(sys, b));
    } else {
      res.branch_checks.push_back(BranchGeometryReport{});
    }
  }
  for (std::size_t i = 0; i < res.rank0.size(); ++i) {
    res.counts.push_back(branch_count_at(sys, res.rank0[i], static_cast<int>(i), res.branches,
                                         res.seeds.dependent_case));
  }
  res.morse = morse_report(sys, res.rank0, res.seeds.points, res.seeds.dependent_case);
  return res;
}

}  // namespace kgrs
