#include "kgrs/soliton.hpp"

#include <algorithm>
#include <cmath>

#include "kgrs/error.hpp"

namespace kgrs {

Check make_check(std::string name, double value, double tolerance, std::string note) {
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tolerance;
  c.passed = std::isfinite(value) && value < tolerance;
  c.note = std::move(note);
  return c;
}

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// (1,1) endomorphism Y -> R(X, V) Y as a matrix, entry (c, b) = d_c part of R(X,V)d_b.
Mat curvature_operator(const PointGeometry& geo, const Vec& X, const Vec& V) {
  const int n = geo.n;
  Mat out = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < n; ++m) {
      const double w = X[i] * V[m];
      if (w == 0.0) continue;
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) out(c, b) += w * geo.Rup(i, m, b, c);
    }
  return out;
}

}  // namespace

KahlerReport kahler_verify(const SolitonSystem& sys, const PointSet& samples) {
  KahlerReport r;
  r.tolerance = sys.tolerances.get("kahler");
  const int n = sys.dim;
  for (const auto& p : samples) {
    const PointGeometry geo = compute_geometry(sys, p, Depth::Curvature);
    for (double v : geo.nabla_J.v) r.nabla_J = std::max(r.nabla_J, std::fabs(v));
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c)
          r.d_omega = std::max(r.d_omega, std::fabs(geo.d_omega(a, b, c)));
    r.J_squared = std::max(r.J_squared, max_abs(geo.J * geo.J + Mat::Identity(n, n)));
    const double gs = std::max(max_abs(geo.g), 1e-300);
    r.hermitian = std::max(r.hermitian, max_abs(geo.J.transpose() * geo.g * geo.J - geo.g) / gs);
  }
  r.passed = r.nabla_J < r.tolerance && r.d_omega < r.tolerance && r.J_squared < r.tolerance &&
             r.hermitian < r.tolerance;
  return r;
}

SolitonResidual soliton_residual(const SolitonSystem& sys, const PointSet& samples) {
  SolitonResidual r;
  r.tolerance = sys.tolerances.get("soliton");
  for (const auto& p : samples) {
    const PointGeometry geo = compute_geometry(sys, p, Depth::Curvature);
    const double v = max_abs(geo.ric + geo.hess_f - sys.lambda * geo.g);
    r.per_point.push_back(v);
    r.sup = std::max(r.sup, v);
    r.metric_scale = std::max(r.metric_scale, max_abs(geo.g));
  }
  r.passed = r.sup < r.tolerance;
  return r;
}

IdentityReport identity_suite(const SolitonSystem& sys, const PointSet& samples) {
  IdentityReport r;
  r.tolerance = sys.tolerances.get("identity");
  r.variance_tolerance = sys.tolerances.get("variance");
  const double gate = sys.tolerances.get("gate");
  const int n = sys.dim;
  std::vector<double> conserved;
  r.min_S = std::numeric_limits<double>::infinity();
  r.f_min = std::numeric_limits<double>::infinity();
  r.f_max = -std::numeric_limits<double>::infinity();
  double soliton_sup = 0.0;
  for (const auto& p : samples) {
    const PointGeometry geo = compute_geometry(sys, p, Depth::Full);
    soliton_sup = std::max(soliton_sup, max_abs(geo.ric + geo.hess_f - sys.lambda * geo.g));
    const double S = geo.scal;
    r.trace_identity = std::max(r.trace_identity, std::fabs(S + geo.lap_f - n * sys.lambda));
    const Vec rc_grad = geo.ric * geo.grad_f;
    r.ricci_gradient = std::max(r.ricci_gradient, (rc_grad - 0.5 * geo.dS).cwiseAbs().maxCoeff());
    r.ricci_divergence = std::max(r.ricci_divergence, (geo.div_ric - 0.5 * geo.dS).cwiseAbs().maxCoeff());
    conserved.push_back(S + geo.grad_f.dot(geo.df) - 2.0 * sys.lambda * geo.f);
    const Mat rr = geo.ginv * geo.ric;
    const double rc2 = (rr * rr).trace();
    r.scalar_laplacian = std::max(r.scalar_laplacian, std::fabs(geo.lap_S + 2.0 * rc2 - geo.grad_f.dot(geo.dS) - 2.0 * sys.lambda * S));
    const Vec JgS = geo.J * geo.grad_S;
    r.hess_f_cross = std::max(r.hess_f_cross, std::fabs(geo.grad_f.dot(geo.hess_f * JgS)));
    r.min_S = std::min(r.min_S, S);
    r.f_min = std::min(r.f_min, geo.f);
    r.f_max = std::max(r.f_max, geo.f);
    r.hess_J_commutator = std::max(r.hess_J_commutator, max_abs(geo.H_f * geo.J - geo.J * geo.H_f));
  }
  if (!conserved.empty()) {
    double mean = 0.0;
    for (double v : conserved) mean += v;
    mean /= static_cast<double>(conserved.size());
    double var = 0.0;
    for (double v : conserved) var += (v - mean) * (v - mean);
    var /= std::max<double>(1.0, static_cast<double>(conserved.size()) - 1.0);
    r.hamilton_mean = mean;
    r.hamilton_variance = var;
    r.hamilton_std = std::sqrt(var);
  }
  if (soliton_sup >= gate) {
    r.gated = true;
    r.passed = false;
    return r;
  }
  r.passed = r.trace_identity < r.tolerance && r.ricci_gradient < r.tolerance && r.ricci_divergence < r.tolerance &&
             r.scalar_laplacian < r.tolerance && r.hamilton_std < r.tolerance &&
             r.hamilton_variance < r.variance_tolerance;
  return r;
}

PoissonReport poisson_bracket_fS(const SolitonSystem& sys, const PointSet& samples,
                                 SSource source) {
  PoissonReport r;
  r.tolerance = sys.tolerances.get("poisson");
  const bool cheap = sys.explicit_second() || (source == SSource::Aux && sys.aux_S);
  for (const auto& p : samples) {
    const PointGeometry geo = compute_geometry(sys, p, cheap ? Depth::First : Depth::Full, source);
    r.sup = std::max(r.sup, std::fabs(geo.grad_f.dot(geo.omega * geo.grad_S)));
  }
  r.passed = r.sup < r.tolerance;
  return r;
}

KillingReport killing_suite(const SolitonSystem& sys, const PointSet& samples) {
  KillingReport r;
  r.tolerance = sys.tolerances.get("killing");
  const int n = sys.dim;
  for (const auto& p : samples) {
    const PointGeometry geo = compute_geometry(sys, p, Depth::Curvature);
    const Vec X = geo.J * geo.grad_f;
    // NX(a, i) = (nabla_i X)^a by the Leibniz rule; no Kahler assumption.
    Mat NX = geo.J * geo.H_f;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) NX(a, i) += geo.nabla_J(i, a, b) * geo.grad_f[b];
    const Mat low = geo.g * NX;  // low(j, i) = g(nabla_i X, d_j)
    r.lie_derivative = std::max(r.lie_derivative, max_abs(low + low.transpose()));
    r.nabla_J_grad_f = std::max(r.nabla_J_grad_f, max_abs(-NX + geo.J * geo.H_f));
    for (int i = 0; i < n; ++i) {
      Mat nabla_H(n, n);  // (nabla_i H_f)^a_b = g^{ac} (nabla_i Hess f)_cb
      Mat nh(n, n);
      for (int c = 0; c < n; ++c)
        for (int b = 0; b < n; ++b) nh(c, b) = geo.nabla_hess_f(i, c, b);
      nabla_H = geo.ginv * nh;
      Vec e = Vec::Zero(n);
      e[i] = 1.0;
      r.nabla_hess_f = std::max(r.nabla_hess_f, max_abs(nabla_H + geo.J * curvature_operator(geo, e, X)));
    }
    r.ricci_J_defect = std::max(r.ricci_J_defect, max_abs(geo.J.transpose() * geo.ric * geo.J - geo.ric));
    r.hess_J_defect =
        std::max(r.hess_J_defect, max_abs(geo.J.transpose() * geo.hess_f * geo.J - geo.hess_f));
  }
  r.passed = r.lie_derivative < r.tolerance && r.nabla_J_grad_f < r.tolerance && r.nabla_hess_f < r.tolerance;
  return r;
}

Mat hess_S_formula(const PointGeometry& geo, double lambda) {
  const int n = geo.n;
  const Vec X = geo.J * geo.grad_f;
  Mat Rterm = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int m = 0; m < n; ++m)
        for (int k = 0; k < n; ++k) s += geo.R(a, m, b, k) * X[m] * X[k];
      Rterm(a, b) = s;
    }
  return 2.0 * lambda * geo.hess_f - 2.0 * geo.hess_f * geo.ginv * geo.hess_f - 2.0 * Rterm;
}

HessSReport hess_S_formula_check(const SolitonSystem& sys, const PointSet& samples) {
  HessSReport r;
  r.tolerance = sys.tolerances.get("hess_s");
  for (const auto& p : samples) {
    const PointGeometry geo = compute_geometry(sys, p, Depth::Full);
    r.sup = std::max(r.sup, max_abs(geo.hess_S - hess_S_formula(geo, sys.lambda)));
  }
  r.passed = r.sup < r.tolerance;
  return r;
}

RadialReport radial_hessian_identity(const SolitonSystem& sys, std::span<const double> point,
                                     const Vec& E) {
  const PointGeometry geo = compute_geometry(sys, point, Depth::Curvature);
  const int n = geo.n;
  const double gf2 = geo.grad_f.dot(geo.df);
  if (!(gf2 > 1e-24)) throw Error(ErrorKind::BadFrame, "grad f vanishes at the point");
  const double norm_gf = std::sqrt(gf2);
  const Vec JG = geo.J * geo.grad_f;
  const double ee = E.dot(geo.g * E);
  const double o1 = std::fabs(E.dot(geo.g * geo.grad_f)) / norm_gf;
  const double o2 = std::fabs(E.dot(geo.g * JG)) / norm_gf;
  if (std::fabs(ee - 1.0) > 1e-8 || o1 > 1e-8 || o2 > 1e-8) {
    throw Error(ErrorKind::BadFrame, "E must be a unit vector orthogonal to grad f and J grad f");
  }
  RadialReport r;
  double lhs = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) lhs += geo.grad_f[i] * geo.nabla_hess_f(i, j, k) * E[j] * E[k];
  const Vec JE = geo.J * E;
  const double rhs = gf2 * (-E.dot(geo.ric * E) + sectional(E, JE, geo));
  r.lhs = lhs;
  r.rhs = rhs;
  r.residual = std::fabs(lhs - rhs);
  for (int i = 0; i < n; ++i) {
    Mat m(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) m(j, k) = geo.nabla_hess_f(i, j, k);
    r.J_invariance = std::max(r.J_invariance, max_abs(geo.J.transpose() * m * geo.J - m));
  }
  return r;
}

}  // namespace kgrs
