#include "kgrs/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "kgrs/error.hpp"

namespace kgrs {

double Tensor4::norm() const {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::fabs(x));
  return s;
}

MetricJet metric_jet(const SolitonSystem& sys, std::span<const double> x, int order) {
  MetricJet m;
  m.n = sys.dim;
  m.order = order;
  EvalOptions opt{sys.tolerances.get("division_floor")};
  for (int i = 0; i < m.n; ++i) {
    for (int j = i; j < m.n; ++j) {
      m.g[i * 4 + j] = eval_jet(sys.metric(i, j), x, order, opt);
      m.g[j * 4 + i] = m.g[i * 4 + j];
    }
  }
  return m;
}

ConnectionJet christoffel(const MetricJet& g, double spd_floor) {
  const int n = g.n;
  const int K = g.order;
  if (K < 1) throw Error(ErrorKind::InvalidArgument, "christoffel needs metric jets of order >= 1");
  Mat G0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G0(i, j) = g(i, j).value();
  Eigen::SelfAdjointEigenSolver<Mat> es(G0);
  if (es.eigenvalues().minCoeff() <= spd_floor) {
    throw Error(ErrorKind::SingularMetric, "metric is not positive definite (smallest eigenvalue " +
                                               std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  const Mat A = G0.inverse();

  ConnectionJet c;
  c.n = n;
  const int dim = n;
  // g^{-1} = sum_k (-A E)^k A with E = g - G0 (no constant term).
  std::array<Jet, 16> M, T;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Jet acc(dim, K);
      for (int m = 0; m < n; ++m) {
        Jet e = g(m, j);
        e[0] = 0.0;
        acc += e * A(i, m);
      }
      M[i * 4 + j] = acc;
      T[i * 4 + j] = Jet(dim, K, A(i, j));
      c.ginv[i * 4 + j] = T[i * 4 + j];
    }
  }
  for (int k = 1; k <= K; ++k) {
    std::array<Jet, 16> next;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Jet acc(dim, K);
        for (int m = 0; m < n; ++m) acc.fma(M[i * 4 + m], T[m * 4 + j]);
        next[i * 4 + j] = -acc;
      }
    }
    T = next;
    for (int i = 0; i < n * 4; ++i) {
      if (i % 4 < n) c.ginv[i] += T[i];
    }
  }

  // First-kind symbols Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2.
  std::array<Jet, 16 * 4> dg;  // dg[v*16 + i*4 + j] = d_v g_ij
  for (int v = 0; v < n; ++v)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        dg[v * 16 + i * 4 + j] = g(i, j).derivative(v);
        dg[v * 16 + j * 4 + i] = dg[v * 16 + i * 4 + j];
      }
  std::array<Jet, 64> first;
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet t = dg[i * 16 + j * 4 + l] + dg[j * 16 + i * 4 + l] - dg[l * 16 + i * 4 + j];
        t *= 0.5;
        first[l * 16 + i * 4 + j] = t;
      }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet acc(dim, K - 1);
        for (int l = 0; l < n; ++l) acc.fma(c.ginv[k * 4 + l], first[l * 16 + i * 4 + j]);
        c.gamma[k * 16 + i * 4 + j] = acc;
        c.gamma[k * 16 + j * 4 + i] = acc;
      }
  return c;
}

CurvatureJet riemann(const MetricJet& g, const ConnectionJet& conn) {
  const int n = g.n;
  const int K = g.order;
  if (K < 2) throw Error(ErrorKind::InvalidArgument, "riemann needs metric jets of order >= 2");
  const int o = K - 2;
  CurvatureJet R;
  R.n = n;
  // dGamma[v][l][j][k] = d_v Gamma^l_jk
  std::array<Jet, 256> dG;
  for (int v = 0; v < n; ++v)
    for (int l = 0; l < n; ++l)
      for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k) {
          dG[CurvatureJet::at(v, l, j, k)] = conn(l, j, k).derivative(v);
          dG[CurvatureJet::at(v, l, k, j)] = dG[CurvatureJet::at(v, l, j, k)];
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) R.up[CurvatureJet::at(i, j, k, l)] = Jet(n, o);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          Jet t = dG[CurvatureJet::at(i, l, j, k)] - dG[CurvatureJet::at(j, l, i, k)];
          for (int m = 0; m < n; ++m) {
            t.fma(conn(m, j, k), conn(l, i, m));
            t.fma(-conn(m, i, k), conn(l, j, m));
          }
          R.up[CurvatureJet::at(i, j, k, l)] = t;
          R.up[CurvatureJet::at(j, i, k, l)] = -t;
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          Jet acc(n, o);
          if (i != j) {
            for (int m = 0; m < n; ++m) acc.fma(R.up[CurvatureJet::at(i, j, k, m)], g(m, l));
          }
          R.low[CurvatureJet::at(i, j, k, l)] = acc;
        }
  return R;
}

RicciJet ricci_scalar(const CurvatureJet& R, const ConnectionJet& conn) {
  const int n = R.n;
  const int o = R.up[0].order();
  RicciJet out;
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      Jet acc(n, o);
      for (int i = 0; i < n; ++i) acc += R.up[CurvatureJet::at(i, j, k, i)];
      out.ric[j * 4 + k] = acc;
      out.ric[k * 4 + j] = acc;
    }
  out.S = Jet(n, o);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) out.S.fma(conn.ginv[j * 4 + k], out.ric[j * 4 + k]);
  return out;
}

std::array<Jet, 16> hessian_jet(const Jet& f, const ConnectionJet& conn, int n) {
  if (f.order() < 2) throw Error(ErrorKind::InvalidArgument, "hessian needs f jets of order >= 2");
  const int o = std::min(f.order() - 2, conn.gamma[0].order());
  std::array<Jet, 4> df;
  for (int i = 0; i < n; ++i) df[i] = f.derivative(i);
  std::array<Jet, 16> H;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Jet t = df[i].derivative(j).truncated(o);
      for (int k = 0; k < n; ++k) t.fma(-conn(k, i, j), df[k]);
      H[i * 4 + j] = t;
      H[j * 4 + i] = t;
    }
  return H;
}

Vec div_ricci(const RicciJet& ric, const ConnectionJet& conn, int n) {
  if (ric.ric[0].order() < 1) {
    throw Error(ErrorKind::InvalidArgument, "div_ricci needs metric jets of order >= 3");
  }
  Vec out = Vec::Zero(n);
  auto rc = [&](int a, int b) { return ric.ric[a * 4 + b].value(); };
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double nab = ric.ric[k * 4 + j].partial(i);
        for (int m = 0; m < n; ++m) {
          nab -= conn(m, i, k).value() * rc(m, j) + conn(m, i, j).value() * rc(k, m);
        }
        s += conn.ginv[i * 4 + k].value() * nab;
      }
    out[j] = s;
  }
  return out;
}

namespace {

// Fills S, dS, hess_S from an explicit expression on top of the connection.
void explicit_S(PointGeometry& geo, const Expr& e, std::span<const double> x,
                const ConnectionJet& conn, const EvalOptions& opt) {
  const int n = geo.n;
  const Jet s = eval_jet(e, x, 2, opt);
  geo.S = s.value();
  geo.has_S = true;
  geo.has_S_derivatives = true;
  geo.dS = Vec::Zero(n);
  for (int i = 0; i < n; ++i) geo.dS[i] = s.partial(i);
  geo.hess_S = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double h = s.second_partial(i, j);
      for (int k = 0; k < n; ++k) h -= conn(k, i, j).value() * geo.dS[k];
      geo.hess_S(i, j) = h;
    }
  geo.grad_S = geo.ginv * geo.dS;
  geo.lap_S = (geo.ginv * geo.hess_S).trace();
}

}  // namespace

PointGeometry compute_geometry(const SolitonSystem& sys, std::span<const double> x, Depth depth,
                               SSource source) {
  const int n = sys.dim;
  if (static_cast<int>(x.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "point dimension does not match chart");
  }
  const EvalOptions opt{sys.tolerances.get("division_floor")};
  const int K = depth == Depth::First ? 1 : depth == Depth::Curvature ? 2 : 4;
  const int fo = depth == Depth::First ? 2 : 3;

  PointGeometry geo;
  geo.n = n;
  geo.depth = depth;
  geo.x = Vec::Map(x.data(), n);

  const MetricJet mj = metric_jet(sys, x, K);
  const ConnectionJet conn = christoffel(mj, sys.tolerances.get("spd"));
  geo.g = Mat(n, n);
  geo.ginv = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      geo.g(i, j) = mj(i, j).value();
      geo.ginv(i, j) = conn.ginv[i * 4 + j].value();
    }
  geo.gamma.n = n;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) geo.gamma(k, i, j) = conn(k, i, j).value();

  const Jet fj = eval_jet(sys.f, x, fo, opt);
  geo.f = fj.value();
  geo.df = Vec(n);
  for (int i = 0; i < n; ++i) geo.df[i] = fj.partial(i);
  geo.grad_f = geo.ginv * geo.df;
  const auto hf = hessian_jet(fj, conn, n);
  geo.hess_f = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) geo.hess_f(i, j) = hf[i * 4 + j].value();
  geo.H_f = geo.ginv * geo.hess_f;
  geo.lap_f = geo.H_f.trace();

  const int jo = depth == Depth::First ? 0 : 1;
  std::array<Jet, 16> Jj;
  geo.J = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jj[i * 4 + j] = eval_jet(sys.complex(i, j), x, jo, opt);
      geo.J(i, j) = Jj[i * 4 + j].value();
    }
  geo.omega = geo.g * geo.J;

  if (depth != Depth::First) {
    const CurvatureJet R = riemann(mj, conn);
    const RicciJet ric = ricci_scalar(R, conn);
    geo.Rup.n = geo.R.n = n;
    for (int i = 0; i < 256; ++i) {
      geo.Rup.v[i] = R.up[i].value();
      geo.R.v[i] = R.low[i].value();
    }
    geo.ric = Mat(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) geo.ric(i, j) = ric.ric[i * 4 + j].value();
    geo.scal = ric.S.value();

    geo.nabla_hess_f.n = n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double v = hf[j * 4 + k].partial(i);
          for (int m = 0; m < n; ++m) {
            v -= geo.gamma(m, i, j) * geo.hess_f(m, k) + geo.gamma(m, i, k) * geo.hess_f(j, m);
          }
          geo.nabla_hess_f(i, j, k) = v;
        }

    geo.nabla_J.n = n;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double v = Jj[a * 4 + b].partial(i);
          for (int c = 0; c < n; ++c) {
            v += geo.gamma(a, i, c) * geo.J(c, b) - geo.gamma(c, i, b) * geo.J(a, c);
          }
          geo.nabla_J(i, a, b) = v;
        }

    // omega_bc = g_bm J^m_c as order-1 jets, then the cyclic sum.
    std::array<Jet, 16> om;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        Jet acc(n, 1);
        for (int m = 0; m < n; ++m) acc.fma(mj(b, m), Jj[m * 4 + c]);
        om[b * 4 + c] = acc;
      }
    geo.d_omega.n = n;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          geo.d_omega(a, b, c) =
              om[b * 4 + c].partial(a) + om[c * 4 + a].partial(b) + om[a * 4 + b].partial(c);
        }

    if (depth == Depth::Full) {
      geo.div_ric = div_ricci(ric, conn, n);
    }

    if (sys.kind == SystemKind::Soliton) {
      geo.S = geo.scal;
      geo.has_S = true;
      if (depth == Depth::Full) {
        geo.has_S_derivatives = true;
        geo.dS = Vec(n);
        for (int i = 0; i < n; ++i) geo.dS[i] = ric.S.partial(i);
        geo.grad_S = geo.ginv * geo.dS;
        geo.hess_S = Mat(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double h = ric.S.second_partial(i, j);
            for (int k = 0; k < n; ++k) h -= geo.gamma(k, i, j) * geo.dS[k];
            geo.hess_S(i, j) = h;
          }
        geo.lap_S = (geo.ginv * geo.hess_S).trace();
      }
    }
  }

  if (const Expr* f2 = sys.explicit_second()) {
    explicit_S(geo, *f2, x, conn, opt);
  } else if (source == SSource::Aux && sys.aux_S) {
    explicit_S(geo, *sys.aux_S, x, conn, opt);
  }
  return geo;
}

double riemann_form(const PointGeometry& geo, const Vec& X, const Vec& Y, const Vec& W,
                    const Vec& Z) {
  const int n = geo.n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    if (X[i] == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      if (Y[j] == 0.0) continue;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += geo.R(i, j, k, l) * X[i] * Y[j] * W[k] * Z[l];
    }
  }
  return s;
}

double sectional(const Vec& X, const Vec& Y, const PointGeometry& geo) {
  const double xx = X.dot(geo.g * X), yy = Y.dot(geo.g * Y), xy = X.dot(geo.g * Y);
  const double denom = xx * yy - xy * xy;
  if (!(denom >= 1e-12 * xx * yy) || xx * yy == 0.0) {
    throw Error(ErrorKind::DegeneratePlane, "vectors span a degenerate plane");
  }
  return riemann_form(geo, X, Y, Y, X) / denom;
}

double RiemannSymmetryReport::max() const {
  return std::max({antisym_first, antisym_second, pair_symmetry, bianchi});
}

RiemannSymmetryReport riemann_symmetries(const PointGeometry& geo) {
  const int n = geo.n;
  const double scale = std::max(geo.R.norm(), 1e-300);
  RiemannSymmetryReport r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double v = geo.R(i, j, k, l);
          r.antisym_first = std::max(r.antisym_first, std::fabs(v + geo.R(j, i, k, l)));
          r.antisym_second = std::max(r.antisym_second, std::fabs(v + geo.R(i, j, l, k)));
          r.pair_symmetry = std::max(r.pair_symmetry, std::fabs(v - geo.R(k, l, i, j)));
          r.bianchi = std::max(r.bianchi, std::fabs(v + geo.R(j, k, i, l) + geo.R(k, i, j, l)));
        }
  if (geo.R.norm() > 0.0) {
    r.antisym_first /= scale;
    r.antisym_second /= scale;
    r.pair_symmetry /= scale;
    r.bianchi /= scale;
  }
  return r;
}

double metric_compatibility_residual(const SolitonSystem& sys, std::span<const double> x) {
  const int n = sys.dim;
  const MetricJet mj = metric_jet(sys, x, 1);
  const ConnectionJet conn = christoffel(mj, sys.tolerances.get("spd"));
  double r = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = mj(i, j).partial(k);
        for (int l = 0; l < n; ++l) {
          v -= mj(l, j).value() * conn(l, k, i).value() + mj(i, l).value() * conn(l, k, j).value();
        }
        r = std::max(r, std::fabs(v));
        r = std::max(r, std::fabs(conn(k, i, j).value() - conn(k, j, i).value()));
      }
  return r;
}

}  // namespace kgrs
