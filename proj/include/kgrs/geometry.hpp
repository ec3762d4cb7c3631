#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>

#include "kgrs/jet.hpp"
#include "kgrs/system.hpp"

namespace kgrs {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;

// Dense rank-3 / rank-4 tables over a chart of dimension <= 4.
struct Tensor3 {
  int n = 4;
  std::array<double, 64> v{};
  double& operator()(int i, int j, int k) { return v[(i * 4 + j) * 4 + k]; }
  double operator()(int i, int j, int k) const { return v[(i * 4 + j) * 4 + k]; }
};

struct Tensor4 {
  int n = 4;
  std::array<double, 256> v{};
  double& operator()(int i, int j, int k, int l) { return v[((i * 4 + j) * 4 + k) * 4 + l]; }
  double operator()(int i, int j, int k, int l) const { return v[((i * 4 + j) * 4 + k) * 4 + l]; }
  double norm() const;
};

// Metric entries as jets at a point.
struct MetricJet {
  int n = 4;
  int order = 0;
  std::array<Jet, 16> g;
  const Jet& operator()(int i, int j) const { return g[i * 4 + j]; }
};

MetricJet metric_jet(const SolitonSystem& sys, std::span<const double> x, int order);

// Inverse metric (order K) and Christoffel symbols Gamma^k_ij (order K-1),
// stored at [k*16 + i*4 + j].
struct ConnectionJet {
  int n = 4;
  std::array<Jet, 16> ginv;
  std::array<Jet, 64> gamma;
  const Jet& operator()(int k, int i, int j) const { return gamma[k * 16 + i * 4 + j]; }
};

// Throws SingularMetric when the order-0 matrix is not positive definite.
ConnectionJet christoffel(const MetricJet& g, double spd_floor = 1e-10);

// up[i][j][k][l]: the d_l coefficient of R(d_i, d_j) d_k with
// R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]; low = g(R(d_i,d_j)d_k, d_l).
// Both of order K-2.
struct CurvatureJet {
  int n = 4;
  std::array<Jet, 256> up;
  std::array<Jet, 256> low;
  static int at(int i, int j, int k, int l) { return ((i * 4 + j) * 4 + k) * 4 + l; }
};

CurvatureJet riemann(const MetricJet& g, const ConnectionJet& conn);

struct RicciJet {
  std::array<Jet, 16> ric;  // Rc(d_j, d_k) = sum_i R(e_i, d_j, d_k, e_i)
  Jet S;
};

RicciJet ricci_scalar(const CurvatureJet& R, const ConnectionJet& conn);

// Hess f(d_i, d_j) = d_i d_j f - Gamma^k_ij d_k f as jets, of order
// min(f.order - 2, K - 1).
std::array<Jet, 16> hessian_jet(const Jet& f, const ConnectionJet& conn, int n);

// Covariant divergence (delta Rc)_j = g^{ik} (nabla_i Rc)_kj at the point.
Vec div_ricci(const RicciJet& ric, const ConnectionJet& conn, int n);

enum class Depth {
  First,      // g, Gamma, grad f, Hess f, J, omega
  Curvature,  // + Riemann, Ricci, S, nabla Hess f, nabla J, d omega
  Full,       // + grad S, Hess S, Laplacian of S, delta Rc
};

enum class SSource {
  Metric,  // scalar curvature from the metric (or F2 for Hamiltonian systems)
  Aux,     // closed-form auxiliary S when present (falls back to Metric)
};

// Every pointwise tensor the checks need. Index conventions as above;
// matrices over (i, j) are covariant unless stated otherwise.
struct PointGeometry {
  int n = 4;
  Depth depth = Depth::First;
  Vec x;
  Mat g, ginv;
  Tensor3 gamma;  // gamma(k, i, j) = Gamma^k_ij
  double f = 0.0;
  Vec df;        // d_i f
  Vec grad_f;    // g^{ij} d_j f
  Mat hess_f;    // covariant
  Mat H_f;       // (1,1): g^{-1} Hess f
  double lap_f = 0.0;
  Mat J;         // J^i_j
  Mat omega;     // omega_ij = g_im J^m_j = omega(d_i, d_j)

  // Curvature and beyond.
  Tensor4 Rup, R;
  Mat ric;
  double scal = 0.0;     // scalar curvature of g
  Tensor3 nabla_hess_f;  // (nabla_i Hess f)(d_j, d_k)
  Tensor3 nabla_J;       // (nabla_i J)^a_b at (i, a, b)
  Tensor3 d_omega;       // (d omega)_abc

  // Second moment-map component: scalar curvature, the auxiliary closed form,
  // or F2. Derivatives are present at Full depth, or at any depth when S comes
  // from an explicit expression.
  double S = 0.0;
  bool has_S = false;
  bool has_S_derivatives = false;
  Vec dS, grad_S;
  Mat hess_S;
  double lap_S = 0.0;
  Vec div_ric;
};

PointGeometry compute_geometry(const SolitonSystem& sys, std::span<const double> x, Depth depth,
                               SSource source = SSource::Metric);

// R(X,Y,Y,X) / (|X|^2|Y|^2 - g(X,Y)^2). Throws DegeneratePlane.
double sectional(const Vec& X, const Vec& Y, const PointGeometry& geo);

// R(X, Y, W, Z) for vectors.
double riemann_form(const PointGeometry& geo, const Vec& X, const Vec& Y, const Vec& W,
                    const Vec& Z);

// Symmetry / Bianchi residuals relative to the tensor norm.
struct RiemannSymmetryReport {
  double antisym_first = 0.0;   // R_ijkl + R_jikl
  double antisym_second = 0.0;  // R_ijkl + R_ijlk
  double pair_symmetry = 0.0;   // R_ijkl - R_klij
  double bianchi = 0.0;         // R_ijkl + R_jkil + R_kijl
  double max() const;
};
RiemannSymmetryReport riemann_symmetries(const PointGeometry& geo);

// |d_k g_ij - g_lj Gamma^l_ki - g_il Gamma^l_kj| and torsion |Gamma^k_ij - Gamma^k_ji|.
double metric_compatibility_residual(const SolitonSystem& sys, std::span<const double> x);

}  // namespace kgrs
