#include "kgrs/symplectic.hpp"

#include <algorithm>
#include <cmath>

#include "kgrs/error.hpp"

namespace kgrs {

namespace {

void require_square(const MatX& A, const MatX& omega) {
  if (A.rows() != A.cols() || omega.rows() != omega.cols() || A.rows() != omega.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "matrix and Omega dimensions differ");
  }
}

double max_abs(const MatX& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

MatX canonical_omega(int n2) {
  if (n2 % 2 != 0) throw Error(ErrorKind::DimensionMismatch, "symplectic dimension must be even");
  const int n = n2 / 2;
  MatX om = MatX::Zero(n2, n2);
  om.topRightCorner(n, n) = MatX::Identity(n, n);
  om.bottomLeftCorner(n, n) = -MatX::Identity(n, n);
  return om;
}

double in_sp(const MatX& A, const MatX& omega) {
  require_square(A, omega);
  return max_abs(A.transpose() * omega + omega * A);
}

GroupMembership is_symplectic_group(const MatX& A, const MatX& omega) {
  require_square(A, omega);
  return {max_abs(A.transpose() * omega * A - omega), A.determinant()};
}

double char_poly_reciprocity(const MatX& A) {
  const int n2 = static_cast<int>(A.rows());
  const MatX I = MatX::Identity(n2, n2);
  auto P = [&](double l) { return (l * I - A).determinant(); };
  double worst = 0.0;
  for (double l : {2.0, -2.0, 0.5, -0.5, 3.0}) {
    const double lhs = P(l), rhs = std::pow(l, n2) * P(1.0 / l);
    worst = std::max(worst, std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs)));
  }
  return worst;
}

MatX linearization(const MatX& omega, const MatX& H) {
  require_square(H, omega);
  Eigen::FullPivLU<MatX> lu(omega);
  if (!lu.isInvertible() || std::fabs(omega.determinant()) < 1e-12) {
    throw Error(ErrorKind::DegenerateSubspace, "Omega is not invertible");
  }
  return lu.solve(H);
}

std::string EigenPattern::triple() const {
  return std::to_string(j1) + "," + std::to_string(j2) + "," + std::to_string(j3);
}

namespace {

void finish_pattern(EigenPattern& p, double sr, const SymplecticTolerances& tol) {
  const auto& ev = p.eigenvalues;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ev.size(); ++i)
    for (std::size_t j = i + 1; j < ev.size(); ++j) gap = std::min(gap, std::abs(ev[i] - ev[j]));
  p.min_gap = gap / sr;
  p.distinct = p.min_gap > tol.pairing;
}

// Classify the pair +-sqrt(mu) and report how it counts.
enum class PairKind { Zero, Elliptic, Hyperbolic, Focus };
PairKind classify_pair(std::complex<double> lambda, double sr, const SymplecticTolerances& tol) {
  const double eps = tol.zero * sr;
  if (std::abs(lambda) < eps) return PairKind::Zero;
  if (std::fabs(lambda.real()) < eps) return PairKind::Elliptic;
  if (std::fabs(lambda.imag()) < eps) return PairKind::Hyperbolic;
  return PairKind::Focus;
}

}  // namespace

EigenPattern eig_pattern(const MatX& L, const SymplecticTolerances& tol) {
  const int n2 = static_cast<int>(L.rows());
  if (L.rows() != L.cols() || n2 % 2 != 0) {
    throw Error(ErrorKind::DimensionMismatch, "eig_pattern needs an even square matrix");
  }
  EigenPattern p;
  const double sr = std::max(1.0, max_abs(L));
  std::vector<std::complex<double>> mus;
  if (n2 == 2) {
    mus.push_back(-L.determinant());
  } else if (n2 == 4) {
    // Even characteristic polynomial l^4 + p l^2 + q in mu = l^2.
    const double pp = -0.5 * (L * L).trace();
    const double q = L.determinant();
    const double disc = pp * pp - 4.0 * q;
    if (disc < 0.0) {
      const double im = 0.5 * std::sqrt(-disc);
      mus.push_back({-0.5 * pp, im});
      mus.push_back({-0.5 * pp, -im});
    } else {
      const double sq = std::sqrt(disc);
      const double large = -0.5 * (pp + (pp >= 0.0 ? sq : -sq));
      const double small = large != 0.0 ? q / large : 0.0;
      mus.push_back(large);
      mus.push_back(small);
    }
  }
  if (!mus.empty()) {
    int focus = 0;
    for (const auto& mu : mus) {
      const std::complex<double> lam = std::sqrt(mu);
      p.eigenvalues.push_back(lam);
      p.eigenvalues.push_back(-lam);
      switch (classify_pair(lam, sr, tol)) {
        case PairKind::Zero: p.z += 2; break;
        case PairKind::Elliptic: ++p.j1; break;
        case PairKind::Hyperbolic: ++p.j2; break;
        case PairKind::Focus: ++focus; break;
      }
    }
    p.j3 = focus / 2;
    if (focus % 2) ++p.j1;  // unreachable with exact conjugate roots; keep counts total
    finish_pattern(p, sr, tol);
    return p;
  }

  Eigen::EigenSolver<MatX> es(L);
  for (int i = 0; i < n2; ++i) p.eigenvalues.push_back(es.eigenvalues()[i]);
  int ell = 0, hyp = 0, foc = 0;
  for (const auto& lam : p.eigenvalues) {
    switch (classify_pair(lam, sr, tol)) {
      case PairKind::Zero: ++p.z; break;
      case PairKind::Elliptic: ++ell; break;
      case PairKind::Hyperbolic: ++hyp; break;
      case PairKind::Focus: ++foc; break;
    }
  }
  p.j1 = ell / 2;
  p.j2 = hyp / 2;
  p.j3 = foc / 4;
  finish_pattern(p, sr, tol);
  return p;
}

const char* singularity_type_name(SingularityType t) {
  switch (t) {
    case SingularityType::EE: return "EE";
    case SingularityType::EH: return "EH";
    case SingularityType::HH: return "HH";
    case SingularityType::FF: return "FF";
    case SingularityType::Degenerate: return "DEGENERATE";
  }
  return "?";
}

const char* rank1_type_name(Rank1Type t) {
  switch (t) {
    case Rank1Type::Elliptic: return "elliptic";
    case Rank1Type::Hyperbolic: return "hyperbolic";
    case Rank1Type::Degenerate: return "DEGENERATE";
  }
  return "?";
}

CartanVerdict cartan_verdict(const MatX& H1, const MatX& H2, const MatX& omega,
                             const SymplecticTolerances& tol) {
  require_square(H1, omega);
  require_square(H2, omega);
  const MatX L1 = linearization(omega, H1);
  const MatX L2 = linearization(omega, H2);
  CartanVerdict v;
  const double n1 = L1.norm(), n2 = L2.norm();
  const MatX comm = L1 * L2 - L2 * L1;
  v.commutator = (n1 > 0.0 && n2 > 0.0) ? comm.norm() / (n1 * n2) : 0.0;
  if (v.commutator > tol.commute) {
    throw Error(ErrorKind::NotCommuting, "linearizations do not commute (relative commutator " +
                                             std::to_string(v.commutator) + ")");
  }
  v.commute = true;

  MatX stacked(L1.size(), 2);
  stacked.col(0) = Eigen::Map<const Eigen::VectorXd>(L1.data(), L1.size());
  stacked.col(1) = Eigen::Map<const Eigen::VectorXd>(L2.data(), L2.size());
  Eigen::JacobiSVD<MatX> svd(stacked);
  const auto sv = svd.singularValues();
  v.singular_values = {sv[0], sv[1]};
  const double floor = tol.span * std::max(1.0, sv[0]);
  v.span = sv[0] <= floor ? 0 : (sv[1] <= tol.span * sv[0] ? 1 : 2);
  if (v.span < 2) {
    v.reason = "span-deficient";
    if (v.span == 1) {
      const MatX& L = n1 >= n2 ? L1 : L2;
      v.pattern = eig_pattern(L, tol);
    }
    return v;
  }

  const MatX U1 = L1 / n1, U2 = L2 / n2;
  auto gap_at = [&](double th) {
    return eig_pattern(std::cos(th) * U1 + std::sin(th) * U2, tol).min_gap;
  };
  const int samples = 64;
  const double pi = std::acos(-1.0);
  double best = -1.0, best_th = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double th = pi * k / samples;
    const double g = gap_at(th);
    if (g > best) {
      best = g;
      best_th = th;
    }
  }
  // Golden-section refinement of the minimum eigenvalue gap.
  double lo = best_th - pi / samples, hi = best_th + pi / samples;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
  double gc = gap_at(c), gd = gap_at(d);
  for (int it = 0; it < 40; ++it) {
    if (gc > gd) {
      hi = d;
      d = c;
      gd = gc;
      c = hi - r * (hi - lo);
      gc = gap_at(c);
    } else {
      lo = c;
      c = d;
      gc = gd;
      d = lo + r * (hi - lo);
      gd = gap_at(d);
    }
  }
  const double refined = 0.5 * (lo + hi);
  if (gap_at(refined) > best) best_th = refined;

  v.pattern = eig_pattern(std::cos(best_th) * U1 + std::sin(best_th) * U2, tol);
  v.a = std::cos(best_th) / n1;
  v.b = std::sin(best_th) / n2;
  v.regular_found = v.pattern.distinct && v.pattern.z == 0;
  if (!v.regular_found) {
    v.reason = v.pattern.z > 0 ? "zero-eigenvalue" : "no-regular-element";
    return v;
  }
  const auto& p = v.pattern;
  if (p.j1 + p.j2 + 2 * p.j3 != static_cast<int>(omega.rows()) / 2) {
    v.reason = "no-regular-element";
    return v;
  }
  if (p.j1 == 2) v.type = SingularityType::EE;
  else if (p.j1 == 1 && p.j2 == 1) v.type = SingularityType::EH;
  else if (p.j2 == 2) v.type = SingularityType::HH;
  else if (p.j3 == 1) v.type = SingularityType::FF;
  else v.reason = "no-regular-element";
  return v;
}

ReducedPattern reduced_rank1_pattern(const MatX& H, const MatX& omega, const MatX& W,
                                     const SymplecticTolerances& tol) {
  require_square(H, omega);
  const int n2 = static_cast<int>(omega.rows());
  if (W.rows() != n2 || W.cols() != 2) {
    throw Error(ErrorKind::DimensionMismatch, "W must hold two column vectors");
  }
  const double w12 = W.col(0).dot(omega * W.col(1));
  const double wn = W.col(0).norm() * W.col(1).norm();
  if (!(std::fabs(w12) > 1e-10 * wn) || wn == 0.0) {
    throw Error(ErrorKind::DegenerateSubspace, "W is not omega-nondegenerate");
  }
  const MatX M = W.transpose() * omega;  // rows: omega(w_k, .)
  Eigen::JacobiSVD<MatX> svd(M, Eigen::ComputeFullV);
  ReducedPattern r;
  r.V = svd.matrixV().rightCols(n2 - 2);
  r.H_V = r.V.transpose() * H * r.V;
  const MatX om_V = r.V.transpose() * omega * r.V;
  const MatX L = linearization(om_V, r.H_V);
  r.lambda_squared = -L.determinant();
  r.pattern = eig_pattern(L, tol);
  if (r.pattern.z > 0 || !r.pattern.distinct) r.type = Rank1Type::Degenerate;
  else if (r.pattern.j1 == (n2 - 2) / 2) r.type = Rank1Type::Elliptic;
  else if (r.pattern.j2 == (n2 - 2) / 2) r.type = Rank1Type::Hyperbolic;
  return r;
}

MatX cartan_family_element(CartanFamily family, double A, double B) {
  MatX M = MatX::Zero(4, 4);
  switch (family) {
    case CartanFamily::EE:
      M(0, 2) = -A;
      M(1, 3) = -B;
      M(2, 0) = A;
      M(3, 1) = B;
      break;
    case CartanFamily::EH:
      M(0, 0) = -A;
      M(1, 3) = -B;
      M(2, 2) = A;
      M(3, 1) = B;
      break;
    case CartanFamily::HH:
      M(0, 0) = -A;
      M(1, 1) = -B;
      M(2, 2) = A;
      M(3, 3) = B;
      break;
    case CartanFamily::FF:
      M(0, 0) = -A;
      M(0, 1) = -B;
      M(1, 0) = B;
      M(1, 1) = -A;
      M(2, 2) = A;
      M(2, 3) = -B;
      M(3, 2) = B;
      M(3, 3) = A;
      break;
  }
  return M;
}

}  // namespace kgrs
