#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace kgrs {

using MatX = Eigen::MatrixXd;

struct SymplecticTolerances {
  double pairing = 1e-7;  // eigenvalues closer than this (relative) count as equal
  double zero = 1e-7;     // |lambda| below this (relative) counts as zero
  double commute = 1e-6;  // relative commutator norm
  double span = 1e-7;     // relative singular-value floor for the span dimension
};

// Canonical Omega = [[0, I], [-I, 0]] in coordinates (x_1..x_n, y_1..y_n).
MatX canonical_omega(int n2);

// max |A^T Omega + Omega A|. Throws DimensionMismatch.
double in_sp(const MatX& A, const MatX& omega);

struct GroupMembership {
  double residual = 0.0;  // max |A^T Omega A - Omega|
  double det = 0.0;
};
GroupMembership is_symplectic_group(const MatX& A, const MatX& omega);

// max over lambda in {+-2, +-1/2, 3} of |P(l) - l^{2n} P(1/l)| / max(1, |P(l)|).
double char_poly_reciprocity(const MatX& A);

// L = Omega^{-1} H.
MatX linearization(const MatX& omega, const MatX& H);

struct EigenPattern {
  int j1 = 0;  // elliptic pairs +-i alpha
  int j2 = 0;  // hyperbolic pairs +-beta
  int j3 = 0;  // focus-focus quadruples
  int z = 0;   // eigenvalues counted as zero
  bool distinct = false;  // all eigenvalues pairwise separated
  double min_gap = 0.0;   // smallest pairwise eigenvalue distance / scale
  std::vector<std::complex<double>> eigenvalues;
  std::string triple() const;  // "j1,j2,j3"
};

// 2x2 and 4x4 use the even characteristic polynomial; larger sizes fall back
// to a general eigen-decomposition with pairing.
EigenPattern eig_pattern(const MatX& L, const SymplecticTolerances& tol = {});

enum class SingularityType { EE, EH, HH, FF, Degenerate };
const char* singularity_type_name(SingularityType t);

struct CartanVerdict {
  bool commute = false;
  double commutator = 0.0;  // relative
  int span = 0;
  std::vector<double> singular_values;
  bool regular_found = false;
  double a = 0.0, b = 0.0;  // regular element a L1 + b L2
  EigenPattern pattern;     // of the regular element (or the best candidate)
  SingularityType type = SingularityType::Degenerate;
  std::string reason;       // for Degenerate: span-deficient, no-regular-element, zero-eigenvalue
};

// Throws NotCommuting when the relative commutator exceeds tol.commute.
CartanVerdict cartan_verdict(const MatX& H1, const MatX& H2, const MatX& omega,
                             const SymplecticTolerances& tol = {});

enum class Rank1Type { Elliptic, Hyperbolic, Degenerate };
const char* rank1_type_name(Rank1Type t);

struct ReducedPattern {
  Rank1Type type = Rank1Type::Degenerate;
  MatX V;        // basis of the omega-orthogonal complement (columns)
  MatX H_V;      // restricted Hessian
  double lambda_squared = 0.0;  // eigenvalues of the reduced linearization are +-sqrt(.)
  EigenPattern pattern;
};

// W holds two columns spanning an omega-nondegenerate plane; throws DegenerateSubspace.
ReducedPattern reduced_rank1_pattern(const MatX& H, const MatX& omega, const MatX& W,
                                     const SymplecticTolerances& tol = {});

// The four Cartan families in coordinates (x1, x2, y1, y2).
enum class CartanFamily { EE, EH, HH, FF };
MatX cartan_family_element(CartanFamily family, double A, double B);

}  // namespace kgrs
