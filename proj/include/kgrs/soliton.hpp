#pragma once

#include <string>
#include <vector>

#include "kgrs/geometry.hpp"
#include "kgrs/system.hpp"

namespace kgrs {

using PointSet = std::vector<std::vector<double>>;

// One named residual against its threshold.
struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

Check make_check(std::string name, double value, double tolerance, std::string note = {});

struct KahlerReport {
  double nabla_J = 0.0;     // sup |nabla J|
  double d_omega = 0.0;     // sup |d omega| over the four cyclic components
  double J_squared = 0.0;   // sup |J^2 + Id|
  double hermitian = 0.0;   // sup |g(J., J.) - g| relative to |g|
  double tolerance = 0.0;
  bool passed = false;
};
KahlerReport kahler_verify(const SolitonSystem& sys, const PointSet& samples);

struct SolitonResidual {
  std::vector<double> per_point;  // max-norm of Rc + Hess f - lambda g
  double sup = 0.0;
  double metric_scale = 0.0;      // sup |g| over the samples
  double tolerance = 0.0;
  bool passed = false;
};
SolitonResidual soliton_residual(const SolitonSystem& sys, const PointSet& samples);

struct IdentityReport {
  bool gated = false;   // soliton residual too large: identities not evaluated
  double trace_identity = 0.0;     // sup |S + Lap f - n lambda|
  double ricci_gradient = 0.0;     // sup |Rc(grad f) - grad S / 2|
  double ricci_divergence = 0.0; // sup |delta Rc - grad S / 2|
  double hamilton_std = 0.0; // sample standard deviation of S + |grad f|^2 - 2 lambda f
  double hamilton_variance = 0.0;
  double hamilton_mean = 0.0;
  double scalar_laplacian = 0.0;     // sup |Lap S + 2|Rc|^2 - <grad f, grad S> - 2 lambda S|
  double hess_f_cross = 0.0; // sup |Hess f(grad f, J grad S)|
  double min_S = 0.0;
  double f_min = 0.0, f_max = 0.0;  // sampled extrema of f (no global claim)
  double hess_J_commutator = 0.0;   // sup |H_f J - J H_f|
  double tolerance = 0.0;
  double variance_tolerance = 0.0;
  bool passed = false;
};
IdentityReport identity_suite(const SolitonSystem& sys, const PointSet& samples);

struct PoissonReport {
  double sup = 0.0;  // sup |omega(grad f, grad S)|
  double tolerance = 0.0;
  bool passed = false;
};
PoissonReport poisson_bracket_fS(const SolitonSystem& sys, const PointSet& samples,
                                 SSource source = SSource::Metric);

struct KillingReport {
  double lie_derivative = 0.0;  // |L_{J grad f} g|
  double nabla_J_grad_f = 0.0;         // |A_{J grad f} + J H_f|
  double nabla_hess_f = 0.0;         // |nabla_X H_f + J R(X, J grad f)| over coordinate X
  double ricci_J_defect = 0.0;  // |Rc(J., J.) - Rc|
  double hess_J_defect = 0.0;   // |Hess f(J., J.) - Hess f|
  double tolerance = 0.0;
  bool passed = false;
};
KillingReport killing_suite(const SolitonSystem& sys, const PointSet& samples);

struct HessSReport {
  double sup = 0.0;  // sup |Hess S - (2 lambda Hess f - 2 Hess^2 f - 2 R(., J grad f, ., J grad f))|
  double tolerance = 0.0;
  bool passed = false;
};
HessSReport hess_S_formula_check(const SolitonSystem& sys, const PointSet& samples);

// Right-hand side of the Hess S formula at a point (covariant matrix).
Mat hess_S_formula(const PointGeometry& geo, double lambda);

struct RadialReport {
  double residual = 0.0;      // |(nabla_{grad f} Hess f)(E,E) - |grad f|^2(-Rc(E,E) + sect(E,JE))|
  double lhs = 0.0, rhs = 0.0;
  double J_invariance = 0.0;  // |(nabla_X Hess f)(J., J.) - nabla_X Hess f| over coordinate X
};
// E is a g-unit vector orthogonal to grad f and J grad f; throws BadFrame.
RadialReport radial_hessian_identity(const SolitonSystem& sys, std::span<const double> point,
                                     const Vec& E);

}  // namespace kgrs
