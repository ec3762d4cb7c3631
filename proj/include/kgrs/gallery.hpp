#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kgrs/system.hpp"

namespace kgrs {

struct ExpectedVerdict {
  std::string check;     // e.g. "rank0[0].verdict"
  std::string expected;  // e.g. "EE"
};

// A closed-form system together with its known ground truth.
struct GallerySpec {
  std::string name;
  SolitonSystem system;
  std::vector<std::vector<double>> rank0;       // known rank-0 locations
  std::vector<std::pair<double, double>> mu;    // paired Hess f eigenvalues there
  std::vector<Expr> branch_conditions;          // rank-1 set = union of zero sets (soliton only)
  std::vector<ExpectedVerdict> expected;
};

GallerySpec gaussian_shrinker(double lambda, double half_width = 3.0);

// g = a delta/(1+r1^2) + b delta/(1+r2^2), f = -log(1+r1^2) - log(1+r2^2).
GallerySpec cigar_product(double a, double b, double half_width = 10.0);

enum class NormalForm { EllipticElliptic, Rank1Elliptic, Rank1Hyperbolic, FocusFocus };
GallerySpec normal_form_system(NormalForm kind);

// Canonical catalogue names; parametric forms "gaussian_shrinker_L" and
// "cigar_product_A_B" are accepted by gallery_by_name as well.
std::vector<std::string> gallery_names();
GallerySpec gallery_by_name(const std::string& name);

// Max |aux S - pipeline S| over fixed-seed samples (0 when there is no aux S).
double gallery_self_test(const GallerySpec& spec, int samples = 100);

}  // namespace kgrs
