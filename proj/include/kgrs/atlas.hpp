#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "kgrs/geometry.hpp"
#include "kgrs/symplectic.hpp"
#include "kgrs/system.hpp"

namespace kgrs {

enum class DegeneracyReason {
  None,
  HessMultipleOfIdentity,
  ZeroEigenvalue,
  SpanDeficient,
  NoRegularElement,
  ReducedZero,
  ExcessDimension,
};
const char* degeneracy_reason_name(DegeneracyReason r);

struct AtlasOptions {
  int rank0_seeds_per_axis = 9;
  int rank1_grid = 13;
  int max_rank1_seeds = 256;
  int newton_max_iterations = 60;
  double dedupe_radius = 1e-6;
  double trace_tolerance = 1e-10;
  double trace_max_step = 0.05;   // arclength units
  int trace_max_steps = 4000;
  int max_degenerate_traces = 2;
  SymplecticTolerances symplectic;
};

struct NewtonInfo {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

struct SingularPointRecord {
  std::vector<double> x;
  int rank = 0;
  std::string verdict;  // EE/EH/HH/FF, elliptic/hyperbolic, or DEGENERATE
  DegeneracyReason reason = DegeneracyReason::None;
  std::vector<std::complex<double>> eigenvalues;  // of the regular / reduced linearization
  std::string triple;                             // rank 0: "j1,j2,j3"
  double mu1 = 0.0, mu2 = 0.0;                    // rank 0: paired Hess f eigenvalues
  std::vector<double> hess_f_eigenvalues;         // w.r.t. g, ascending
  NewtonInfo newton;
  double grad_f_norm = 0.0;
  double wedge = 0.0;
  int singular_dimension = -1;   // rank 1
  double kappa = 0.0;            // rank 1: h = S - kappa f
  std::string shortcut_verdict;  // rank 0, soliton systems
  std::string cartan_verdict;    // rank 0
  std::string label() const;     // "EE" or "DEGENERATE(reason)"
};

struct MomentRank {
  int rank = 2;
  std::array<double, 2> singular_values{};  // of dPhi in an orthonormal frame
  double grad_f_norm = 0.0;
  double grad_S_norm = 0.0;
  double wedge = 0.0;  // |df ^ dS| / (|df||dS|), 0 when dS = 0
};

// Absolute rank-0 threshold: tol * (1 + |lambda|) * domain scale.
double rank0_threshold(const SolitonSystem& sys);

MomentRank moment_rank(const SolitonSystem& sys, std::span<const double> x,
                       SSource source = SSource::Metric);

std::vector<SingularPointRecord> find_rank0(const SolitonSystem& sys, const AtlasOptions& opt = {});

// Both classification paths; throws CrossCheckMismatch if they disagree.
SingularPointRecord classify_rank0(const SolitonSystem& sys, std::span<const double> x,
                                   const AtlasOptions& opt = {});

struct Rank1Seeds {
  std::vector<std::vector<double>> points;
  bool dependent_case = false;     // most grid points satisfy the wedge condition
  double qualifying_fraction = 0.0;
  int grid_points = 0;
};
Rank1Seeds find_rank1_seeds(const SolitonSystem& sys, const AtlasOptions& opt = {});

SingularPointRecord classify_rank1(const SolitonSystem& sys, std::span<const double> x,
                                   const AtlasOptions& opt = {});

int singular_set_dimension(const SolitonSystem& sys, std::span<const double> x);

// Brute-force check of the rank-1 type: S is sampled on the f-level set in a
// small transverse disk. Returns "min", "max", "saddle", or "flat".
std::string level_set_oracle(const SolitonSystem& sys, std::span<const double> x,
                             double radius = 1e-2, int samples = 32);

enum class EndKind { HitsRank0, ExitsDomain, GradientBelowFloor, StepLimit };
const char* end_kind_name(EndKind k);

struct BranchEnd {
  EndKind kind = EndKind::ExitsDomain;
  int rank0_index = -1;
  std::vector<double> point;
};

struct TracePoint {
  std::vector<double> x;
  double s = 0.0;  // signed arclength from the seed
  double f = 0.0, S = 0.0;
  double fp = 0.0, fpp = 0.0, fppp = 0.0;
  double wedge = 0.0;
};

struct BranchRecord {
  std::vector<double> seed;
  std::string family;  // verdict label of the seed
  std::vector<TracePoint> points;  // ordered by s
  BranchEnd backward, forward;     // decreasing / increasing f
  double max_wedge = 0.0;
  bool membership_preserved = false;
};

// Throws StepFailure if the adaptive step underflows.
BranchRecord trace_branch(const SolitonSystem& sys, std::span<const double> seed,
                          const std::vector<SingularPointRecord>& rank0,
                          const AtlasOptions& opt = {});

struct BranchGeometryReport {
  double total_geodesy = 0.0;  // |II| of span(grad f, J grad f)
  double curvature = 0.0;      // |sect(grad f, J grad f) + f'''/f'|
  double hess_f_diag = 0.0;    // |Hess f(g', g') - f''|
  double hess_S_diag = 0.0;    // |Hess S(g', g') - (2 l f'' - 2 f''^2 - 2 f' f''')|
  double hess_S_J_diag = 0.0;  // |Hess S(Jg', Jg') - (2 l f'' - 2 f''^2)|
  int points = 0;
  double max() const;
};
BranchGeometryReport branch_geometry_check(const SolitonSystem& sys, const BranchRecord& branch,
                                           int max_points = 20);

struct BranchDirection {
  std::vector<double> direction;  // g-unit approach direction
  double rayleigh = 0.0;          // Rayleigh quotient against H_f
  double residual = 0.0;          // |H_f u - rayleigh u|
  std::string family;
};

struct BranchCount {
  int count = 0;
  std::vector<BranchDirection> directions;
  std::vector<int> adjacency;  // branch indices ending here
  bool degenerate_point = false;
  bool violation = false;      // count > 2 at a nondegenerate point
  bool dependent_case = false;
};
BranchCount branch_count_at(const SolitonSystem& sys, const SingularPointRecord& point, int index,
                            const std::vector<BranchRecord>& branches, bool dependent_case = false);

struct MorsePoint {
  std::vector<double> hess_eigenvalues;
  double pairing_defect = 0.0;
  int index = 0;
  bool even = false;
  bool nondegenerate = false;
  double isolation_radius = 0.0;  // distance to the nearest other critical point
  double nearest_rank1 = 0.0;     // distance to the nearest rank-1 sample (inf if none)
  bool isolated = false;
};

struct MorseReport {
  std::vector<MorsePoint> points;
  bool morse = true;
  bool dependent_caveat = false;
};
MorseReport morse_report(const SolitonSystem& sys, const std::vector<SingularPointRecord>& rank0,
                         const std::vector<std::vector<double>>& rank1_samples,
                         bool dependent_case = false);

// Full stratification: rank-0 points, rank-1 seeds, verdicts, traced families.
struct AtlasResult {
  std::vector<SingularPointRecord> rank0;
  std::vector<SingularPointRecord> rank1;  // classified seeds
  Rank1Seeds seeds;
  std::vector<BranchRecord> branches;
  std::vector<BranchGeometryReport> branch_checks;  // aligned with branches
  std::vector<BranchCount> counts;                  // aligned with rank0
  MorseReport morse;
  // Degenerate families drawn as polylines of seed images sorted by f.
  std::vector<std::vector<std::array<double, 2>>> degenerate_families;
};
AtlasResult scan_system(const SolitonSystem& sys, const AtlasOptions& opt = {});

}  // namespace kgrs
