#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "kgrs/atlas.hpp"
#include "kgrs/system.hpp"

namespace kgrs {

struct LevelOptions {
  int samples = 512;            // Halton samples projected onto the level
  int ascent_steps = 30;        // projected-gradient cap per candidate
  int candidates = 4;           // best samples refined per extremum
  std::uint64_t seed = 0;
};

struct LevelExtrema {
  double c = 0.0;
  double S_min = 0.0, S_max = 0.0;
  std::vector<double> argmin, argmax;
  int level_points = 0;  // samples that projected onto the level
  bool min_on_boundary = false, max_on_boundary = false;
};

// Extrema of the second component on {f = c} inside the domain. The closed
// form for S is used when present. Throws EmptyLevel.
LevelExtrema level_extrema(const SolitonSystem& sys, double c, const LevelOptions& opt = {});

struct ImageBoundary {
  std::vector<double> f;
  std::vector<double> lower, upper;
  std::vector<bool> valid;   // false where the level was empty
  std::vector<int> jumps;    // indices k with a suspicious jump between k and k+1
  double max_jump = 0.0;     // largest |S±(k+1) - S±(k)| over valid neighbours
  double f_min = 0.0, f_max = 0.0;  // sampled range of f over the domain
};

ImageBoundary image_boundary(const SolitonSystem& sys, int resolution, const LevelOptions& opt = {});

struct ValueCurve {
  std::string family;
  bool degenerate = false;
  std::vector<std::array<double, 2>> points;  // (f, S), sorted by f
  std::string placement;          // "boundary", "interior", "mixed", or empty before labeling
  double boundary_distance = 0.0; // max over probes of the distance to the nearer of S-, S+
  bool hyperbolic_evidence = false;  // interior curve of a nondegenerate family
};

struct CriticalValues {
  std::vector<ValueCurve> curves;
  std::vector<std::array<double, 2>> rank0;  // images of rank-0 points
  std::vector<bool> rank0_in_band;           // filled by label_curves
};

CriticalValues critical_value_curves(const SolitonSystem& sys, const AtlasResult& atlas);

// Places each curve relative to the band using exact level extrema at up to
// `probes` points per curve; tol is relative to max(1, |S|).
void label_curves(const SolitonSystem& sys, CriticalValues& cv, int probes = 8, double tol = 1e-3,
                  const LevelOptions& opt = {});

struct FiberOptions {
  std::vector<int> grids{32, 64};  // finest last; each a refinement of the previous
  int coarse = 8;
};

struct FiberResult {
  double c = 0.0, s = 0.0;
  std::vector<int> grids;
  std::vector<int> components;         // per grid
  std::vector<std::size_t> marked;     // cells passing the corner-range test, per grid
  std::vector<std::size_t> confirmed;  // marked cells with a solved fiber point nearby, per grid
  std::vector<std::vector<double>> representatives;  // one fiber point per component, finest grid
  double solve_tolerance = 1e-10;
  bool stable = false;              // all grids agree
  bool closed_form = true;          // false: metric S on reduced grids
  int count() const { return components.empty() ? 0 : components.back(); }
};

// Connected components of {f = c, S = s} in the domain. Cells whose corner
// ranges contain (c, s) are kept when a Gauss-Newton solve from the cell
// center lands within half a cell; kept cells touching at a face, edge or
// vertex are joined.
// Throws EmptyLevel when no cell holds a fiber point.
FiberResult fiber_components(const SolitonSystem& sys, double c, double s, const FiberOptions& opt = {});

}  // namespace kgrs
