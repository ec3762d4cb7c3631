#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgrs/system.hpp"

namespace kgrs {

inline constexpr const char* kToolVersion = "1.0.0";

enum class Command { Verify, Scan, Image, Fibers, Report };
const char* command_name(Command c);
Command command_from_name(const std::string& name);  // throws InvalidArgument

struct RunOptions {
  std::uint64_t seed = 0;
  std::map<std::string, double> tolerances;  // overrides on top of the system's
  int fiber_grid = 64;                       // finest fiber grid; stability uses half of it
  int resolution = 64;                       // image f-grid points
  std::vector<std::array<double, 2>> fibers; // (c, s) targets
  bool expect_nondegenerate = false;
  bool timings = true;
  int samples = 200;                         // certification samples
};

struct CheckRecord {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
  bool operator==(const CheckRecord&) const = default;
};

struct PointRecord {
  int rank = 0;
  std::vector<double> x;
  std::string verdict;  // label, e.g. "EE" or "DEGENERATE(excess-dimension)"
  std::string triple;
  std::vector<double> mu;                  // rank 0
  std::vector<std::array<double, 2>> eigenvalues;  // (re, im)
  std::vector<double> hess_f_eigenvalues;
  int singular_dimension = -1;             // rank 1
  std::string oracle;                      // rank 1 level-set oracle
  double f = 0.0, S = 0.0;
  bool operator==(const PointRecord&) const = default;
};

struct BranchSummary {
  std::string family;
  std::vector<double> seed;
  std::string backward, forward;  // end dispositions
  int backward_rank0 = -1, forward_rank0 = -1;
  double max_wedge = 0.0;
  bool membership_preserved = false;
  std::vector<std::array<double, 2>> image;  // (f, S) polyline
  std::map<std::string, double> geometry;   // residual name -> value, empty when not checked
  bool operator==(const BranchSummary&) const = default;
};

struct CountRecord {
  int rank0 = 0;
  int count = 0;
  bool degenerate_point = false;
  bool violation = false;
  bool dependent_case = false;
  std::vector<double> rayleigh_residuals;
  bool operator==(const CountRecord&) const = default;
};

struct MorseRecord {
  bool morse = true;
  bool dependent_caveat = false;
  std::vector<int> index;
  std::vector<bool> even, isolated;
  bool operator==(const MorseRecord&) const = default;
};

struct CurveRecord {
  std::string family;
  bool degenerate = false;
  std::string placement;
  bool hyperbolic_evidence = false;
  std::vector<std::array<double, 2>> points;
  bool operator==(const CurveRecord&) const = default;
};

struct ImageRecord {
  int resolution = 0;
  std::vector<double> f;
  std::vector<std::optional<double>> lower, upper;  // empty levels are null
  double f_min = 0.0, f_max = 0.0;
  double max_jump = 0.0;
  std::vector<int> jumps;
  std::vector<CurveRecord> curves;
  std::vector<std::array<double, 2>> rank0;
  std::vector<bool> rank0_in_band;
  bool operator==(const ImageRecord&) const = default;
};

struct FiberRecord {
  double c = 0.0, s = 0.0;
  int count = 0;
  std::vector<int> grids, components;
  std::vector<std::vector<double>> representatives;
  double solve_tolerance = 0.0;
  bool stable = false;
  bool closed_form = false;
  bool operator==(const FiberRecord&) const = default;
};

struct RunReport {
  std::string version = kToolVersion;
  std::string command;
  std::string system;
  std::string spec_digest;  // FNV-1a 64 of the canonical spec text
  std::uint64_t seed = 0;
  std::vector<CheckRecord> checks;
  std::vector<PointRecord> points;
  std::vector<BranchSummary> branches;
  std::vector<CountRecord> counts;
  std::optional<MorseRecord> morse;
  std::optional<ImageRecord> image;
  std::vector<FiberRecord> fibers;
  std::vector<std::string> findings;
  std::map<std::string, double> timings;  // seconds per stage
  std::string error;                      // execution error, empty on success
  int exit_code = 0;                      // 0 pass, 1 check failure, 2 execution error
  bool operator==(const RunReport&) const = default;
};

std::string spec_digest(const SolitonSystem& sys);

// Never throws for pipeline failures: they become exit code 2 with `error`
// naming the failing stage.
RunReport run(Command command, const SolitonSystem& sys, const RunOptions& opt = {});

// Canonical JSON: sorted keys, two-space indent, shortest round-trip doubles.
std::string to_json(const RunReport& r, bool include_timings = true);
RunReport from_json(const std::string& text);  // throws Parse

// Image grid: header plus one row per f-grid point.
std::string image_csv(const RunReport& r);
// Eigenvalue table: header plus one row per eigenvalue of each singular point.
std::string eigen_csv(const RunReport& r);
// Band, critical-value curves coloured by verdict, rank-0 markers.
std::string image_svg(const RunReport& r);

// Writes text to a file; throws Io.
void write_text(const std::string& path, const std::string& text);

}  // namespace kgrs
