#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgrs/expr.hpp"

namespace kgrs {

struct Box {
  int dim = 4;
  std::array<double, 4> lo{};
  std::array<double, 4> hi{};

  static Box cube(int dim, double lo, double hi);
  bool contains(std::span<const double> x, double margin = 0.0) const;
  // Largest half-width; used to scale absolute thresholds.
  double scale() const;
  std::vector<double> center() const;
};

// Named numeric thresholds with documented defaults; overridable per run.
class Tolerances {
 public:
  Tolerances();
  double get(const std::string& key) const;
  void set(const std::string& key, double value);  // throws InvalidArgument for unknown keys
  const std::map<std::string, double>& values() const { return values_; }
  static bool known(const std::string& key);

 private:
  std::map<std::string, double> values_;
};

enum class SystemKind {
  Soliton,      // (g, J, f, lambda): Phi = (f, S) with S the scalar curvature
  Hamiltonian,  // flat symplectic chart with an explicit second integral F2
};

struct SolitonSystem {
  std::string name;
  SystemKind kind = SystemKind::Soliton;
  int dim = 4;
  Box domain;
  std::array<Expr, 16> g;  // g_ij row-major, symmetric
  Expr f;
  double lambda = 0.0;
  std::array<Expr, 16> J;  // J^i_j row-major: J(d_j) = J^i_j d_i
  std::optional<Expr> aux_S;
  std::optional<Expr> F2;
  Tolerances tolerances;

  const Expr& metric(int i, int j) const { return g[i * 4 + j]; }
  const Expr& complex(int i, int j) const { return J[i * 4 + j]; }
  // Second component of the moment map as an explicit expression, if any.
  const Expr* explicit_second() const;
};

// Probe-point validation: metric symmetry and positive definiteness,
// J^2 = -Id, Hermitian g(J., J.) = g. Throws ValidationError.
void validate_system(const SolitonSystem& sys, int probes = 16);

// Randomly shifted Halton points inside the box shrunk by `margin` (fraction
// of each side). Deterministic for a given seed.
std::vector<std::vector<double>> halton_samples(const Box& box, int count, std::uint64_t seed,
                                                double margin = 0.05);

}  // namespace kgrs
