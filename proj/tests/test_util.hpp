#pragma once

#include <string>

#include "kgrs/atlas.hpp"
#include "kgrs/expr.hpp"
#include "kgrs/gallery.hpp"
#include "kgrs/system.hpp"

// Small hand-built systems used by several test files.
inline kgrs::SolitonSystem make_system(int dim, const std::string& diag_metric_entry,
                                       const std::string& potential) {
  kgrs::SolitonSystem s;
  s.dim = dim;
  s.domain = kgrs::Box::cube(dim, -3.0, 3.0);
  for (auto& e : s.g) e = kgrs::Expr::constant(0.0, dim);
  for (auto& e : s.J) e = kgrs::Expr::constant(0.0, dim);
  for (int i = 0; i < dim; ++i) s.g[i * 5] = kgrs::parse(diag_metric_entry, dim);
  for (int i = 0; i + 1 < dim; i += 2) {
    s.J[(i + 1) * 4 + i] = kgrs::Expr::constant(1.0, dim);
    s.J[i * 4 + i + 1] = kgrs::Expr::constant(-1.0, dim);
  }
  s.f = kgrs::parse(potential, dim);
  return s;
}

inline kgrs::SolitonSystem single_cigar() {
  return make_system(2, "1/(1 + x1^2 + x2^2)", "-log(1 + x1^2 + x2^2)");
}

// Scans of the cigar product shared across test files; computed once.
inline const kgrs::AtlasResult& cigar_scan() {
  static const kgrs::AtlasResult r = kgrs::scan_system(kgrs::cigar_product(1.0, 4.0).system);
  return r;
}
