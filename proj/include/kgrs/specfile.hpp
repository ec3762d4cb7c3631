#pragma once

#include <string>
#include <string_view>

#include "kgrs/system.hpp"

namespace kgrs {

// Text format, one `key = value` per line, `#` starts a comment:
//
//   [chart]      name, dim, kind (soliton | hamiltonian), x1 = [lo, hi] ...
//   [metric]     gij for i <= j (a gji entry must equal its mirror)
//   [potential]  f, lambda
//   [complex]    Jij, omitted entries are 0
//   [aux]        S (closed-form scalar curvature, optional)
//   [moment]     F2 (second integral, hamiltonian kind)
//   [tolerances] key = value overrides
//
// Throws ParseError (line, column) for malformed text and ValidationError
// when the parsed system fails the probe-point checks.
SolitonSystem parse_spec(std::string_view text, int probes = 16);
SolitonSystem load_spec(const std::string& path, int probes = 16);  // also IoError

// Canonical text; parse_spec(export_spec(s)) reproduces s exactly.
std::string export_spec(const SolitonSystem& sys);
void save_spec(const SolitonSystem& sys, const std::string& path);  // IoError

}  // namespace kgrs
