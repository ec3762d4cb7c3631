#include "kgrs/specfile.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "kgrs/error.hpp"

namespace kgrs {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  int value_column = 0;  // 1-based column of the first value character
};

using Section = std::map<std::string, Entry>;

std::string_view trim(std::string_view s, int* lead = nullptr) {
  std::size_t a = 0;
  while (a < s.size() && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  std::size_t b = s.size();
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  if (lead) *lead = static_cast<int>(a);
  return s.substr(a, b - a);
}

double parse_number(const Entry& e, const std::string& key) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("'" + key + "' expects a number", e.line, e.value_column);
  }
  return v;
}

int parse_int(const Entry& e, const std::string& key) {
  int v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("'" + key + "' expects an integer", e.line, e.value_column);
  }
  return v;
}

Expr parse_expr(const Entry& e, int dim) {
  try {
    return parse(e.value, dim);
  } catch (const SyntaxError& err) {
    throw ParseError(err.what(), e.line, e.value_column + static_cast<int>(err.offset()));
  }
}

// "[lo, hi]"
std::pair<double, double> parse_interval(const Entry& e, const std::string& key) {
  const std::string& v = e.value;
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    throw ParseError("'" + key + "' expects an interval [lo, hi]", e.line, e.value_column);
  }
  const auto comma = v.find(',');
  if (comma == std::string::npos) {
    throw ParseError("interval needs a comma", e.line, e.value_column);
  }
  auto number = [&](std::string_view part, int offset) {
    int lead = 0;
    const std::string_view t = trim(part, &lead);
    Entry sub{std::string(t), e.line, e.value_column + offset + lead};
    return parse_number(sub, key);
  };
  return {number(std::string_view(v).substr(1, comma - 1), 1),
          number(std::string_view(v).substr(comma + 1, v.size() - comma - 2), static_cast<int>(comma) + 1)};
}

// Index pair from "g13" / "J24" style keys; -1 when malformed.
std::pair<int, int> index_pair(const std::string& key, char prefix, int dim) {
  if (key.size() != 3 || key[0] != prefix) return {-1, -1};
  const int i = key[1] - '1', j = key[2] - '1';
  if (i < 0 || j < 0 || i >= dim || j >= dim) return {-1, -1};
  return {i, j};
}

const std::set<std::string> kSections{"chart", "metric", "potential", "complex", "aux", "moment", "tolerances"};

std::string number_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SolitonSystem parse_spec(std::string_view text, int probes) {
  std::map<std::string, Section> sections;
  std::map<std::string, int> section_line;
  std::string current;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    int lead = 0;
    const std::string_view line = trim(raw, &lead);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no, lead + 1);
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(name)) throw ParseError("unknown section [" + name + "]", line_no, lead + 1);
      if (section_line.count(name)) throw ParseError("duplicate section [" + name + "]", line_no, lead + 1);
      current = name;
      section_line[name] = line_no;
      sections[name];
      continue;
    }
    if (current.empty()) throw ParseError("entry outside of any section", line_no, lead + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no, lead + 1);
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError("missing key", line_no, lead + 1);
    int vlead = 0;
    const std::string_view value = trim(line.substr(eq + 1), &vlead);
    const int vcol = lead + static_cast<int>(eq) + 1 + vlead + 1;
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no, vcol);
    Section& sec = sections[current];
    if (sec.count(key)) throw ParseError("duplicate key '" + key + "'", line_no, lead + 1);
    sec[key] = Entry{std::string(value), line_no, vcol};
  }

  auto unknown_key = [](const std::string& key, const Entry& e) {
    return ParseError("unknown key '" + key + "'", e.line, 1);
  };

  SolitonSystem sys;
  const Section& chart = sections["chart"];
  if (!chart.count("dim")) throw Error(ErrorKind::Validation, "[chart] dim is required");
  sys.dim = parse_int(chart.at("dim"), "dim");
  if (sys.dim != 2 && sys.dim != 4) {
    throw ParseError("dim must be 2 or 4", chart.at("dim").line, chart.at("dim").value_column);
  }
  const int n = sys.dim;
  sys.domain.dim = n;
  std::vector<bool> have_interval(static_cast<std::size_t>(n), false);
  for (const auto& [key, e] : chart) {
    if (key == "dim") continue;
    if (key == "name") {
      sys.name = e.value;
    } else if (key == "kind") {
      if (e.value == "soliton") sys.kind = SystemKind::Soliton;
      else if (e.value == "hamiltonian") sys.kind = SystemKind::Hamiltonian;
      else throw ParseError("kind must be 'soliton' or 'hamiltonian'", e.line, e.value_column);
    } else if (key.size() == 2 && key[0] == 'x' && key[1] >= '1' && key[1] < '1' + n) {
      const int i = key[1] - '1';
      const auto [lo, hi] = parse_interval(e, key);
      sys.domain.lo[i] = lo;
      sys.domain.hi[i] = hi;
      have_interval[i] = true;
    } else {
      throw unknown_key(key, e);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!have_interval[i]) throw Error(ErrorKind::Validation, "[chart] x" + std::to_string(i + 1) + " interval is required");
  }

  const Expr zero = Expr::constant(0.0, n);
  for (auto& e : sys.g) e = zero;
  for (auto& e : sys.J) e = zero;
  std::vector<bool> set_g(16, false);
  std::map<int, const Entry*> lower;
  for (const auto& [key, e] : sections["metric"]) {
    const auto [i, j] = index_pair(key, 'g', n);
    if (i < 0) throw unknown_key(key, e);
    if (i > j) {
      lower[i * 4 + j] = &e;
      continue;
    }
    sys.g[i * 4 + j] = parse_expr(e, n);
    sys.g[j * 4 + i] = sys.g[i * 4 + j];
    set_g[i * 4 + j] = true;
  }
  // Lower-triangle entries are redundant; a mismatch with the mirror is an
  // asymmetric metric.
  for (const auto& [idx, e] : lower) {
    const int i = idx / 4, j = idx % 4;
    const Expr ex = parse_expr(*e, n);
    if (!set_g[j * 4 + i]) {
      sys.g[i * 4 + j] = ex;
      sys.g[j * 4 + i] = ex;
      set_g[j * 4 + i] = true;
    } else if (!structurally_equal(ex.root(), sys.g[j * 4 + i].root())) {
      sys.g[i * 4 + j] = ex;
    }
  }

  const Section& pot = sections["potential"];
  for (const auto& [key, e] : pot) {
    if (key == "f") sys.f = parse_expr(e, n);
    else if (key == "lambda") sys.lambda = parse_number(e, key);
    else throw unknown_key(key, e);
  }
  if (sys.f.empty()) throw Error(ErrorKind::Validation, "[potential] f is required");

  for (const auto& [key, e] : sections["complex"]) {
    const auto [i, j] = index_pair(key, 'J', n);
    if (i < 0) throw unknown_key(key, e);
    sys.J[i * 4 + j] = parse_expr(e, n);
  }
  for (const auto& [key, e] : sections["aux"]) {
    if (key == "S") sys.aux_S = parse_expr(e, n);
    else throw unknown_key(key, e);
  }
  for (const auto& [key, e] : sections["moment"]) {
    if (key == "F2") sys.F2 = parse_expr(e, n);
    else throw unknown_key(key, e);
  }
  for (const auto& [key, e] : sections["tolerances"]) {
    if (!Tolerances::known(key)) throw unknown_key(key, e);
    const double v = parse_number(e, key);
    try {
      sys.tolerances.set(key, v);
    } catch (const Error& err) {
      throw ParseError(err.what(), e.line, e.value_column);
    }
  }
  validate_system(sys, probes);
  return sys;
}

SolitonSystem load_spec(const std::string& path, int probes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str(), probes);
}

std::string export_spec(const SolitonSystem& sys) {
  const int n = sys.dim;
  std::ostringstream out;
  out << "[chart]\n";
  if (!sys.name.empty()) out << "name = " << sys.name << "\n";
  out << "dim = " << n << "\n";
  out << "kind = " << (sys.kind == SystemKind::Hamiltonian ? "hamiltonian" : "soliton") << "\n";
  for (int i = 0; i < n; ++i) {
    out << "x" << i + 1 << " = [" << number_text(sys.domain.lo[i]) << ", " << number_text(sys.domain.hi[i])
        << "]\n";
  }
  out << "\n[metric]\n";
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Expr& e = sys.metric(i, j);
      if (e.is_constant() && e.root().value == 0.0) continue;
      out << "g" << i + 1 << j + 1 << " = " << e.to_string() << "\n";
    }
  }
  out << "\n[potential]\n";
  out << "f = " << sys.f.to_string() << "\n";
  out << "lambda = " << number_text(sys.lambda) << "\n";
  out << "\n[complex]\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Expr& e = sys.complex(i, j);
      if (e.is_constant() && e.root().value == 0.0) continue;
      out << "J" << i + 1 << j + 1 << " = " << e.to_string() << "\n";
    }
  }
  if (sys.aux_S) out << "\n[aux]\nS = " << sys.aux_S->to_string() << "\n";
  if (sys.F2) out << "\n[moment]\nF2 = " << sys.F2->to_string() << "\n";
  const Tolerances defaults;
  std::ostringstream tol;
  for (const auto& [key, v] : sys.tolerances.values()) {
    if (defaults.get(key) != v) tol << key << " = " << number_text(v) << "\n";
  }
  if (!tol.str().empty()) out << "\n[tolerances]\n" << tol.str();
  return out.str();
}

void save_spec(const SolitonSystem& sys, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write spec file '" + path + "'");
  out << export_spec(sys);
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace kgrs
