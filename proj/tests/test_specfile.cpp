#include <cstdio>
#include <string>

#include "doctest.h"
#include "kgrs/error.hpp"
#include "kgrs/gallery.hpp"
#include "kgrs/specfile.hpp"

using namespace kgrs;

namespace {

const char* kGood = R"(# two cigars
[chart]
name = demo
dim = 4
x1 = [-2, 2]
x2 = [-2, 2]
x3 = [-2, 2]
x4 = [-2, 2]

[metric]
g11 = 1/(1 + x1^2 + x2^2)
g22 = 1/(1 + x1^2 + x2^2)
g33 = 4/(1 + x3^2 + x4^2)
g44 = 4/(1 + x3^2 + x4^2)

[potential]
f = -log(1 + x1^2 + x2^2) - log(1 + x3^2 + x4^2)
lambda = 0

[complex]
J21 = 1
J12 = -1
J43 = 1
J34 = -1
)";

std::string with(const std::string& from, const std::string& to) {
  std::string s(kGood);
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

ErrorKind kind_of(const std::string& text) {
  try {
    parse_spec(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("every gallery system round-trips through the text format") {
  for (const auto& name : gallery_names()) {
    CAPTURE(name);
    const SolitonSystem s = gallery_by_name(name).system;
    const std::string text = export_spec(s);
    const SolitonSystem back = parse_spec(text);
    CHECK(export_spec(back) == text);
    CHECK(back.name == s.name);
    CHECK(back.kind == s.kind);
    CHECK(back.lambda == s.lambda);
    CHECK(structurally_equal(back.f.root(), s.f.root()));
    for (int k = 0; k < 16; ++k) {
      CHECK(structurally_equal(back.g[k].root(), s.g[k].root()));
      CHECK(structurally_equal(back.J[k].root(), s.J[k].root()));
    }
    CHECK(back.aux_S.has_value() == s.aux_S.has_value());
    CHECK(back.F2.has_value() == s.F2.has_value());
    for (int i = 0; i < s.dim; ++i) {
      CHECK(back.domain.lo[i] == s.domain.lo[i]);
      CHECK(back.domain.hi[i] == s.domain.hi[i]);
    }
  }
}

TEST_CASE("hand-written spec loads") {
  const SolitonSystem s = parse_spec(kGood);
  CHECK(s.name == "demo");
  CHECK(s.dim == 4);
  CHECK(s.domain.hi[3] == 2.0);
  CHECK(eval(s.metric(2, 2), std::vector<double>{0, 0, 0, 0}) == doctest::Approx(4.0));
}

TEST_CASE("tolerance overrides round-trip") {
  SolitonSystem s = parse_spec(std::string(kGood) + "\n[tolerances]\nwedge = 1e-7\n");
  CHECK(s.tolerances.get("wedge") == 1e-7);
  const SolitonSystem back = parse_spec(export_spec(s));
  CHECK(back.tolerances.get("wedge") == 1e-7);
  CHECK(kind_of(std::string(kGood) + "\n[tolerances]\nbogus = 1\n") == ErrorKind::Parse);
  CHECK(kind_of(std::string(kGood) + "\n[tolerances]\nwedge = -1\n") == ErrorKind::Parse);
}

TEST_CASE("asymmetric metric entries are a validation error") {
  // g13 = g24 keeps the metric J-Hermitian.
  CHECK(kind_of(with("g22 = ", "g13 = 0.1\ng31 = 0.2\ng24 = 0.1\ng22 = ")) == ErrorKind::Validation);
  // A matching lower-triangle entry is accepted.
  CHECK_NOTHROW(parse_spec(with("g22 = ", "g13 = 0.1\ng31 = 0.1\ng24 = 0.1\ng22 = ")));
}

TEST_CASE("J that does not square to -Id is a validation error") {
  CHECK(kind_of(with("J34 = -1", "J34 = -1.5")) == ErrorKind::Validation);
}

TEST_CASE("malformed text reports line and column") {
  try {
    parse_spec(with("lambda = 0", "lambda 0"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 18);
    CHECK(e.column() == 1);
  }
  try {
    parse_spec(with("g33 = 4/(1 + x3^2 + x4^2)", "g33 = 4/(1 + x3^2 + ) "));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 13);
    CHECK(e.column() > 7);
  }
  CHECK(kind_of(with("[complex]", "[complx]")) == ErrorKind::Parse);
  CHECK(kind_of(with("x4 = [-2, 2]", "x4 = [-2; 2]")) == ErrorKind::Parse);
  CHECK(kind_of(with("dim = 4", "dim = four")) == ErrorKind::Parse);
  CHECK(kind_of(with("g11 = ", "g55 = 1\ng11 = ")) == ErrorKind::Parse);
  CHECK(kind_of(with("x4 = [-2, 2]\n", "")) == ErrorKind::Validation);
  CHECK(kind_of(with("f = ", "q = ")) == ErrorKind::Parse);
  CHECK(kind_of("g11 = 1\n") == ErrorKind::Parse);
}

TEST_CASE("files save and load") {
  const std::string path = "kgrs_specfile_test.spec";
  const SolitonSystem s = cigar_product(1.0, 4.0).system;
  save_spec(s, path);
  CHECK(export_spec(load_spec(path)) == export_spec(s));
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_spec("/nonexistent/dir/none.spec"), Error);
  try {
    load_spec("/nonexistent/dir/none.spec");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
