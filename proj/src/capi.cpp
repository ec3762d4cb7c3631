#include "kgrs/kgrs.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "kgrs/error.hpp"
#include "kgrs/gallery.hpp"
#include "kgrs/report.hpp"
#include "kgrs/specfile.hpp"

struct kgrs_system {
  kgrs::SolitonSystem sys;
};

struct kgrs_options {
  kgrs::RunOptions opt;
};

struct kgrs_report {
  kgrs::RunReport report;
};

namespace {

thread_local std::string g_last_error;

kgrs_status status_of(kgrs::ErrorKind kind) {
  using kgrs::ErrorKind;
  switch (kind) {
    case ErrorKind::Syntax:
    case ErrorKind::UnknownIdentifier:
    case ErrorKind::Arity:
    case ErrorKind::Parse: return KGRS_ERR_PARSE;
    case ErrorKind::Validation: return KGRS_ERR_VALIDATION;
    case ErrorKind::Io: return KGRS_ERR_IO;
    case ErrorKind::EmptyLevel: return KGRS_ERR_EMPTY_LEVEL;
    case ErrorKind::CrossCheckMismatch: return KGRS_ERR_CROSS_CHECK;
    case ErrorKind::InvalidArgument:
    case ErrorKind::DimensionMismatch: return KGRS_ERR_INVALID_ARGUMENT;
    default: return KGRS_ERR_NUMERIC;
  }
}

kgrs_status fail(kgrs_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

// Runs fn, translating exceptions into status codes and the last-error text.
template <class F>
kgrs_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    fn();
    return KGRS_OK;
  } catch (const kgrs::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(KGRS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(KGRS_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const std::vector<std::string>& gallery_catalogue() {
  static const std::vector<std::string> names = kgrs::gallery_names();
  return names;
}

#define KGRS_REQUIRE(cond, what) \
  if (!(cond)) return fail(KGRS_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* kgrs_version(void) { return kgrs::kToolVersion; }

const char* kgrs_last_error(void) { return g_last_error.c_str(); }

void kgrs_string_free(char* s) { std::free(s); }

kgrs_status kgrs_system_load_file(const char* path, kgrs_system** out) {
  KGRS_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new kgrs_system{kgrs::load_spec(path)}; });
}

kgrs_status kgrs_system_load_string(const char* text, kgrs_system** out) {
  KGRS_REQUIRE(text && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new kgrs_system{kgrs::parse_spec(text)}; });
}

kgrs_status kgrs_system_from_gallery(const char* name, kgrs_system** out) {
  KGRS_REQUIRE(name && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new kgrs_system{kgrs::gallery_by_name(name).system}; });
}

kgrs_status kgrs_system_export(const kgrs_system* sys, char** text) {
  KGRS_REQUIRE(sys && text, "null argument");
  *text = nullptr;
  return guarded([&] { *text = dup_string(kgrs::export_spec(sys->sys)); });
}

void kgrs_system_free(kgrs_system* sys) { delete sys; }

size_t kgrs_gallery_count(void) { return gallery_catalogue().size(); }

const char* kgrs_gallery_name(size_t index) {
  const auto& names = gallery_catalogue();
  return index < names.size() ? names[index].c_str() : nullptr;
}

kgrs_status kgrs_options_new(kgrs_options** out) {
  KGRS_REQUIRE(out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new kgrs_options{}; });
}

void kgrs_options_free(kgrs_options* opt) { delete opt; }

kgrs_status kgrs_options_set_seed(kgrs_options* opt, uint64_t seed) {
  KGRS_REQUIRE(opt, "null options");
  opt->opt.seed = seed;
  return KGRS_OK;
}

kgrs_status kgrs_options_set_grid(kgrs_options* opt, int grid) {
  KGRS_REQUIRE(opt, "null options");
  KGRS_REQUIRE(grid >= 4 && grid <= 256 && grid % 2 == 0, "grid must be an even number in [4, 256]");
  opt->opt.fiber_grid = grid;
  return KGRS_OK;
}

kgrs_status kgrs_options_set_tolerance(kgrs_options* opt, const char* key, double value) {
  KGRS_REQUIRE(opt && key, "null argument");
  return guarded([&] {
    kgrs::Tolerances probe;
    probe.set(key, value);  // validates key and value
    opt->opt.tolerances[key] = value;
  });
}

kgrs_status kgrs_options_add_fiber(kgrs_options* opt, double c, double s) {
  KGRS_REQUIRE(opt, "null options");
  opt->opt.fibers.push_back({c, s});
  return KGRS_OK;
}

kgrs_status kgrs_options_set_resolution(kgrs_options* opt, int resolution) {
  KGRS_REQUIRE(opt, "null options");
  KGRS_REQUIRE(resolution >= 16, "resolution must be at least 16");
  opt->opt.resolution = resolution;
  return KGRS_OK;
}

kgrs_status kgrs_options_set_expect_nondegenerate(kgrs_options* opt, int flag) {
  KGRS_REQUIRE(opt, "null options");
  opt->opt.expect_nondegenerate = flag != 0;
  return KGRS_OK;
}

kgrs_status kgrs_run(const kgrs_system* sys, const char* command, const kgrs_options* opt, kgrs_report** out) {
  KGRS_REQUIRE(sys && command && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    const kgrs::Command cmd = kgrs::command_from_name(command);
    const kgrs::RunOptions defaults;
    *out = new kgrs_report{kgrs::run(cmd, sys->sys, opt ? opt->opt : defaults)};
  });
}

int kgrs_report_exit_code(const kgrs_report* rep) { return rep ? rep->report.exit_code : 2; }

const char* kgrs_report_error(const kgrs_report* rep) { return rep ? rep->report.error.c_str() : ""; }

kgrs_status kgrs_report_summary(const kgrs_report* rep, char** text) {
  KGRS_REQUIRE(rep && text, "null argument");
  *text = nullptr;
  return guarded([&] {
    std::string s;
    char buf[64];
    for (const auto& c : rep->report.checks) {
      std::snprintf(buf, sizeof buf, " %.3e %.1e", c.value, c.tolerance);
      s += std::string(c.passed ? "PASS " : "FAIL ") + c.name + buf;
      if (!c.note.empty()) s += " " + c.note;
      s += "\n";
    }
    for (const auto& f : rep->report.findings) s += "NOTE " + f + "\n";
    if (!rep->report.error.empty()) s += "ERROR " + rep->report.error + "\n";
    *text = dup_string(s);
  });
}

kgrs_status kgrs_report_json(const kgrs_report* rep, int include_timings, char** text) {
  KGRS_REQUIRE(rep && text, "null argument");
  *text = nullptr;
  return guarded([&] { *text = dup_string(kgrs::to_json(rep->report, include_timings != 0)); });
}

kgrs_status kgrs_report_write(const kgrs_report* rep, const char* format, const char* path, int include_timings) {
  KGRS_REQUIRE(rep && format && path, "null argument");
  const std::string f(format);
  return guarded([&] {
    if (f == "json") kgrs::write_text(path, kgrs::to_json(rep->report, include_timings != 0));
    else if (f == "csv") kgrs::write_text(path, kgrs::image_csv(rep->report));
    else if (f == "eigen-csv") kgrs::write_text(path, kgrs::eigen_csv(rep->report));
    else if (f == "svg") kgrs::write_text(path, kgrs::image_svg(rep->report));
    else throw kgrs::Error(kgrs::ErrorKind::InvalidArgument, "unknown report format '" + f + "'");
  });
}

void kgrs_report_free(kgrs_report* rep) { delete rep; }

}  // extern "C"
