// Command-line front end over the C API.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgrs/kgrs.h"

namespace {

constexpr int kExecutionError = 2;

struct Globals {
  uint64_t seed = 0;
  std::vector<std::string> tolerances;
  int grid = 0;
  bool no_timings = false;
  bool quiet = false;
};

struct Owned {
  char* p = nullptr;
  ~Owned() { kgrs_string_free(p); }
};

int error_out(const std::string& what) {
  std::cerr << "error: " << what << "\n";
  return kExecutionError;
}

int api_error(const std::string& what) { return error_out(what + ": " + kgrs_last_error()); }

bool parse_double(const std::string& s, double& v) {
  errno = 0;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size() && errno == 0;
}

// "c,s"
bool parse_target(const std::string& text, double& c, double& s) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) return false;
  return parse_double(text.substr(0, comma), c) && parse_double(text.substr(comma + 1), s);
}

using SystemPtr = std::unique_ptr<kgrs_system, decltype(&kgrs_system_free)>;
using OptionsPtr = std::unique_ptr<kgrs_options, decltype(&kgrs_options_free)>;
using ReportPtr = std::unique_ptr<kgrs_report, decltype(&kgrs_report_free)>;

struct RunRequest {
  std::string command;
  std::string spec;
  std::string json_out, svg_out, csv_out;
  std::vector<std::string> targets;
  int resolution = 0;
  bool expect_nondegenerate = false;
};

std::string eigen_path(const std::string& csv) {
  const auto dot = csv.rfind('.');
  const auto slash = csv.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return csv + "_eigen.csv";
  return csv.substr(0, dot) + "_eigen" + csv.substr(dot);
}

int execute(const Globals& g, const RunRequest& req) {
  kgrs_system* raw = nullptr;
  if (kgrs_system_load_file(req.spec.c_str(), &raw) != KGRS_OK) return api_error("cannot load " + req.spec);
  SystemPtr sys(raw, kgrs_system_free);

  kgrs_options* oraw = nullptr;
  if (kgrs_options_new(&oraw) != KGRS_OK) return api_error("options");
  OptionsPtr opt(oraw, kgrs_options_free);
  kgrs_options_set_seed(opt.get(), g.seed);
  if (g.grid != 0 && kgrs_options_set_grid(opt.get(), g.grid) != KGRS_OK) return api_error("--grid");
  for (const auto& kv : g.tolerances) {
    const auto eq = kv.find('=');
    double v = 0.0;
    if (eq == std::string::npos || !parse_double(kv.substr(eq + 1), v)) {
      return error_out("--tol expects KEY=VALUE, got '" + kv + "'");
    }
    if (kgrs_options_set_tolerance(opt.get(), kv.substr(0, eq).c_str(), v) != KGRS_OK) return api_error("--tol");
  }
  if (req.resolution != 0 && kgrs_options_set_resolution(opt.get(), req.resolution) != KGRS_OK) {
    return api_error("--resolution");
  }
  for (const auto& t : req.targets) {
    double c = 0.0, s = 0.0;
    if (!parse_target(t, c, s)) return error_out("--at expects c,s, got '" + t + "'");
    kgrs_options_add_fiber(opt.get(), c, s);
  }
  kgrs_options_set_expect_nondegenerate(opt.get(), req.expect_nondegenerate ? 1 : 0);

  kgrs_report* rraw = nullptr;
  if (kgrs_run(sys.get(), req.command.c_str(), opt.get(), &rraw) != KGRS_OK) return api_error(req.command);
  ReportPtr rep(rraw, kgrs_report_free);
  const int timings = g.no_timings ? 0 : 1;

  if (!g.quiet) {
    Owned summary;
    if (kgrs_report_summary(rep.get(), &summary.p) == KGRS_OK) std::cerr << summary.p;
  }
  if (req.json_out.empty()) {
    Owned json;
    if (kgrs_report_json(rep.get(), timings, &json.p) != KGRS_OK) return api_error("json");
    std::cout << json.p;
  } else if (kgrs_report_write(rep.get(), "json", req.json_out.c_str(), timings) != KGRS_OK) {
    return api_error("write json");
  }
  if (!req.svg_out.empty() && kgrs_report_write(rep.get(), "svg", req.svg_out.c_str(), timings) != KGRS_OK) {
    return api_error("write svg");
  }
  if (!req.csv_out.empty()) {
    if (kgrs_report_write(rep.get(), "csv", req.csv_out.c_str(), timings) != KGRS_OK) return api_error("write csv");
    const std::string eig = eigen_path(req.csv_out);
    if (kgrs_report_write(rep.get(), "eigen-csv", eig.c_str(), timings) != KGRS_OK) return api_error("write csv");
  }
  return kgrs_report_exit_code(rep.get());
}

int gallery(bool list, const std::string& name, const std::string& out) {
  if (list) {
    for (size_t i = 0; i < kgrs_gallery_count(); ++i) std::cout << kgrs_gallery_name(i) << "\n";
    return 0;
  }
  if (name.empty()) return error_out("gallery needs --list or --export NAME");
  kgrs_system* raw = nullptr;
  if (kgrs_system_from_gallery(name.c_str(), &raw) != KGRS_OK) return api_error("gallery " + name);
  SystemPtr sys(raw, kgrs_system_free);
  Owned text;
  if (kgrs_system_export(sys.get(), &text.p) != KGRS_OK) return api_error("export");
  if (out.empty()) {
    std::cout << text.p;
    return 0;
  }
  std::ofstream f(out, std::ios::binary);
  if (!(f << text.p)) return error_out("cannot write " + out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrable-system toolkit for Kahler gradient Ricci solitons"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kgrs_version()));

  Globals g;
  app.add_option("--seed", g.seed, "Seed for quasi-random sampling (default 0)");
  app.add_option("--tol", g.tolerances, "Tolerance override KEY=VALUE (repeatable)");
  app.add_option("--grid", g.grid, "Finest fiber grid per axis (default 64)");
  app.add_flag("--no-timings", g.no_timings, "Omit wall-clock timings from JSON");
  app.add_flag("-q,--quiet", g.quiet, "Do not print the check summary to stderr");

  RunRequest req;
  auto spec_arg = [&](CLI::App* sub) {
    sub->fallthrough();
    sub->add_option("spec", req.spec, "System spec file")->required()->check(CLI::ExistingFile);
  };

  CLI::App* verify = app.add_subcommand("verify", "Certify soliton, Kahler and identity residuals");
  spec_arg(verify);
  verify->add_flag("--expect-nondegenerate", req.expect_nondegenerate, "Fail on degenerate singular points");
  verify->add_option("-o,--output", req.json_out, "JSON output path (default stdout)");

  CLI::App* scan = app.add_subcommand("scan", "Stratify, classify and trace singular points");
  spec_arg(scan);
  scan->add_option("-o,--output", req.json_out, "JSON output path (default stdout)");

  CLI::App* image = app.add_subcommand("image", "Moment image band and critical-value curves");
  spec_arg(image);
  image->add_option("--resolution", req.resolution, "f-grid points (>= 16)")->required();
  image->add_option("-o,--output", req.json_out, "JSON output path (default stdout)");
  image->add_option("--svg", req.svg_out, "SVG output path");
  image->add_option("--csv", req.csv_out, "CSV output path");

  CLI::App* fibers = app.add_subcommand("fibers", "Count fiber components");
  spec_arg(fibers);
  fibers->add_option("--at", req.targets, "Target value c,s (repeatable)")->required()->allow_extra_args(false);
  fibers->add_option("-o,--output", req.json_out, "JSON output path (default stdout)");

  CLI::App* report = app.add_subcommand("report", "Full pipeline report");
  spec_arg(report);
  report->add_option("-o,--output", req.json_out, "JSON output path")->required();
  report->add_option("--svg", req.svg_out, "SVG output path");
  report->add_option("--csv", req.csv_out, "CSV output path (eigenvalues go to *_eigen.csv)");
  report->add_option("--at", req.targets, "Fiber target c,s (repeatable)")->allow_extra_args(false);
  report->add_option("--resolution", req.resolution, "f-grid points (>= 16, default 64)");
  report->add_flag("--expect-nondegenerate", req.expect_nondegenerate, "Fail on degenerate singular points");

  bool list = false;
  std::string export_name, export_out;
  CLI::App* gal = app.add_subcommand("gallery", "List or export built-in systems");
  gal->add_flag("--list", list, "List system names");
  gal->add_option("--export", export_name, "Print the spec file of NAME");
  gal->add_option("-o,--output", export_out, "Write the exported spec to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExecutionError;
  }

  if (gal->parsed()) return gallery(list, export_name, export_out);
  for (CLI::App* sub : {verify, scan, image, fibers, report}) {
    if (sub->parsed()) {
      req.command = sub->get_name();
      return execute(g, req);
    }
  }
  return error_out("no subcommand");
}
