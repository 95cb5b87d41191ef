#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "equity.h"

namespace {

struct Options {
  std::string config;
  std::string period = "both";
  std::string hour = "all";
  std::string category;
  std::string layer;
  std::string out_dir;
  int threads = -1;
  bool strict_paper = false;
};

std::string check_hour(const std::string& value) {
  if (value == "all") return "";
  char* end = nullptr;
  const long h = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || h < 0 || h > 23)
    return "expected an hour 0-23 or 'all', got '" + value + "'";
  return "";
}

int fail(eq_engine* engine, eq_status status) {
  std::cerr << "equity: " << eq_engine_last_error(engine) << '\n';
  eq_engine_close(engine);
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"service-equity metrics for shared-mobility trip data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(eq_version()));
  app.add_option("--config", opt.config, "run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--period", opt.period, "study period to process")
      ->check(CLI::IsMember({"before", "after", "both"}))
      ->capture_default_str();
  app.add_option("--hour", opt.hour, "hour for diff; 'all' compares the 24-hour mean")
      ->check(CLI::Validator(check_hour, "HOUR"))
      ->capture_default_str();
  app.add_option("--category", opt.category, "access category for diff")
      ->check(CLI::IsMember({"commute", "recreational"}));
  app.add_option("--out", opt.out_dir, "override the configured output directory");
  app.add_option("--threads", opt.threads, "worker threads (0: auto)")->check(CLI::NonNegativeNumber);
  app.add_flag("--strict-paper", opt.strict_paper,
               "paper-literal mode: zero out-of-range availability, rectangle-rule sr");

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"ingest", "parse and clean trips, write tallies"},
      {"availability", "reconstruct availability, write zeta/z layers and surplus"},
      {"metrics", "write disparity and access layers"},
      {"recovery", "write threshold recovery profiles and the sr layer"},
      {"overlay", "write demographic segment overlays"},
      {"compare", "write masked-vs-rest sr comparisons"},
      {"cluster", "write zone clusters and summaries"},
  };
  for (const auto& [name, help] : stages) app.add_subcommand(name, help)->fallthrough();
  app.add_subcommand("run", "full pipeline for both periods plus manifest")->fallthrough();
  CLI::App* diff = app.add_subcommand("diff", "before/after delta table for one layer");
  diff->fallthrough();
  diff->add_option("--layer", opt.layer, "layer to compare")
      ->required()
      ->check(CLI::IsMember({"zeta", "z", "d_sp", "sr", "i_access", "zi_access"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(EQ_ERROR_CONFIG);
  }

  eq_engine* engine = nullptr;
  eq_status status = eq_engine_open(opt.config.c_str(), &engine);
  if (status != EQ_OK) {
    std::cerr << "equity: " << eq_open_error() << '\n';
    return static_cast<int>(status);
  }

  if (!opt.out_dir.empty()) {
    status = eq_engine_set_option(engine, "output_dir", opt.out_dir.c_str());
    if (status != EQ_OK) return fail(engine, status);
  }
  if (opt.threads >= 0) {
    status = eq_engine_set_option(engine, "threads", std::to_string(opt.threads).c_str());
    if (status != EQ_OK) return fail(engine, status);
  }
  if (opt.strict_paper) {
    status = eq_engine_set_option(engine, "strict_paper", "true");
    if (status != EQ_OK) return fail(engine, status);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  int files = 0;
  if (name == "run") {
    status = eq_engine_run_all(engine, &files);
  } else if (name == "diff") {
    const int hour = opt.hour == "all" ? -1 : static_cast<int>(std::strtol(opt.hour.c_str(), nullptr, 10));
    status = eq_engine_diff(engine, opt.layer.c_str(),
                            opt.category.empty() ? nullptr : opt.category.c_str(), hour, &files);
  } else {
    status = eq_engine_run_stage(engine, name.c_str(),
                                 opt.period == "both" ? nullptr : opt.period.c_str(), &files);
  }
  if (status != EQ_OK) return fail(engine, status);

  std::cout << name << ": wrote " << files << (files == 1 ? " file\n" : " files\n");
  eq_engine_close(engine);
  return 0;
}
