// prodnet: ingest -> estimate -> calibrate -> simulate -> report.

#include <CLI11.hpp>

#include <iostream>

#include "prodnet/errors.hpp"
#include "prodnet/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace prodnet;

  CLI::App app{"Production-network elasticity estimation and shock simulation"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  std::string config_path, fixtures, mode, out;
  std::uint64_t seed = 0;
  bool closed = false, allow_nonconverged = false;

  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "random seed for business-cycle draws");
  app.add_option("--fixtures", fixtures, "directory with supply/use/imports/prices CSVs");
  app.add_option("--mode", mode, "estimation mode: sector_specific, uniform or biased_closed");
  app.add_flag("--closed", closed, "closed-economy calibration and simulation only");
  app.add_option("--out", out, "output directory");
  app.add_flag("--allow-nonconverged", allow_nonconverged, "exit 0 even if estimation did not converge");
  for (const char* name : {"ingest", "estimate", "calibrate", "simulate", "report"})
    app.add_subcommand(name)->fallthrough();
  app.add_subcommand("all", "run every stage in order")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  RunOptions options;
  try {
    if (!config_path.empty()) options.config = load_config(config_path);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  auto& c = options.config;
  if (app.count("--seed")) c.seed = seed;
  if (!fixtures.empty()) {
    c.source = "fixtures";
    c.fixtures = fixtures;
  }
  if (!out.empty()) c.output_dir = out;
  if (!mode.empty()) options.mode = mode;
  options.closed_only = closed;
  options.allow_nonconverged = allow_nonconverged;

  const std::string cmd = app.get_subcommands().front()->get_name();
  if (cmd != "all") return run_command(cmd, options, std::cerr);
  for (const char* stage : {"ingest", "estimate", "calibrate", "simulate", "report"}) {
    const int rc = run_command(stage, options, std::cerr);
    if (rc != kExitOk) return rc;
  }
  return kExitOk;
}
