#pragma once

// CLI stages. Each stage reads its inputs from, and writes its outputs to,
// the configured output directory, so stages can be rerun independently.
//
//   ingest     panel.csv, household_panel.csv, sectors.json, snapshot_<year>.json,
//              filter_report.json, tfp_covariance.json (when TFP data exists)
//   estimate   estimates.json, table3.csv
//   calibrate  model_<calibration>_<open|closed>.json
//   simulate   table4..table7 CSVs, histogram_<economy>.csv, simulation.json
//   report     first_order_<economy>.csv, report.txt

#include <iosfwd>
#include <optional>
#include <string>

#include "prodnet/config.hpp"

namespace prodnet {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitEstimation = 3,
  kExitSolver = 4,
};

const char* version();

struct RunOptions {
  RunConfig config;
  std::optional<std::string> mode;  ///< restricts estimation to one mode
  bool closed_only = false;
  bool allow_nonconverged = false;
};

/// "# prodnet <version> config_hash=<hash> seed=<seed>"
std::string provenance_line(const RunConfig& config);
Json provenance_json(const RunConfig& config);

int cmd_ingest(const RunOptions& options, std::ostream& log);
int cmd_estimate(const RunOptions& options, std::ostream& log);
int cmd_calibrate(const RunOptions& options, std::ostream& log);
int cmd_simulate(const RunOptions& options, std::ostream& log);
int cmd_report(const RunOptions& options, std::ostream& log);

/// Dispatches by name and maps library errors to exit codes: data, parse and
/// transport errors 2, estimation and rank errors 3, solver and
/// invertibility errors 4, anything else 1. The message goes to `log`.
int run_command(const std::string& name, const RunOptions& options, std::ostream& log);

}  // namespace prodnet
