#pragma once

// Run configuration shared by every CLI subcommand.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prodnet/bea.hpp"
#include "prodnet/serialization.hpp"

namespace prodnet {

/// Default BEA request layout. Table IDs are configuration; verify them
/// against the API's parameter listing before a live run.
BeaConfig default_bea_config();

struct ElasticityOverrides {
  double sigma = 0.6;
  std::optional<double> theta;  ///< replaces every estimated theta_i
  std::optional<double> xi;
  std::optional<double> nu;
  std::optional<double> xi_export;  ///< defaults to xi

  bool operator==(const ElasticityOverrides&) const = default;
};

struct EstimationConfig {
  std::vector<std::string> modes = {"sector_specific", "uniform", "biased_closed"};
  bool household = true;
  int workers = 0;
  double xi_upper = 50.0;

  bool operator==(const EstimationConfig&) const = default;
};

struct ScenarioConfig {
  bool foreign_price = true;
  double foreign_price_magnitude = 0.25;
  std::size_t top_k = 3;
  bool severe_tfp = true;
  double severe_tfp_magnitude = -0.25;
  bool business_cycle = true;
  std::size_t n_draws = 1000;
  int tfp_horizon = 4;
  bool overlapping_windows = true;
  std::size_t histogram_bins = 40;
  std::vector<std::string> calibrations = {"main", "uniform", "cobb_douglas"};
  std::vector<std::string> economies = {"open", "closed"};
  unsigned workers = 1;

  bool operator==(const ScenarioConfig&) const = default;
};

struct RunConfig {
  std::string source = "fixtures";  ///< "fixtures" or "api"
  std::string fixtures;             ///< directory with supply/use/imports/prices CSVs
  std::string cache_dir = "bea_cache";
  std::string tfp_file;  ///< (year, industry, log_tfp) CSV; empty: <fixtures>/tfp.csv
  BeaConfig bea = default_bea_config();
  std::vector<int> years;  ///< empty: every year in the data
  int base_year = 0;       ///< 0: last year
  double tradeable_threshold = 0.25;
  double min_avg_share = 0.01;
  std::string panel_share = "total_use";  ///< or "domestic"
  EstimationConfig estimation;
  ElasticityOverrides elasticities;
  ScenarioConfig scenarios;
  std::uint64_t seed = 20240607;
  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;
};

Json to_json(const RunConfig& c);
/// Missing keys take defaults; unknown keys and wrong types raise ParseError
/// naming the key path.
RunConfig config_from_json(const Json& j);
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the canonical (sorted-key) JSON dump without output_dir, as
/// 16 hex digits.
std::string config_hash(const RunConfig& c);

}  // namespace prodnet
