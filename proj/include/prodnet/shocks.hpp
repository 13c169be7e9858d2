#pragma once

// Counterfactual experiments run side by side under several elasticity
// calibrations: one-at-a-time foreign price shocks, one-at-a-time severe TFP
// shocks, and Monte Carlo sectoral business cycles.

#include <cstdint>
#include <string>
#include <vector>

#include "prodnet/equilibrium.hpp"

namespace prodnet {

struct NamedModel {
  std::string name;  ///< e.g. "main", "uniform", "cobb_douglas"
  CalibratedModel model;
};

enum class ScenarioKind { foreign_price, severe_tfp, business_cycle };
std::string to_string(ScenarioKind kind);

/// Shock inputs shared by every calibration.
struct ScenarioSet {
  ScenarioKind kind = ScenarioKind::severe_tfp;
  double magnitude = 0.0;
  std::vector<Shock> shocks;
  std::vector<std::string> labels;  ///< sector code or draw index
  std::vector<int> shocked;         ///< shocked sector per scenario, -1 for joint draws
  std::uint64_t seed = 0;
  std::size_t n_draws = 0;

  void validate(std::size_t n_sectors) const;
};

/// Square factor F with F F' = cov after PSD repair (eigenvalues clipped at 0,
/// symmetrized), from a pivoted LDL' decomposition. Throws DomainError when
/// cov is materially indefinite or not square and finite.
Matrix psd_factor(const Matrix& cov);

/// Draw `index` of a seeded stream: F * N(0, I), generator state derived from
/// (seed, index) only.
Vector mvn_draw(const Matrix& factor, std::uint64_t seed, std::uint64_t index);

/// n draws as rows of an n x N matrix.
Matrix mvn_sample(const Matrix& cov, std::size_t n, std::uint64_t seed);

ScenarioSet foreign_price_scenarios(const Economy& economy, double magnitude = 0.25);
ScenarioSet severe_tfp_scenarios(const Economy& economy, double magnitude = -0.25);
ScenarioSet business_cycle_scenarios(const Economy& economy, const Matrix& cov, std::size_t n_draws,
                                     std::uint64_t seed);

struct ScenarioResult {
  std::string label;
  int shocked = -1;
  std::vector<bool> ok;             ///< per calibration
  std::vector<Vector> dlogP;        ///< per calibration, log change vs. base
  std::vector<double> dlogGDP;      ///< per calibration
  std::vector<double> residual;     ///< max equilibrium residual per calibration
  std::vector<std::string> errors;  ///< solver message per failed calibration
};

struct DistributionStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;        ///< n-1 denominator
  double skewness = 0.0;  ///< standardized third central moment, 0 when sd = 0
};
DistributionStats distribution_stats(const std::vector<double>& x);

struct ComparisonReport {
  ScenarioKind kind = ScenarioKind::severe_tfp;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_draws = 0;
  std::vector<std::string> calibrations;
  std::vector<std::string> sector_codes;
  std::vector<std::string> sector_labels;
  std::vector<ScenarioResult> scenarios;
  /// Business cycle only: draws where some calibration failed, dropped from all.
  std::vector<std::size_t> dropped_draws;
  std::vector<DistributionStats> gdp_stats;  ///< per calibration, over kept scenarios
  std::vector<Vector> mean_dlogP;            ///< per calibration, over kept scenarios

  std::size_t failures() const;
  std::size_t calibration_index(const std::string& name) const;
};

struct ExperimentOptions {
  unsigned workers = 1;
  SolverOptions solver;
};

/// Solves every scenario under every calibration. Per-scenario failures are
/// recorded. With `drop_failed` a scenario failing under any calibration is
/// removed from all of them and listed in dropped_draws.
ComparisonReport run_scenarios(const std::vector<NamedModel>& models, const ScenarioSet& set,
                               const ExperimentOptions& options = {}, bool drop_failed = false);

/// Raises each tradeable sector's foreign price by `magnitude` in turn.
/// Requires open-economy calibrations.
ComparisonReport foreign_price_experiment(const std::vector<NamedModel>& models, double magnitude = 0.25,
                                          const ExperimentOptions& options = {});

/// Scales each sector's productivity by (1 + magnitude) in turn.
ComparisonReport severe_tfp_experiment(const std::vector<NamedModel>& models, double magnitude = -0.25,
                                       const ExperimentOptions& options = {});

ComparisonReport business_cycle_experiment(const std::vector<NamedModel>& models, const Matrix& cov,
                                           std::size_t n_draws, std::uint64_t seed,
                                           const ExperimentOptions& options = {});

/// Sector indices with the largest price increases in one scenario, ties by index.
std::vector<std::size_t> top_responders(const ComparisonReport& report, std::size_t scenario,
                                        std::size_t calibration, std::size_t k);

/// Scenario indices ordered by |dlogGDP_a - dlogGDP_b|, largest first; failed
/// scenarios last.
std::vector<std::size_t> rank_by_difference(const ComparisonReport& report, std::size_t a, std::size_t b);

/// Scenario indices ordered by the largest |dlogP_a - dlogP_b| over sectors.
std::vector<std::size_t> rank_by_price_difference(const ComparisonReport& report, std::size_t a,
                                                  std::size_t b);

struct Histogram {
  std::vector<double> edges;                ///< bins + 1 ascending edges
  std::vector<std::vector<std::size_t>> counts;  ///< per calibration
};

/// Common-edge histogram of dlogGDP over kept scenarios.
Histogram gdp_histogram(const ComparisonReport& report, std::size_t bins = 40);

}  // namespace prodnet
