#pragma once

// GMM estimation of the intermediate-input elasticities theta_i and the
// Armington elasticity xi from within-(i,t) demeaned share changes:
//   eps = dlog_omega - (1 - theta_i) dlog_p - (xi - theta_i)/(xi - 1) dlog_phi.

#include <string>
#include <vector>

#include "prodnet/economy.hpp"
#include "prodnet/panel.hpp"
#include "prodnet/powell.hpp"

namespace prodnet {

struct ResidualizedPanel {
  std::size_t n_sectors = 0;
  Panel obs;                       ///< demeaned within (i, t)
  std::vector<std::size_t> group;  ///< group index per observation
  std::size_t n_groups = 0;

  std::size_t size() const { return obs.size(); }
};

/// Demeans dlog_omega, dlog_p and dlog_phi within each (i, t) group.
/// Throws DimensionError when an observation's i is not below n_sectors.
ResidualizedPanel residualize(const Panel& panel, std::size_t n_sectors);

struct StructuralCoefficients {
  double beta1 = 0.0;  ///< 1 - theta
  double beta2 = 0.0;  ///< (xi - theta)/(xi - 1)
};
/// Throws SingularityError at xi = 1.
StructuralCoefficients structural_coefficients(double theta, double xi);

struct MomentVector {
  Vector g;                         ///< [price moments (N); import-ratio moments (N)]
  std::vector<std::size_t> empty;   ///< sectors without observations (moments set to 0)
};

/// Sample moments (1/Nobs) sum dlog_p 1[i=I] eps and (1/Nobs) sum dlog_phi 1[i=I] eps.
MomentVector moment_conditions(const Vector& theta, double xi, const ResidualizedPanel& rp);

/// g'g with identity weighting.
double gmm_objective(const Vector& theta, double xi, const ResidualizedPanel& rp);

enum class EstimationMode { sector_specific, uniform, biased_closed };

std::string to_string(EstimationMode mode);
/// Accepts "sector_specific", "uniform", "biased_closed" and "biased".
EstimationMode parse_estimation_mode(const std::string& s);

struct SandwichResult {
  Matrix covariance;  ///< over (theta..., xi) as estimated in the given mode
  Vector se;
  Matrix G;           ///< Jacobian of the moments
  Matrix Omega;       ///< outer-product moment covariance
};

/// Robust covariance (1/Nobs)(G'G)^{-1} G' Omega G (G'G)^{-1} with analytic G.
/// In uniform mode theta must have length 1; in biased_closed mode xi is
/// ignored. Throws RankDeficiencyError naming the offending parameter.
SandwichResult sandwich_variance(const Vector& theta, double xi, const ResidualizedPanel& rp,
                                 EstimationMode mode = EstimationMode::sector_specific);

/// Moment Jacobian by central differences, for checking the analytic one.
Matrix moment_jacobian_numeric(const Vector& theta, double xi, const ResidualizedPanel& rp, EstimationMode mode,
                               double h = 1e-6);

struct EstimationOptions {
  double xi_lower = 1.0 + 1e-3;
  double xi_upper = 50.0;
  double bound_tolerance = 1e-8;  ///< theta within this of 0 is flagged as at the bound
  int workers = 0;                ///< concurrent multi-start runs; 0 = one per start
  PowellOptions powell;
};

struct StartOutcome {
  Vector x0;
  double objective = 0.0;
  bool converged = false;
  int evaluations = 0;
};

struct EstimationResult {
  EstimationMode mode = EstimationMode::sector_specific;
  Vector theta_hat;  ///< length N (uniform: the pooled value repeated)
  double xi_hat = 0.0;
  Vector se_theta;
  double se_xi = 0.0;
  Matrix covariance;
  double objective_value = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_moments = 0;
  std::size_t n_params = 0;
  bool converged = false;
  bool xi_identified = true;     ///< false when no import-ratio variation; xi then held at its start
  bool variance_ok = true;       ///< false when the sandwich formula was rank deficient
  std::string variance_error;
  std::vector<bool> at_bound;    ///< theta_i on its lower bound 0
  std::size_t best_start = 0;
  std::vector<StartOutcome> starts;
};

/// Multi-start Powell minimization of gmm_objective. Throws EstimationError
/// if a sector has no observations in sector-specific or biased mode.
EstimationResult estimate(const ResidualizedPanel& rp, EstimationMode mode, const EstimationOptions& options = {});

/// Household elasticity nu from consumption-share changes with year fixed
/// effects. Observations use i = 0 for the household and j for the good.
struct HouseholdEstimate {
  double nu_hat = 1.0;
  double se = 0.0;
  bool degenerate = false;  ///< no share variation: nu = 1 is not informative
  bool converged = false;
  std::size_t n_obs = 0;
};
HouseholdEstimate estimate_household_nu(const Panel& consumption_panel, const EstimationOptions& options = {});

}  // namespace prodnet
