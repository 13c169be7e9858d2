#pragma once

// First- and second-order analytic responses around a solved equilibrium.
// These are the linearized counterparts of solve_equilibrium and serve as its
// oracle (and vice versa).

#include <cstdint>
#include <vector>

#include "prodnet/equilibrium.hpp"
#include "prodnet/panel.hpp"

namespace prodnet {

/// Log-changes of the input-output matrix and household shares.
struct IODerivative {
  Matrix dlog_a;   ///< d log a_ij, zero where a_ij = 0
  Vector dlog_a0;  ///< d log a_0j
};

/// d log a_ij = (sigma-1)(dlogP_i + dlogZ_i) + (theta_i - sigma) dlogQ_i
///            + (xi - theta_i) dlogPbar_ij + (1 - xi) dlogP_j
/// d log a_0j = (1 - nu)(dlogP_j - sum_k a_0k dlogP_k).
/// `dlogZ` may be empty (treated as zero).
IODerivative io_matrix_derivative(const CalibratedModel& model, const EquilibriumState& state,
                                  const Vector& dlogP, const Matrix& dlogPbar, const Vector& dlogQ,
                                  const Vector& dlogZ = Vector());

/// Composite-price and bundle-price log-changes implied by domestic price,
/// foreign price and exchange-rate changes.
struct PriceIndexChanges {
  Matrix dlogPbar;
  Vector dlogQ;
};
PriceIndexChanges price_index_changes(const EquilibriumState& state, const Vector& dlogP,
                                      const Vector& dlogPtilde, double dlogE);

struct FirstOrderResponse {
  Vector dlogP;
  Vector dlogW;
  Vector dlambda;            ///< level change in sales shares
  double dlog_expenditure = 0.0;  ///< nominal expenditure (zero under the expenditure numeraire)
  double dlogGDP_first_order = 0.0;
  double hulten_term = 0.0;  ///< sum_i lambda_i dlogZ_i
  double residual = 0.0;     ///< max |A x - b| of the stacked solve
};

/// Solves the stacked linear system in (dlogP, dlogW, dlambda, dlog expenditure).
/// Throws SingularityError when the system is singular and DomainError when a
/// sector with labor has a sales share below 1e-12.
FirstOrderResponse first_order_response(const CalibratedModel& model, const EquilibriumState& state,
                                        const Vector& dlogZ, const Vector& dlogPtilde, double dlogE);

/// lambda_i dz + 0.5 (d lambda_i / d log Z_i) dz^2.
double gdp_second_order(const CalibratedModel& model, const EquilibriumState& state, std::size_t sector,
                        double dlogZ);

/// Predicted log-change of the domestic expenditure share Omega_ij * Phi_ij:
/// (1 - theta_i) dlogP_j + (xi - theta_i)/(xi - 1) dlogPhi_ij + eta_i with
/// eta_i = (theta_i - 1) dlogQ_i. Entries with zero share are returned as 0.
Matrix reduced_form_check(const CalibratedModel& model, const EquilibriumState& state,
                          const Vector& dlogP, const Matrix& dlogPhi);

/// Fixed effect eta_i = (theta_i - 1) dlogQ_i for the same inputs.
Vector reduced_form_fixed_effects(const CalibratedModel& model, const EquilibriumState& state,
                                  const Vector& dlogP, const Matrix& dlogPhi);

struct SyntheticPanelSpec {
  int years = 25;
  double price_sd = 0.05;  ///< sd of yearly dlogP_j
  double phi_sd = 0.05;    ///< sd of yearly dlogPhi_j for inputs with imports
  double noise_sd = 0.0;   ///< additive noise on dlog_omega
  std::uint64_t seed = 1;
};

/// Draws yearly price and import-ratio changes and emits the share changes
/// predicted by reduced_form_check, one observation per (i, j) with a
/// positive domestic share. Import ratios move in common across purchasers.
Panel synthetic_panel(const CalibratedModel& model, const EquilibriumState& state, const SyntheticPanelSpec& spec);

}  // namespace prodnet
