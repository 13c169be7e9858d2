#pragma once

// Nested-CES multi-sector general equilibrium: calibration to a base-year
// snapshot and an exact nonlinear solver for shocks to productivity Z,
// foreign prices Ptilde and the exchange rate E.
//
// Price normalization. A closed economy uses nominal household expenditure
// as numeraire (sum_i P_i C_i = 1). An open economy holds E fixed, which pins
// the domestic price level; household spending then equals labor income and
// trade balances as a consequence. At the base year both normalizations
// coincide (all prices equal 1, expenditure equals 1).

#include <string>

#include "prodnet/economy.hpp"

namespace prodnet {

struct Shock {
  Vector Z;       ///< productivities, base 1
  Vector Ptilde;  ///< foreign-currency import prices, base 1
  double E = 1.0; ///< exchange rate

  static Shock none(std::size_t n);
  static Shock tfp(const Vector& Z);
  void validate(std::size_t n) const;
};

struct CalibratedModel {
  Economy economy;
  Elasticities elasticities;
  Vector gamma;   ///< labor share parameters
  Matrix omega;   ///< bundle share parameters
  Matrix phi;     ///< domestic share parameters
  Vector beta;    ///< consumption share parameters
  Vector labor;   ///< fixed sectoral labor endowments
  Vector phi_f;   ///< export demand shifters
  int base_year = 0;
  bool open_economy = true;

  std::size_t size() const noexcept { return static_cast<std::size_t>(gamma.size()); }
  /// True when exports pin the nominal level (open economy with some trade).
  bool exchange_rate_numeraire() const;
};

/// Cost duals of the three CES nests at given prices and wages.
struct CostIndices {
  Vector P;     ///< implied output prices (unit cost over Z)
  Vector Q;     ///< intermediate bundle price indices
  Matrix Pbar;  ///< composite input price indices, purchaser x input
  Vector unit_cost;  ///< Z_i * P_i, the CES dual of (W, Q)
};

CostIndices unit_cost_indices(const Vector& P, const Vector& W, const Shock& shock,
                              const CalibratedModel& model);

/// Expenditure shares implied by cost minimization at given prices.
struct ShareSystem {
  Vector Gamma;   ///< labor share of revenue
  Matrix Omega;   ///< composite share of intermediate spend
  Matrix Phi;     ///< domestic share of composite spend
  Matrix a;       ///< domestic input spend over revenue
  Matrix a_imp;   ///< imported input spend over revenue
  Vector a0;      ///< household budget shares
  Vector NX;      ///< export revenue in numeraire units
};

ShareSystem compute_shares(const Vector& P, const Vector& W, const CostIndices& costs,
                           const Shock& shock, const CalibratedModel& model);

struct EquilibriumState {
  Shock shock;
  Vector P, W, Q;
  Matrix Pbar;
  Vector Y;        ///< gross output quantities
  Vector C;        ///< household consumption quantities
  Vector Cf;       ///< export quantities
  Matrix X;        ///< domestic intermediate quantities, purchaser x input
  Matrix Ximp;     ///< imported intermediate quantities
  Vector lambda;   ///< sales over nominal household expenditure
  double expenditure = 1.0;  ///< nominal household expenditure
  ShareSystem shares;
  double gdp = 0.0;       ///< log real consumption relative to base
  double residual = 0.0;  ///< max log-change at termination
  int iterations = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(P.size()); }
};

struct SolverOptions {
  double damping = 0.5;
  double tolerance = 1e-12;
  int max_iterations = 10000;
  double min_damping = 1.0 / 1024.0;
};

/// Calibrates share parameters to `snapshot`, backs out labor from the
/// closed-economy output system and export shifters from base-year market
/// clearing. Sets xi_export = xi. Without an economy, sectors are coded by
/// index and flagged tradeable when some purchaser imports them. Throws
/// InvertibilityError / DataError.
CalibratedModel calibrate(const IOSnapshot& snapshot, const Elasticities& elasticities,
                          bool open_economy, const Economy* economy = nullptr);

/// Closed-economy base outputs Y = (I - M')^{-1} beta with M_ij = (1-gamma_i) omega_ij.
Vector closed_economy_output(const Vector& gamma, const Matrix& omega, const Vector& beta);

/// Damped fixed point on (log P, log W). Throws SolverError on non-convergence
/// or negative sales shares.
EquilibriumState solve_equilibrium(const CalibratedModel& model, const Shock& shock,
                                   const SolverOptions& options = {});

EquilibriumState base_equilibrium(const CalibratedModel& model, const SolverOptions& options = {});

/// Log real consumption aggregate, relative to its base-year value.
double real_gdp(const EquilibriumState& state, const CalibratedModel& model);

/// Residuals of the equilibrium conditions evaluated on primal quantities,
/// without using the solver's dual formulas.
struct EquilibriumResiduals {
  double production = 0.0;      ///< Y vs. Z F(L, X, Ximp)
  double input_foc = 0.0;       ///< marginal revenue products vs. input prices
  double labor_foc = 0.0;
  double zero_profit = 0.0;
  double market_clearing = 0.0; ///< goods: Y = C + sum X + Cf
  double household_foc = 0.0;
  double budget = 0.0;          ///< sum P C vs. sum W L
  double export_demand = 0.0;
  double numeraire = 0.0;

  double max() const;
};

EquilibriumResiduals check_equilibrium(const CalibratedModel& model, const EquilibriumState& state);

}  // namespace prodnet
