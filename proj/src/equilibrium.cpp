#include "prodnet/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "prodnet/errors.hpp"

namespace prodnet {

namespace {

// CES price index (sum_k w_k p_k^{1-s})^{1/(1-s)}, Cobb-Douglas at s = 1 and
// the weighted mean (Leontief) at s = 0. Zero weights are skipped.
template <class W, class P>
double ces_dual(const W& w, const P& p, double s) {
  const Eigen::Index n = w.size();
  if (s == 1.0) {
    double log_sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (w[k] > 0.0) log_sum += w[k] * std::log(p[k]);
    return std::exp(log_sum);
  }
  if (s == 0.0) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (w[k] > 0.0) sum += w[k] * p[k];
    return sum;
  }
  double sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    if (w[k] > 0.0) sum += w[k] * std::pow(p[k], 1.0 - s);
  return std::pow(sum, 1.0 / (1.0 - s));
}

double two_input_dual(double w1, double p1, double p2, double s) {
  const Eigen::Vector2d w(w1, 1.0 - w1);
  const Eigen::Vector2d p(p1, p2);
  return ces_dual(w, p, s);
}

// Primal CES aggregator (sum_k w_k^{1/s} x_k^{(s-1)/s})^{s/(s-1)} and its
// gradient. At s = 0 the gradient is undefined and left empty.
struct CesValue {
  double value = 0.0;
  Vector grad;
};

CesValue ces_primal(const Vector& w, const Vector& x, double s) {
  const Eigen::Index n = w.size();
  CesValue out;
  if (s == 0.0) {
    out.value = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k)
      if (w[k] > 0.0) out.value = std::min(out.value, x[k] / w[k]);
    return out;
  }
  out.grad = Vector::Zero(n);
  if (s == 1.0) {
    double log_v = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (w[k] > 0.0) log_v += w[k] * std::log(x[k] / w[k]);
    out.value = std::exp(log_v);
    for (Eigen::Index k = 0; k < n; ++k)
      if (w[k] > 0.0) out.grad[k] = w[k] * out.value / x[k];
    return out;
  }
  const double r = (s - 1.0) / s;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    if (w[k] > 0.0) sum += std::pow(w[k], 1.0 / s) * std::pow(x[k], r);
  out.value = std::pow(sum, 1.0 / r);
  for (Eigen::Index k = 0; k < n; ++k)
    if (w[k] > 0.0)
      out.grad[k] = std::pow(w[k], 1.0 / s) * std::pow(x[k], r - 1.0) * std::pow(out.value, 1.0 - r);
  return out;
}

double rel_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

struct Sales {
  Vector S;  // nominal sales P_i Y_i
  double expenditure = 1.0;
};

Sales solve_sales(const ShareSystem& sh, const CalibratedModel& model) {
  const Eigen::Index n = sh.a.rows();
  const Matrix I = Matrix::Identity(n, n);
  Eigen::PartialPivLU<Matrix> lu((I - sh.a).transpose());
  Sales out;
  const Vector u = lu.solve(sh.a0);
  if (model.exchange_rate_numeraire()) {
    // S = u X + v with X = Gamma . S; 1 - Gamma . u = u . (row sums of a_imp).
    const Vector v = lu.solve(sh.NX);
    const Vector m = sh.a_imp.rowwise().sum();
    const double denom = u.dot(m);
    const double numer = sh.Gamma.dot(v);
    if (!(denom > 0.0) || !(numer > 0.0))
      throw SolverError("open economy without a positive trade channel cannot pin the price level");
    out.expenditure = numer / denom;
    out.S = u * out.expenditure + v;
  } else {
    out.expenditure = 1.0;
    out.S = u;
  }
  if (!out.S.allFinite()) throw SolverError("market clearing system is singular");
  return out;
}

}  // namespace

Shock Shock::none(std::size_t n) {
  Shock s;
  s.Z = Vector::Ones(static_cast<Eigen::Index>(n));
  s.Ptilde = Vector::Ones(static_cast<Eigen::Index>(n));
  s.E = 1.0;
  return s;
}

Shock Shock::tfp(const Vector& Z) {
  Shock s = none(static_cast<std::size_t>(Z.size()));
  s.Z = Z;
  return s;
}

void Shock::validate(std::size_t n) const {
  if (static_cast<std::size_t>(Z.size()) != n || static_cast<std::size_t>(Ptilde.size()) != n)
    throw DimensionError("shock vectors do not match the number of sectors");
  if (!(Z.array() > 0.0).all() || !(Ptilde.array() > 0.0).all() || !(E > 0.0) || !Z.allFinite() ||
      !Ptilde.allFinite() || !std::isfinite(E))
    throw DomainError("shock vectors must be strictly positive and finite");
}

bool CalibratedModel::exchange_rate_numeraire() const {
  return open_economy && phi_f.size() > 0 && phi_f.maxCoeff() > 0.0;
}

CostIndices unit_cost_indices(const Vector& P, const Vector& W, const Shock& shock,
                              const CalibratedModel& model) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  if (P.size() != n || W.size() != n) throw DimensionError("unit_cost_indices: price vector length");
  if (!(P.array() > 0.0).all() || !(W.array() > 0.0).all())
    throw DomainError("unit_cost_indices: prices and wages must be positive");
  shock.validate(model.size());
  const auto& el = model.elasticities;

  CostIndices out;
  out.Pbar.resize(n, n);
  out.Q.resize(n);
  out.P.resize(n);
  out.unit_cost.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double phi = model.phi(i, j);
      out.Pbar(i, j) = phi >= 1.0 ? P[j] : two_input_dual(phi, P[j], shock.E * shock.Ptilde[j], el.xi);
    }
    const double theta = el.theta[i];
    if (model.omega.row(i).sum() <= 0.0) {
      out.Q[i] = 1.0;  // no intermediates; the bundle carries zero weight
    } else if (theta == 0.0) {
      out.Q[i] = model.omega.row(i).dot(out.Pbar.row(i));  // Leontief
    } else {
      out.Q[i] = ces_dual(model.omega.row(i), out.Pbar.row(i), theta);
    }
    out.unit_cost[i] = two_input_dual(model.gamma[i], W[i], out.Q[i], el.sigma);
    out.P[i] = out.unit_cost[i] / shock.Z[i];
  }
  return out;
}

ShareSystem compute_shares(const Vector& P, const Vector& W, const CostIndices& costs,
                           const Shock& shock, const CalibratedModel& model) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  const auto& el = model.elasticities;
  ShareSystem sh;
  sh.Gamma.resize(n);
  sh.Omega = Matrix::Zero(n, n);
  sh.Phi = Matrix::Ones(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = model.gamma[i];
    sh.Gamma[i] = (g == 0.0 || el.sigma == 1.0) ? g : g * std::pow(W[i] / costs.unit_cost[i], 1.0 - el.sigma);
    const double theta = el.theta[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = model.omega(i, j);
      if (w > 0.0)
        sh.Omega(i, j) = theta == 1.0 ? w : w * std::pow(costs.Pbar(i, j) / costs.Q[i], 1.0 - theta);
      const double phi = model.phi(i, j);
      if (phi < 1.0)
        sh.Phi(i, j) = (el.xi == 1.0 || phi == 0.0) ? phi : phi * std::pow(P[j] / costs.Pbar(i, j), 1.0 - el.xi);
    }
  }
  sh.a = sh.Omega.cwiseProduct(sh.Phi);
  sh.a_imp = sh.Omega.cwiseProduct((Matrix::Ones(n, n) - sh.Phi));
  for (Eigen::Index i = 0; i < n; ++i) {
    sh.a.row(i) *= 1.0 - sh.Gamma[i];
    sh.a_imp.row(i) *= 1.0 - sh.Gamma[i];
  }

  sh.a0.resize(n);
  for (Eigen::Index j = 0; j < n; ++j)
    sh.a0[j] = el.nu == 1.0 ? model.beta[j] : model.beta[j] * std::pow(P[j], 1.0 - el.nu);
  sh.a0 /= sh.a0.sum();

  sh.NX = Vector::Zero(n);
  if (model.open_economy)
    for (Eigen::Index j = 0; j < n; ++j)
      if (model.phi_f[j] > 0.0)
        sh.NX[j] = P[j] * model.phi_f[j] * std::pow(P[j] / shock.E, -el.xi_export);
  return sh;
}

Vector closed_economy_output(const Vector& gamma, const Matrix& omega, const Vector& beta) {
  const Eigen::Index n = gamma.size();
  Matrix m = omega;
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) *= 1.0 - gamma[i];
  const Matrix psi = leontief_inverse(m);
  return psi.transpose() * beta;
}

CalibratedModel calibrate(const IOSnapshot& snapshot, const Elasticities& elasticities,
                          bool open_economy, const Economy* economy) {
  const auto violations = validate_snapshot(snapshot);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "calibrate: snapshot " << snapshot.year << " is inconsistent:";
    for (const auto& v : violations) msg << "\n  " << v.invariant << ": " << v.detail;
    throw DataError(msg.str());
  }
  const std::size_t n = snapshot.size();
  elasticities.validate();
  if (static_cast<std::size_t>(elasticities.theta.size()) != n)
    throw DimensionError("calibrate: theta has the wrong length");

  CalibratedModel m;
  if (economy) {
    if (economy->n_sectors() != n) throw DimensionError("calibrate: economy size differs from snapshot");
    m.economy = *economy;
  } else {
    std::vector<std::string> codes;
    std::vector<bool> tradeable(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      codes.push_back(std::to_string(i));
      tradeable[i] = snapshot.phi.col(static_cast<Eigen::Index>(i)).minCoeff() < 1.0;
    }
    m.economy = Economy(codes, {}, tradeable);
  }
  m.elasticities = elasticities;
  m.elasticities.xi_export = elasticities.xi;
  m.gamma = snapshot.gamma;
  m.omega = snapshot.omega;
  m.phi = open_economy ? snapshot.phi : Matrix::Ones(snapshot.phi.rows(), snapshot.phi.cols());
  m.beta = snapshot.a0;
  m.base_year = snapshot.year;
  m.open_economy = open_economy;

  const Vector Y = closed_economy_output(m.gamma, m.omega, m.beta);
  for (Eigen::Index i = 0; i < Y.size(); ++i)
    if (Y[i] < 0.0)
      throw DataError("calibrate: negative implied output for sector " + m.economy.codes()[i]);
  m.labor = m.gamma.cwiseProduct(Y);

  // Exports absorb exactly the domestic demand displaced by imports, so the
  // closed-economy labor allocation is also the open-economy base equilibrium.
  m.phi_f = Vector::Zero(Y.size());
  if (open_economy) {
    for (Eigen::Index i = 0; i < Y.size(); ++i)
      for (Eigen::Index j = 0; j < Y.size(); ++j)
        m.phi_f[j] += (1.0 - m.gamma[i]) * m.omega(i, j) * (1.0 - m.phi(i, j)) * Y[i];
    chop_small(m.phi_f);
  }
  return m;
}

EquilibriumState solve_equilibrium(const CalibratedModel& model, const Shock& shock,
                                   const SolverOptions& options) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  shock.validate(model.size());
  const auto& el = model.elasticities;

  // x = (log P, log W); the map sends x to the implied unit costs and wages.
  Vector x = Vector::Zero(2 * n);
  double damping = options.damping;
  double prev_change = std::numeric_limits<double>::infinity();
  double change = prev_change;
  int iter = 0;

  auto step = [&](const Vector& xc) {
    const Vector P = xc.head(n).array().exp();
    const Vector W = xc.tail(n).array().exp();
    const CostIndices costs = unit_cost_indices(P, W, shock, model);
    const ShareSystem sh = compute_shares(P, W, costs, shock, model);
    const Sales sales = solve_sales(sh, model);
    Vector out(2 * n);
    out.head(n) = costs.P.array().log().matrix() - xc.head(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out[n + i] = 0.0;
      if (model.labor[i] <= 0.0) continue;
      if (!(sales.S[i] > 0.0)) {
        std::ostringstream msg;
        msg << "non-positive sales share for sector " << model.economy.codes()[i] << " (" << sales.S[i] << ")";
        throw SolverError(msg.str(), change);
      }
      const double Y = sales.S[i] / P[i];
      const double logW_new = std::log(P[i]) + (1.0 - 1.0 / el.sigma) * std::log(shock.Z[i]) +
                              std::log(model.gamma[i] * Y / model.labor[i]) / el.sigma;
      out[n + i] = logW_new - xc[n + i];
    }
    return out;
  };
  auto norm = [](const Vector& v) { return v.cwiseAbs().maxCoeff(); };

  // Newton on the fixed-point residual with a forward-difference Jacobian.
  // Returns false when no step reduces the residual.
  auto newton = [&](const Vector& r) {
    const Eigen::Index m = 2 * n;
    Matrix J(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double h = 1e-7;
      Vector xh = x;
      xh[k] += h;
      Vector rh;
      try {
        rh = step(xh);
      } catch (const Error&) {
        return false;
      }
      J.col(k) = (rh - r) / h;
    }
    Eigen::FullPivLU<Matrix> lu(J);
    if (!lu.isInvertible()) return false;
    const Vector dx = -lu.solve(r);
    if (!dx.allFinite()) return false;
    for (double t = 1.0; t >= 1.0 / 64.0; t *= 0.5) {
      const Vector xt = x + t * dx;
      try {
        if (norm(step(xt)) < norm(r)) {
          x = xt;
          return true;
        }
      } catch (const Error&) {
      }
    }
    return false;
  };

  const int newton_after = 25;
  // Largest log-change applied by one damped step.
  const double max_step = 0.5;
  Vector x_prev = x;
  for (iter = 1; iter <= options.max_iterations; ++iter) {
    Vector r;
    try {
      r = step(x);
      change = norm(r);
      if (!std::isfinite(change)) throw SolverError("equilibrium iteration produced non-finite values", change);
    } catch (const SolverError&) {
      // An overshooting iterate left the admissible region: retreat and shorten the step.
      if (iter == 1 || damping <= options.min_damping) throw;
      x = x_prev;
      damping = std::max(options.min_damping, 0.25 * damping);
      prev_change = std::numeric_limits<double>::infinity();
      continue;
    }
    if (change < options.tolerance) break;
    x_prev = x;
    if (iter > newton_after && newton(r)) {
      prev_change = change;
      continue;
    }
    if (change > prev_change) damping = std::max(options.min_damping, 0.5 * damping);
    prev_change = change;
    const double len = damping * change;
    x += (len > max_step ? max_step / len : 1.0) * damping * r;
  }
  if (iter > options.max_iterations) {
    std::ostringstream msg;
    msg << "equilibrium solver did not converge in " << options.max_iterations
        << " iterations (last max log-change " << change << ")";
    throw SolverError(msg.str(), change);
  }
  const Vector logP = x.head(n);
  const Vector logW = x.tail(n);

  EquilibriumState st;
  st.shock = shock;
  st.P = logP.array().exp();
  st.W = logW.array().exp();
  const CostIndices costs = unit_cost_indices(st.P, st.W, shock, model);
  st.Q = costs.Q;
  st.Pbar = costs.Pbar;
  st.shares = compute_shares(st.P, st.W, costs, shock, model);
  const Sales sales = solve_sales(st.shares, model);
  st.expenditure = sales.expenditure;
  st.lambda = sales.S / sales.expenditure;
  if ((st.lambda.array() < -1e-14).any())
    throw SolverError("equilibrium has negative sales shares; shock is inadmissible", change);
  st.Y = sales.S.cwiseQuotient(st.P);
  st.C = (st.shares.a0 * sales.expenditure).cwiseQuotient(st.P);
  st.Cf = st.shares.NX.cwiseQuotient(st.P);
  st.X.resize(n, n);
  st.Ximp.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      st.X(i, j) = st.shares.a(i, j) * sales.S[i] / st.P[j];
      st.Ximp(i, j) = st.shares.a_imp(i, j) * sales.S[i] / (shock.E * shock.Ptilde[j]);
    }
  st.residual = change;
  st.iterations = iter;
  st.gdp = real_gdp(st, model);
  return st;
}

EquilibriumState base_equilibrium(const CalibratedModel& model, const SolverOptions& options) {
  return solve_equilibrium(model, Shock::none(model.size()), options);
}

double real_gdp(const EquilibriumState& state, const CalibratedModel& model) {
  const double nu = model.elasticities.nu;
  const Vector& beta = model.beta;
  auto aggregate = [&](const Vector& c) {
    if (nu == 1.0) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < beta.size(); ++i)
        if (beta[i] > 0.0) s += beta[i] * std::log(c[i] / beta[i]);
      return s;
    }
    const double r = (nu - 1.0) / nu;
    double s = 0.0;
    for (Eigen::Index i = 0; i < beta.size(); ++i)
      if (beta[i] > 0.0) s += std::pow(beta[i], 1.0 / nu) * std::pow(c[i], r);
    return std::log(s) / r;
  };
  return aggregate(state.C) - aggregate(beta);
}

double EquilibriumResiduals::max() const {
  return std::max({production, input_foc, labor_foc, zero_profit, market_clearing, household_foc,
                   budget, export_demand, numeraire});
}

EquilibriumResiduals check_equilibrium(const CalibratedModel& model, const EquilibriumState& st) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  const auto& el = model.elasticities;
  const Shock& sh = st.shock;
  EquilibriumResiduals r;

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(st.Y[i] > 0.0)) continue;
    // Composite inputs and their shadow prices.
    Vector xbar = Vector::Zero(n);
    Vector dxbar_dom = Vector::Zero(n);
    Vector dxbar_imp = Vector::Zero(n);
    Vector pbar_shadow = Vector::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(model.omega(i, j) > 0.0)) continue;
      const double phi = model.phi(i, j);
      const double pm = sh.E * sh.Ptilde[j];
      if (phi >= 1.0) {
        xbar[j] = st.X(i, j);
        dxbar_dom[j] = 1.0;
      } else {
        const Eigen::Vector2d w(phi, 1.0 - phi);
        const Eigen::Vector2d x(st.X(i, j), st.Ximp(i, j));
        const CesValue v = ces_primal(w, x, el.xi);
        xbar[j] = v.value;
        dxbar_dom[j] = v.grad[0];
        dxbar_imp[j] = v.grad[1];
        if (phi > 0.0 && st.Ximp(i, j) > 0.0 && st.X(i, j) > 0.0)
          r.input_foc = std::max(r.input_foc, rel_gap(dxbar_dom[j] / dxbar_imp[j], st.P[j] / pm));
      }
      pbar_shadow[j] = (st.P[j] * st.X(i, j) + pm * st.Ximp(i, j)) / xbar[j];
    }

    const Vector w_row = model.omega.row(i).transpose();
    double M = 0.0;
    double spend = 0.0;
    const bool has_inputs = w_row.sum() > 0.0 && model.gamma[i] < 1.0;
    if (has_inputs) {
      const CesValue bundle = ces_primal(w_row, xbar, el.theta[i]);
      M = bundle.value;
      for (Eigen::Index j = 0; j < n; ++j)
        if (w_row[j] > 0.0) spend += pbar_shadow[j] * xbar[j];
      const double Qshadow = spend / M;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!(w_row[j] > 0.0)) continue;
        if (el.theta[i] == 0.0)
          r.input_foc = std::max(r.input_foc, rel_gap(xbar[j], w_row[j] * M));
        else
          r.input_foc = std::max(r.input_foc, rel_gap(Qshadow * bundle.grad[j], pbar_shadow[j]));
      }
      // Outer nest FOC for the bundle at its shadow price.
      const Eigen::Vector2d w(model.gamma[i], 1.0 - model.gamma[i]);
      const Eigen::Vector2d x(model.labor[i], M);
      const CesValue outer = ces_primal(w, x, el.sigma);
      const double F = sh.Z[i] * outer.value;
      r.production = std::max(r.production, rel_gap(F, st.Y[i]));
      r.input_foc = std::max(r.input_foc, rel_gap(st.P[i] * sh.Z[i] * outer.grad[1], Qshadow));
      if (model.labor[i] > 0.0)
        r.labor_foc = std::max(r.labor_foc, rel_gap(st.P[i] * sh.Z[i] * outer.grad[0], st.W[i]));
    } else {
      // Pure-labor technology Y = Z L.
      r.production = std::max(r.production, rel_gap(sh.Z[i] * model.labor[i], st.Y[i]));
      r.labor_foc = std::max(r.labor_foc, rel_gap(st.P[i] * sh.Z[i], st.W[i]));
    }
    const double cost = st.W[i] * model.labor[i] + spend;
    r.zero_profit = std::max(r.zero_profit, rel_gap(st.P[i] * st.Y[i], cost));
  }

  for (Eigen::Index j = 0; j < n; ++j) {
    const double demand = st.C[j] + st.X.col(j).sum() + st.Cf[j];
    r.market_clearing = std::max(r.market_clearing, rel_gap(st.Y[j], demand));
    const double target = model.open_economy && model.phi_f[j] > 0.0
                              ? model.phi_f[j] * std::pow(st.P[j] / sh.E, -el.xi_export)
                              : 0.0;
    r.export_demand = std::max(r.export_demand, rel_gap(st.Cf[j], target));
  }

  // Household: marginal utility per unit price must be equalized.
  double cons_value = 0.0;
  double log_agg = 0.0;
  {
    const double nu = el.nu;
    if (nu == 1.0) {
      for (Eigen::Index i = 0; i < n; ++i)
        if (model.beta[i] > 0.0) log_agg += model.beta[i] * std::log(st.C[i] / model.beta[i]);
    } else {
      const double rr = (nu - 1.0) / nu;
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (model.beta[i] > 0.0) s += std::pow(model.beta[i], 1.0 / nu) * std::pow(st.C[i], rr);
      log_agg = std::log(s) / rr;
    }
    double ref = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < n; ++i) {
      cons_value += st.P[i] * st.C[i];
      if (!(model.beta[i] > 0.0)) continue;
      const double log_mu = (std::log(model.beta[i]) + log_agg - std::log(st.C[i])) / nu - std::log(st.P[i]);
      if (std::isnan(ref)) ref = log_mu;
      r.household_foc = std::max(r.household_foc, std::abs(log_mu - ref));
    }
  }
  const double income = st.W.dot(model.labor);
  r.budget = rel_gap(cons_value, income);
  if (!model.exchange_rate_numeraire()) r.numeraire = std::abs(cons_value - 1.0);
  return r;
}

}  // namespace prodnet
