#include "prodnet/analytics.hpp"

#include <cmath>
#include <random>

#include "prodnet/errors.hpp"

namespace prodnet {

PriceIndexChanges price_index_changes(const EquilibriumState& state, const Vector& dlogP,
                                      const Vector& dlogPtilde, double dlogE) {
  const Eigen::Index n = static_cast<Eigen::Index>(state.size());
  const Matrix& Phi = state.shares.Phi;
  const Matrix& Omega = state.shares.Omega;
  PriceIndexChanges out;
  out.dlogPbar.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double foreign = dlogPtilde.size() ? dlogPtilde[j] + dlogE : dlogE;
      out.dlogPbar(i, j) = Phi(i, j) * dlogP[j] + (1.0 - Phi(i, j)) * foreign;
    }
  out.dlogQ = Omega.cwiseProduct(out.dlogPbar).rowwise().sum();
  return out;
}

IODerivative io_matrix_derivative(const CalibratedModel& model, const EquilibriumState& state,
                                  const Vector& dlogP, const Matrix& dlogPbar, const Vector& dlogQ,
                                  const Vector& dlogZ) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  const auto& el = model.elasticities;
  IODerivative d;
  d.dlog_a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double own = dlogP[i] + (dlogZ.size() ? dlogZ[i] : 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(state.shares.a(i, j) > 0.0)) continue;
      d.dlog_a(i, j) = (el.sigma - 1.0) * own + (el.theta[i] - el.sigma) * dlogQ[i] +
                       (el.xi - el.theta[i]) * dlogPbar(i, j) + (1.0 - el.xi) * dlogP[j];
    }
  }
  const Vector& a0 = state.shares.a0;
  const double dlogP0 = a0.dot(dlogP);
  d.dlog_a0 = (1.0 - el.nu) * (dlogP.array() - dlogP0).matrix();
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(a0[j] > 0.0)) d.dlog_a0[j] = 0.0;
  return d;
}

namespace {

// sum_i lambda_i a_ij dlog a_ij + a0_j dlog a0_j + nx_j (dlog NX_j without the
// expenditure term), as a function of dlogP and the exogenous shocks.
Vector sales_source(const CalibratedModel& model, const EquilibriumState& state, const Vector& dlogP,
                    const Vector& dlogZ, const Vector& dlogPtilde, double dlogE) {
  const auto idx = price_index_changes(state, dlogP, dlogPtilde, dlogE);
  const auto d = io_matrix_derivative(model, state, dlogP, idx.dlogPbar, idx.dlogQ, dlogZ);
  const Vector& lam = state.lambda;
  const Matrix& a = state.shares.a;
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  const double xi_f = model.elasticities.xi_export;
  Vector out = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += lam[i] * a(i, j) * d.dlog_a(i, j);
    s += state.shares.a0[j] * d.dlog_a0[j];
    const double nx = state.shares.NX[j] / state.expenditure;
    if (nx > 0.0) s += nx * ((1.0 - xi_f) * dlogP[j] + xi_f * dlogE);
    out[j] = s;
  }
  return out;
}

}  // namespace

FirstOrderResponse first_order_response(const CalibratedModel& model, const EquilibriumState& state,
                                        const Vector& dlogZ, const Vector& dlogPtilde, double dlogE) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  if (dlogZ.size() != n || dlogPtilde.size() != n)
    throw DimensionError("first_order_response: shock vectors have the wrong length");
  const auto& el = model.elasticities;
  const auto& sh = state.shares;
  const Vector& lam = state.lambda;
  const Eigen::Index iP = 0, iW = n, iL = 2 * n, iX = 3 * n, dim = 3 * n + 1;

  Matrix A = Matrix::Zero(dim, dim);
  Vector b = Vector::Zero(dim);

  // Prices: dlogP = Gamma dlogW + a dlogP + a_imp (dlogPtilde + dlogE) - dlogZ.
  for (Eigen::Index i = 0; i < n; ++i) {
    A(iP + i, iP + i) += 1.0;
    for (Eigen::Index j = 0; j < n; ++j) A(iP + i, iP + j) -= sh.a(i, j);
    A(iP + i, iW + i) -= sh.Gamma[i];
    b[iP + i] = sh.a_imp.row(i).dot((dlogPtilde.array() + dlogE).matrix()) - dlogZ[i];
  }

  // Wages: dlogW = (1 - 1/sigma)(dlogP + dlogZ) + (1/sigma)(dlambda/lambda + dlogX).
  const double inv_s = 1.0 / el.sigma;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = iW + i;
    A(r, iW + i) = 1.0;
    if (!(model.labor[i] > 0.0)) continue;
    if (!(lam[i] >= 1e-12))
      throw DomainError("first_order_response: sales share of sector " + model.economy.codes()[i] +
                        " is below 1e-12");
    A(r, iP + i) = -(1.0 - inv_s);
    A(r, iL + i) = -inv_s / lam[i];
    A(r, iX) = -inv_s;
    b[r] = (1.0 - inv_s) * dlogZ[i];
  }

  // Sales: dlambda = a' dlambda + source(dlogP, shocks) - nx dlogX.
  const Vector zeroN = Vector::Zero(n);
  const Vector exo = sales_source(model, state, zeroN, dlogZ, dlogPtilde, dlogE);
  for (Eigen::Index k = 0; k < n; ++k) {
    Vector e = Vector::Zero(n);
    e[k] = 1.0;
    const Vector col = sales_source(model, state, e, zeroN, zeroN, 0.0);
    for (Eigen::Index j = 0; j < n; ++j) A(iL + j, iP + k) -= col[j];
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    A(iL + j, iL + j) += 1.0;
    for (Eigen::Index i = 0; i < n; ++i) A(iL + j, iL + i) -= sh.a(i, j);
    A(iL + j, iX) += sh.NX[j] / state.expenditure;
    b[iL + j] = exo[j];
  }

  // Expenditure: fixed under the expenditure numeraire; otherwise labor
  // income must equal expenditure, sum_i Gamma_i lambda_i = 1.
  if (model.exchange_rate_numeraire()) {
    const double c = 1.0 - el.sigma;
    for (Eigen::Index i = 0; i < n; ++i) {
      A(iX, iL + i) += sh.Gamma[i];
      A(iX, iW + i) += lam[i] * sh.Gamma[i] * c;
      A(iX, iP + i) -= lam[i] * sh.Gamma[i] * c;
      b[iX] += lam[i] * sh.Gamma[i] * c * dlogZ[i];
    }
  } else {
    A(iX, iX) = 1.0;
  }

  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible())
    throw SingularityError("first_order_response: stacked linear system is singular");
  const Vector x = lu.solve(b);

  FirstOrderResponse out;
  out.dlogP = x.segment(iP, n);
  out.dlogW = x.segment(iW, n);
  out.dlambda = x.segment(iL, n);
  out.dlog_expenditure = x[iX];
  out.residual = (A * x - b).cwiseAbs().maxCoeff();
  out.dlogGDP_first_order = out.dlog_expenditure - sh.a0.dot(out.dlogP);
  out.hulten_term = lam.dot(dlogZ);
  return out;
}

double gdp_second_order(const CalibratedModel& model, const EquilibriumState& state, std::size_t sector,
                        double dlogZ) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  if (sector >= model.size()) throw DimensionError("gdp_second_order: sector index out of range");
  const auto k = static_cast<Eigen::Index>(sector);
  Vector e = Vector::Zero(n);
  e[k] = 1.0;
  const auto fo = first_order_response(model, state, e, Vector::Zero(n), 0.0);
  return state.lambda[k] * dlogZ + 0.5 * fo.dlambda[k] * dlogZ * dlogZ;
}

Vector reduced_form_fixed_effects(const CalibratedModel& model, const EquilibriumState& state,
                                  const Vector& dlogP, const Matrix& dlogPhi) {
  const auto& el = model.elasticities;
  if (el.xi == 1.0) throw SingularityError("reduced form is singular at xi = 1");
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  Vector eta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double dlogQ = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      dlogQ += state.shares.Omega(i, j) * (dlogP[j] + dlogPhi(i, j) / (el.xi - 1.0));
    eta[i] = (el.theta[i] - 1.0) * dlogQ;
  }
  return eta;
}

Matrix reduced_form_check(const CalibratedModel& model, const EquilibriumState& state,
                          const Vector& dlogP, const Matrix& dlogPhi) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  if (dlogP.size() != n || dlogPhi.rows() != n || dlogPhi.cols() != n)
    throw DimensionError("reduced_form_check: input dimensions");
  const auto& el = model.elasticities;
  const Vector eta = reduced_form_fixed_effects(model, state, dlogP, dlogPhi);
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double b1 = 1.0 - el.theta[i];
    const double b2 = (el.xi - el.theta[i]) / (el.xi - 1.0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (state.shares.Omega(i, j) * state.shares.Phi(i, j) > 0.0)
        out(i, j) = b1 * dlogP[j] + b2 * dlogPhi(i, j) + eta[i];
  }
  return out;
}

Panel synthetic_panel(const CalibratedModel& model, const EquilibriumState& state, const SyntheticPanelSpec& spec) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  std::vector<bool> imported(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (model.phi(i, j) < 1.0) imported[static_cast<std::size_t>(j)] = true;

  Panel panel;
  for (int t = 1; t <= spec.years; ++t) {
    Vector dP(n);
    Matrix dPhi = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) dP[j] = spec.price_sd * N01(rng);
    for (Eigen::Index j = 0; j < n; ++j)
      if (imported[static_cast<std::size_t>(j)]) dPhi.col(j).setConstant(spec.phi_sd * N01(rng));
    const Matrix rf = reduced_form_check(model, state, dP, dPhi);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!(state.shares.Omega(i, j) * state.shares.Phi(i, j) > 0.0)) continue;
        PanelObservation o;
        o.i = static_cast<std::size_t>(i);
        o.j = static_cast<std::size_t>(j);
        o.t = t;
        o.dlog_p = dP[j];
        o.dlog_phi = dPhi(i, j);
        o.dlog_omega = rf(i, j) + (spec.noise_sd > 0.0 ? spec.noise_sd * N01(rng) : 0.0);
        panel.push_back(o);
      }
  }
  return panel;
}

}  // namespace prodnet
