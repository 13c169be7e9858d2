#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "prodnet/analytics.hpp"
#include "prodnet/errors.hpp"

using namespace prodnet;
using namespace prodnet::testing;

namespace {

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

Shock scaled(const Vector& dlogZ, const Vector& dlogPt, double dlogE, double h) {
  Shock s;
  s.Z = (h * dlogZ).array().exp();
  s.Ptilde = (h * dlogPt).array().exp();
  s.E = std::exp(h * dlogE);
  return s;
}

double rel_err(double a, double b, double floor) { return std::abs(a - b) / std::max(std::abs(b), floor); }

}  // namespace

TEST_CASE("io_matrix_derivative closed forms") {
  const auto m = open_fixture5();
  const auto st = base_equilibrium(m);
  const Vector z = Vector::Zero(5);
  SUBCASE("zero price changes") {
    const auto d = io_matrix_derivative(m, st, z, Matrix::Zero(5, 5), z);
    CHECK(d.dlog_a.cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs(d.dlog_a0) == 0.0);
  }
  SUBCASE("single nest collapse when sigma = theta = xi") {
    auto mc = closed_fixture(4, 3, Vector::Constant(4, 0.7), 0.7, 0.6);
    mc.elasticities.xi = 0.7;
    const auto sc = base_equilibrium(mc);
    Vector dP(4);
    dP << 0.01, -0.02, 0.03, 0.005;
    const auto idx = price_index_changes(sc, dP, Vector::Zero(4), 0.0);
    const auto d = io_matrix_derivative(mc, sc, dP, idx.dlogPbar, idx.dlogQ);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (sc.shares.a(i, j) > 0.0) CHECK(d.dlog_a(i, j) == doctest::Approx((0.7 - 1.0) * (dP[i] - dP[j])));
  }
}

TEST_CASE("io_matrix_derivative matches finite differences of equilibrium shares") {
  const auto m = open_fixture5(17);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N01;
  Vector dZ(5), dPt(5);
  for (int k = 0; k < 5; ++k) {
    dZ[k] = N01(rng);
    dPt[k] = N01(rng);
  }
  const double h = 1e-4;
  const auto up = solve_equilibrium(m, scaled(dZ, dPt, 0.0, h));
  const auto dn = solve_equilibrium(m, scaled(dZ, dPt, 0.0, -h));
  const auto base = base_equilibrium(m);
  const Vector dlogP = (up.P.array().log() - dn.P.array().log()).matrix() / (2 * h);
  const Vector dlogQ = (up.Q.array().log() - dn.Q.array().log()).matrix() / (2 * h);
  const Matrix dlogPbar = (up.Pbar.array().log() - dn.Pbar.array().log()).matrix() / (2 * h);
  const auto d = io_matrix_derivative(m, base, dlogP, dlogPbar, dlogQ, dZ);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      if (!(base.shares.a(i, j) > 0.0)) continue;
      const double fd = (std::log(up.shares.a(i, j)) - std::log(dn.shares.a(i, j))) / (2 * h);
      CHECK(rel_err(d.dlog_a(i, j), fd, 1e-3) < 1e-6);
    }
  for (int j = 0; j < 5; ++j) {
    const double fd = (std::log(up.shares.a0[j]) - std::log(dn.shares.a0[j])) / (2 * h);
    CHECK(rel_err(d.dlog_a0[j], fd, 1e-3) < 1e-6);
  }
}

TEST_CASE("first_order_response basics") {
  const auto m = open_fixture5();
  const auto st = base_equilibrium(m);
  const Vector z = Vector::Zero(5);
  SUBCASE("no shock, no response") {
    const auto r = first_order_response(m, st, z, z, 0.0);
    CHECK(max_abs(r.dlogP) == 0.0);
    CHECK(max_abs(r.dlogW) == 0.0);
    CHECK(max_abs(r.dlambda) == 0.0);
  }
  SUBCASE("Hulten leading term") {
    Vector dZ(5);
    dZ << 0.01, -0.02, 0.0, 0.03, 0.01;
    const auto r = first_order_response(m, st, dZ, z, 0.0);
    CHECK(r.hulten_term == doctest::Approx(st.lambda.dot(dZ)).epsilon(1e-15));
    CHECK(r.residual < 1e-10);
  }
  SUBCASE("exchange rate moves all nominal prices one for one") {
    const auto r = first_order_response(m, st, z, z, 0.01);
    CHECK(max_abs(r.dlogP - Vector::Constant(5, 0.01)) < 1e-12);
    CHECK(max_abs(r.dlogW - Vector::Constant(5, 0.01)) < 1e-12);
    CHECK(max_abs(r.dlambda) < 1e-12);
    CHECK(std::abs(r.dlogGDP_first_order) < 1e-12);
  }
}

TEST_CASE("first_order_response matches Richardson-extrapolated solver differences") {
  const auto m = open_fixture5(23);
  const auto base = base_equilibrium(m);
  Vector dZ = Vector::Zero(5);
  dZ[0] = 1.0;
  const Vector z = Vector::Zero(5);
  const auto fo = first_order_response(m, base, dZ, z, 0.0);
  auto diff = [&](double h) {
    const auto s = solve_equilibrium(m, scaled(dZ, z, 0.0, h));
    return std::pair<Vector, Vector>{(s.P.array().log().matrix()) / h, (s.lambda - base.lambda) / h};
  };
  const auto [p1, l1] = diff(1e-3);
  const auto [p2, l2] = diff(5e-4);
  const Vector pR = 2 * p2 - p1;
  const Vector lR = 2 * l2 - l1;
  for (int i = 0; i < 5; ++i) {
    CHECK(rel_err(fo.dlogP[i], pR[i], 1e-3) < 1e-4);
    CHECK(rel_err(fo.dlambda[i], lR[i], 1e-3) < 1e-4);
  }
}

TEST_CASE("gdp_second_order") {
  SUBCASE("zero shock") {
    const auto m = open_fixture5();
    CHECK(gdp_second_order(m, base_equilibrium(m), 2, 0.0) == 0.0);
  }
  SUBCASE("Cobb-Douglas has no second-order term") {
    const auto m = closed_fixture(4, 8, Vector::Ones(4), 1.0, 1.0);
    const auto st = base_equilibrium(m);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(gdp_second_order(m, st, i, 0.1) == doctest::Approx(st.lambda[static_cast<Eigen::Index>(i)] * 0.1).epsilon(1e-12));
  }
  SUBCASE("cubic convergence on a low-theta fixture") {
    const auto m = closed_fixture(4, 4, Vector::Constant(4, 0.1));
    const auto st = base_equilibrium(m);
    for (double sign : {1.0, -1.0}) {
      auto err = [&](double dz) {
        Vector Z = Vector::Ones(4);
        Z[1] = std::exp(dz);
        return std::abs(solve_equilibrium(m, Shock::tfp(Z)).gdp - gdp_second_order(m, st, 1, dz));
      };
      const double e1 = err(sign * 0.05), e2 = err(sign * 0.025);
      CHECK(e1 / e2 >= 7.0);
    }
  }
}

TEST_CASE("reduced_form_check") {
  SUBCASE("theta = 1 leaves only the fixed effect") {
    const auto m = closed_fixture(3, 2, Vector::Ones(3));
    const auto st = base_equilibrium(m);
    Vector dP(3);
    dP << 0.05, -0.02, 0.01;
    const Matrix rf = reduced_form_check(m, st, dP, Matrix::Zero(3, 3));
    CHECK(rf.cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("closed economy agrees with io_matrix_derivative net of the labor-share term") {
    Vector theta(4);
    theta << 0.0, 0.5, 1.3, 2.0;
    const auto m = closed_fixture(4, 12, theta);
    const auto st = base_equilibrium(m);
    Vector dP(4), dZ(4);
    dP << 0.03, -0.01, 0.02, -0.04;
    dZ << 0.01, 0.0, -0.02, 0.005;
    const auto idx = price_index_changes(st, dP, Vector::Zero(4), 0.0);
    const auto d = io_matrix_derivative(m, st, dP, idx.dlogPbar, idx.dlogQ, dZ);
    const Matrix rf = reduced_form_check(m, st, dP, Matrix::Zero(4, 4));
    const double s = m.elasticities.sigma;
    for (int i = 0; i < 4; ++i) {
      const double labor_term = (s - 1.0) * (dP[i] + dZ[i]) + (1.0 - s) * idx.dlogQ[i];
      for (int j = 0; j < 4; ++j)
        if (st.shares.a(i, j) > 0.0) CHECK(rf(i, j) == doctest::Approx(d.dlog_a(i, j) - labor_term).epsilon(1e-12));
    }
  }
  SUBCASE("matches finite differences of equilibrium domestic shares") {
    const auto m = open_fixture5(31);
    const auto base = base_equilibrium(m);
    Vector dZ(5), dPt(5);
    dZ << 0.3, -0.5, 0.2, 0.0, 0.4;
    dPt << 1.0, 0.0, -0.7, 0.0, 0.0;
    const double h = 1e-4;
    const auto up = solve_equilibrium(m, scaled(dZ, dPt, 0.0, h));
    const auto dn = solve_equilibrium(m, scaled(dZ, dPt, 0.0, -h));
    const Vector dlogP = (up.P.array().log() - dn.P.array().log()).matrix() / (2 * h);
    const Matrix dlogPhi = (up.shares.Phi.array().log() - dn.shares.Phi.array().log()).matrix() / (2 * h);
    const Matrix rf = reduced_form_check(m, base, dlogP, dlogPhi);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        if (!(base.shares.a(i, j) > 0.0)) continue;
        auto dom = [&](const EquilibriumState& s) { return std::log(s.shares.Omega(i, j) * s.shares.Phi(i, j)); };
        const double fd = (dom(up) - dom(dn)) / (2 * h);
        CHECK(rel_err(rf(i, j), fd, 1e-3) < 1e-6);
      }
  }
}
