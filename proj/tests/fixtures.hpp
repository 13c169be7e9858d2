#pragma once

// Synthetic, internally consistent economies shared by the test suites.

#include <random>
#include <vector>

#include "prodnet/economy.hpp"
#include "prodnet/equilibrium.hpp"

namespace prodnet::testing {

struct SnapshotSpec {
  int n = 3;
  unsigned seed = 1;
  std::vector<bool> tradeable;  ///< empty: none
  double gamma_lo = 0.3, gamma_hi = 0.7;
  double phi_lo = 0.55, phi_hi = 0.9;
  double density = 1.0;  ///< probability an off-diagonal omega entry is nonzero
};

inline IOSnapshot make_snapshot(const SnapshotSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = spec.n;
  IOSnapshot s;
  s.year = 2024;
  s.gamma.resize(n);
  s.omega = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    s.gamma[i] = spec.gamma_lo + (spec.gamma_hi - spec.gamma_lo) * U(rng);
    for (int j = 0; j < n; ++j)
      if (i == j || U(rng) < spec.density) s.omega(i, j) = 0.2 + U(rng);
    s.omega.row(i) /= s.omega.row(i).sum();
  }
  Vector phi_by_input = Vector::Ones(n);
  for (int j = 0; j < n; ++j)
    if (!spec.tradeable.empty() && spec.tradeable[j])
      phi_by_input[j] = spec.phi_lo + (spec.phi_hi - spec.phi_lo) * U(rng);
  s.phi = broadcast_import_ratios(phi_by_input);
  s.a0.resize(n);
  for (int j = 0; j < n; ++j) s.a0[j] = 0.2 + U(rng);
  s.a0 /= s.a0.sum();
  s.a = build_io_matrix(s.omega, s.phi, s.gamma);
  s.lambda = closed_economy_output(s.gamma, s.omega, s.a0);
  s.nx = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      s.nx[j] += (1.0 - s.gamma[i]) * s.omega(i, j) * (1.0 - s.phi(i, j)) * s.lambda[i];
  return s;
}

inline Elasticities elasticities(int n, double theta, double sigma = 0.6, double xi = 1.5,
                                 double nu = 0.6) {
  return Elasticities::uniform(static_cast<std::size_t>(n), theta, sigma, xi, nu);
}

inline Elasticities elasticities(const Vector& theta, double sigma = 0.6, double xi = 1.5,
                                 double nu = 0.6) {
  Elasticities e = Elasticities::uniform(static_cast<std::size_t>(theta.size()), 0.0, sigma, xi, nu);
  e.theta = theta;
  return e;
}

/// 5-sector open economy with two tradeable inputs and heterogeneous theta.
inline CalibratedModel open_fixture5(unsigned seed = 7) {
  SnapshotSpec spec;
  spec.n = 5;
  spec.seed = seed;
  spec.tradeable = {true, false, true, false, false};
  spec.density = 0.7;
  Vector theta(5);
  theta << 0.2, 0.0, 0.8, 1.4, 0.5;
  return calibrate(make_snapshot(spec), elasticities(theta, 0.6, 1.5, 0.6), true);
}

/// 3-sector open economy, sector 0 tradeable.
inline CalibratedModel open_fixture3(unsigned seed = 3) {
  SnapshotSpec spec;
  spec.n = 3;
  spec.seed = seed;
  spec.tradeable = {true, false, false};
  Vector theta(3);
  theta << 0.3, 0.0, 1.2;
  return calibrate(make_snapshot(spec), elasticities(theta, 0.6, 1.5, 0.6), true);
}

inline CalibratedModel closed_fixture(int n, unsigned seed, const Vector& theta, double sigma = 0.6,
                                      double nu = 0.6) {
  SnapshotSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.density = 0.8;
  return calibrate(make_snapshot(spec), elasticities(theta, sigma, 1.5, nu), false);
}

}  // namespace prodnet::testing
