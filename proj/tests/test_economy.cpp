#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "prodnet/economy.hpp"
#include "prodnet/errors.hpp"

using namespace prodnet;

namespace {

Matrix neumann(const Matrix& a, int terms) {
  Matrix sum = Matrix::Identity(a.rows(), a.cols());
  Matrix power = Matrix::Identity(a.rows(), a.cols());
  for (int k = 1; k <= terms; ++k) {
    power = power * a;
    sum += power;
  }
  return sum;
}

Matrix random_substochastic(std::mt19937_64& rng, int n, double radius_cap) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = U(rng);
  // Row sums bound the spectral radius of a nonnegative matrix.
  const double scale = radius_cap * U(rng) / a.rowwise().sum().maxCoeff();
  return a * scale;
}

}  // namespace

TEST_CASE("economy registry validates codes") {
  Economy e({"211", "324"}, {"Oil", "Petroleum"}, {true, false});
  CHECK(e.n_sectors() == 2);
  CHECK(e.index_of("324") == 1u);
  CHECK_FALSE(e.index_of("999").has_value());
  CHECK_THROWS_AS(Economy({"1", "1"}), DataError);
  CHECK_THROWS_AS(Economy(std::vector<std::string>{}), DataError);
  CHECK_THROWS_AS(Economy({"1", "2"}, {"x"}), DimensionError);
}

TEST_CASE("leontief_inverse of zero matrix is identity") {
  const Matrix psi = leontief_inverse(Matrix::Zero(3, 3));
  CHECK((psi - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("leontief_inverse scalar geometric series") {
  Matrix a(1, 1);
  a << 0.5;
  CHECK(leontief_inverse(a)(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("leontief_inverse matches truncated Neumann series") {
  Matrix a(2, 2);
  a << 0.1, 0.2, 0.3, 0.1;
  const Matrix oracle = neumann(a, 60);
  CHECK((leontief_inverse(a) - oracle).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("leontief_inverse rejects spectral radius >= 1") {
  // Doubly stochastic matrix has spectral radius exactly 1.
  Matrix ds(3, 3);
  ds << 0.2, 0.3, 0.5, 0.5, 0.2, 0.3, 0.3, 0.5, 0.2;
  CHECK_THROWS_AS(leontief_inverse(ds * 1.05), InvertibilityError);
  CHECK_THROWS_AS(leontief_inverse(ds), InvertibilityError);
  Matrix one(1, 1);
  one << 1.0;
  CHECK_THROWS_AS(leontief_inverse(one), InvertibilityError);
}

TEST_CASE("spectral radius bound brackets the Perron root") {
  Matrix ds(3, 3);
  ds << 0.2, 0.3, 0.5, 0.5, 0.2, 0.3, 0.3, 0.5, 0.2;
  const auto b = spectral_radius_bound(ds * 0.7);
  CHECK(b.converged);
  CHECK(b.lower == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(b.upper == doctest::Approx(0.7).epsilon(1e-10));
  // Periodic permutation matrix; the (I + a) shift keeps iteration stable.
  Matrix perm(2, 2);
  perm << 0.0, 0.9, 0.9, 0.0;
  const auto p = spectral_radius_bound(perm);
  CHECK(p.converged);
  CHECK(p.upper == doctest::Approx(0.9).epsilon(1e-10));
}

TEST_CASE("leontief inverse properties on random nonnegative matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 6;
    const Matrix a = random_substochastic(rng, n, 0.95);
    const Matrix psi = leontief_inverse(a);
    const Matrix I = Matrix::Identity(n, n);
    CHECK((psi * (I - a) - I).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(((psi - I - a).array() >= -1e-14).all());
  }
}

TEST_CASE("build_io_matrix identities") {
  SUBCASE("pure labor economy") {
    const Matrix omega = Matrix::Constant(2, 2, 0.5);
    const Matrix a = build_io_matrix(omega, Matrix::Ones(2, 2), Vector::Ones(2));
    CHECK(a.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("arithmetic row") {
    Matrix omega(2, 2);
    omega << 0.6, 0.4, 0.5, 0.5;
    const Matrix a = build_io_matrix(omega, Matrix::Ones(2, 2), Vector::Constant(2, 0.5));
    CHECK(a(0, 0) == doctest::Approx(0.3));
    CHECK(a(0, 1) == doctest::Approx(0.2));
  }
  SUBCASE("row sums and homogeneity in 1 - gamma") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 4;
      Matrix omega(n, n), phi(n, n);
      Vector gamma(n);
      for (int i = 0; i < n; ++i) {
        gamma[i] = U(rng);
        for (int j = 0; j < n; ++j) {
          omega(i, j) = U(rng);
          phi(i, j) = U(rng);
        }
        omega.row(i) /= omega.row(i).sum();
      }
      const Matrix a = build_io_matrix(omega, phi, gamma);
      for (int i = 0; i < n; ++i) {
        double direct = 0.0;
        for (int j = 0; j < n; ++j) direct += omega(i, j) * phi(i, j);
        CHECK(a.row(i).sum() == doctest::Approx((1.0 - gamma[i]) * direct).epsilon(1e-13));
      }
      // Halving (1 - gamma) halves a.
      const Vector gamma2 = (Vector::Ones(n) + gamma) / 2.0;
      CHECK((build_io_matrix(omega, phi, gamma2) - 0.5 * a).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
  CHECK_THROWS_AS(build_io_matrix(Matrix::Zero(2, 2), Matrix::Zero(3, 3), Vector::Zero(2)),
                  DimensionError);
}

TEST_CASE("validate_snapshot") {
  testing::SnapshotSpec spec;
  spec.tradeable = {true, false, false};
  IOSnapshot s = testing::make_snapshot(spec);
  CHECK(validate_snapshot(s).empty());

  SUBCASE("omega row off by 10%") {
    s.omega.row(1) *= 0.9;
    s.a = build_io_matrix(s.omega, s.phi, s.gamma);
    const auto v = validate_snapshot(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].invariant == "omega_row_sum");
    CHECK(v[0].indices == std::vector<std::size_t>{1});
  }
  SUBCASE("non-invertible io matrix") {
    Matrix ds(3, 3);
    ds << 0.2, 0.3, 0.5, 0.5, 0.2, 0.3, 0.3, 0.5, 0.2;
    s.a = ds * 1.05;
    const auto v = validate_snapshot(s);
    bool found = false;
    for (const auto& x : v) found |= x.invariant == "leontief_invertibility";
    CHECK(found);
  }
  SUBCASE("household shares") {
    s.a0[0] += 0.1;
    const auto v = validate_snapshot(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].invariant == "a0_sum");
  }
}

TEST_CASE("elasticities validation") {
  auto e = Elasticities::uniform(3, 0.5, 0.6, 1.5, 0.6);
  CHECK_NOTHROW(e.validate());
  e.xi = 1.0;
  CHECK_THROWS_AS(e.validate(), DomainError);
  e.xi = 1.5;
  e.theta[1] = -0.1;
  CHECK_THROWS_AS(e.validate(), DomainError);
}
