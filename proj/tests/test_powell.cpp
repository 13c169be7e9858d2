#include <doctest.h>

#include <cmath>
#include <limits>

#include "prodnet/errors.hpp"
#include "prodnet/powell.hpp"

using namespace prodnet;

namespace {
const double inf = std::numeric_limits<double>::infinity();
}

TEST_CASE("powell on a separable quadratic") {
  auto f = [](const Vector& x) { return (x.array() - 3.0).square().sum(); };
  const auto r = powell_minimize(f, Vector::Zero(4), Vector::Constant(4, -inf), Vector::Constant(4, inf));
  CHECK(r.converged);
  CHECK((r.x.array() - 3.0).abs().maxCoeff() < 1e-6);
}

TEST_CASE("powell on the Rosenbrock function") {
  auto f = [](const Vector& x) { return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2); };
  Vector x0(2);
  x0 << -1.2, 1.0;
  const auto r = powell_minimize(f, x0, Vector::Constant(2, -inf), Vector::Constant(2, inf));
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-4);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-4);
}

TEST_CASE("powell respects an active lower bound") {
  auto f = [](const Vector& x) { return std::pow(x[0] + 2.0, 2) + std::pow(x[1] - 1.0, 2); };
  const auto r = powell_minimize(f, Vector::Constant(2, 0.5), Vector::Zero(2), Vector::Constant(2, inf));
  CHECK(r.x[0] == 0.0);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-6);
}

TEST_CASE("powell on a correlated quadratic needs conjugate directions") {
  Matrix A(3, 3);
  A << 4, 1.9, 0.5, 1.9, 1, 0.2, 0.5, 0.2, 2;
  Vector b(3);
  b << 1, -2, 0.5;
  const Vector xs = A.ldlt().solve(b);
  auto f = [&](const Vector& x) { return 0.5 * x.dot(A * x) - b.dot(x); };
  const auto r = powell_minimize(f, Vector::Zero(3), Vector::Constant(3, -inf), Vector::Constant(3, inf));
  CHECK((r.x - xs).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("powell budget exhaustion returns the best point, flagged") {
  auto f = [](const Vector& x) { return (x.array() - 3.0).square().sum(); };
  PowellOptions o;
  o.max_evaluations = 10;
  const auto r = powell_minimize(f, Vector::Zero(3), Vector::Constant(3, -inf), Vector::Constant(3, inf), o);
  CHECK_FALSE(r.converged);
  CHECK(r.evaluations == 10);
  CHECK(r.f <= 27.0);
}

TEST_CASE("powell rejects a non-finite start") {
  auto f = [](const Vector&) { return std::nan(""); };
  CHECK_THROWS_AS(powell_minimize(f, Vector::Zero(1), Vector::Constant(1, -inf), Vector::Constant(1, inf)),
                  DomainError);
}
