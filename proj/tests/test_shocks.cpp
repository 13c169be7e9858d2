#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "prodnet/errors.hpp"
#include "prodnet/shocks.hpp"

using namespace prodnet;
using namespace prodnet::testing;

namespace {

void check_residuals(const ComparisonReport& rep) {
  for (const auto& s : rep.scenarios)
    for (std::size_t c = 0; c < s.ok.size(); ++c)
      if (s.ok[c]) CHECK(s.residual[c] < 1e-8);
}

std::vector<NamedModel> open_pair(unsigned seed = 7) {
  CalibratedModel main = open_fixture5(seed);
  CalibratedModel uni = main;
  uni.elasticities.theta = Vector::Constant(5, 0.3);
  return {{"main", main}, {"uniform", uni}};
}

Matrix random_cov(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = N(rng);
  return 0.002 * A * A.transpose() / n;
}

}  // namespace

TEST_CASE("mvn_sample") {
  SUBCASE("zero covariance gives zero draws") {
    const Matrix s = mvn_sample(Matrix::Zero(3, 3), 50, 4);
    CHECK(s.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("1-D variance converges") {
    Matrix cov(1, 1);
    cov << 4.0;
    const Matrix s = mvn_sample(cov, 100000, 11);
    const double mean = s.mean();
    const double var = (s.array() - mean).square().sum() / (s.rows() - 1);
    CHECK(std::abs(var - 4.0) < 0.03 * 4.0);
  }
  SUBCASE("rank-1 draws lie on a line") {
    Vector v(3);
    v << 1.0, -2.0, 0.5;
    const Matrix s = mvn_sample(v * v.transpose(), 200, 5);
    for (Eigen::Index k = 0; k < s.rows(); ++k) {
      const Vector x = s.row(k).transpose();
      const double t = x.dot(v) / v.squaredNorm();
      CHECK((x - t * v).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("sample covariance approaches cov") {
    const Matrix cov = random_cov(4, 3);
    const Matrix s = mvn_sample(cov, 200000, 9);
    const Matrix c = s.transpose() * s / static_cast<double>(s.rows());
    CHECK((c - cov).cwiseAbs().maxCoeff() < 0.03 * cov.cwiseAbs().maxCoeff());
  }
  SUBCASE("factor reproduces cov") {
    const Matrix cov = random_cov(5, 8);
    const Matrix F = psd_factor(cov);
    CHECK((F * F.transpose() - cov).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("deterministic per (seed, index)") {
    const Matrix cov = random_cov(3, 2);
    CHECK(mvn_sample(cov, 20, 42) == mvn_sample(cov, 20, 42));
    CHECK(mvn_sample(cov, 20, 42).row(7) == mvn_sample(cov, 10, 42).row(7));
    CHECK(mvn_sample(cov, 20, 42) != mvn_sample(cov, 20, 43));
  }
  SUBCASE("tiny negative eigenvalues are clipped, real indefiniteness is an error") {
    Matrix c(2, 2);
    c << 1.0, 1.0 + 1e-12, 1.0 + 1e-12, 1.0;
    CHECK_NOTHROW(psd_factor(c));
    c << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(psd_factor(c), DomainError);
  }
}

TEST_CASE("distribution stats") {
  const auto s = distribution_stats({1.0, 2.0, 6.0});
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.sd == doctest::Approx(std::sqrt(7.0)));
  // central moments: m2 = 14/3, m3 = (-8 - 1 + 27)/3 = 6
  CHECK(s.skewness == doctest::Approx(6.0 / std::pow(14.0 / 3.0, 1.5)));
  const auto z = distribution_stats({0.5, 0.5});
  CHECK(z.sd == 0.0);
  CHECK(z.skewness == 0.0);
}

TEST_CASE("foreign price experiment") {
  const auto models = open_pair();
  const auto rep = foreign_price_experiment(models, 0.25);
  REQUIRE(rep.scenarios.size() == 2);
  CHECK(rep.scenarios[0].shocked == 0);
  CHECK(rep.scenarios[1].shocked == 2);
  CHECK(rep.failures() == 0);
  check_residuals(rep);
  for (const auto& s : rep.scenarios)
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(s.dlogP[c].minCoeff() > -1e-12);
      CHECK(s.dlogGDP[c] < 0.0);
    }
  const auto top = top_responders(rep, 0, 0, 3);
  REQUIRE(top.size() == 3);
  const Vector& d = rep.scenarios[0].dlogP[0];
  CHECK(d[static_cast<Eigen::Index>(top[0])] == d.maxCoeff());
  CHECK(d[static_cast<Eigen::Index>(top[1])] >= d[static_cast<Eigen::Index>(top[2])]);

  SUBCASE("no import exposure gives no response") {
    CalibratedModel m = open_fixture3();
    m.economy.set_tradeable({false, true, false});
    REQUIRE(m.phi.col(1).minCoeff() == 1.0);
    const auto r = foreign_price_experiment({{"main", m}}, 0.25);
    REQUIRE(r.scenarios.size() == 1);
    CHECK(r.scenarios[0].dlogP[0].cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(r.scenarios[0].dlogGDP[0]) < 1e-12);
  }
  SUBCASE("closed calibration rejected") {
    auto closed = models;
    closed[1].model.open_economy = false;
    CHECK_THROWS_AS(foreign_price_experiment(closed, 0.25), DomainError);
  }
}

TEST_CASE("severe TFP experiment") {
  const auto models = open_pair();
  SUBCASE("zero magnitude is all zero") {
    const auto rep = severe_tfp_experiment(models, 0.0);
    for (const auto& s : rep.scenarios)
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(std::abs(s.dlogGDP[c]) < 1e-13);
        CHECK(s.dlogP[c].cwiseAbs().maxCoeff() < 1e-13);
      }
  }
  SUBCASE("negative shocks lower GDP") {
    const auto rep = severe_tfp_experiment(models, -0.25);
    REQUIRE(rep.scenarios.size() == 5);
    check_residuals(rep);
    for (const auto& s : rep.scenarios) CHECK(s.dlogGDP[0] < 0.0);
    const auto rank = rank_by_difference(rep, 0, 1);
    for (std::size_t k = 1; k < rank.size(); ++k) {
      const auto& a = rep.scenarios[rank[k - 1]];
      const auto& b = rep.scenarios[rank[k]];
      CHECK(std::abs(a.dlogGDP[0] - a.dlogGDP[1]) >= std::abs(b.dlogGDP[0] - b.dlogGDP[1]));
    }
    const auto prank = rank_by_price_difference(rep, 0, 1);
    CHECK(prank.size() == 5);
  }
  SUBCASE("Cobb-Douglas GDP response is the Hulten term exactly") {
    const auto m = closed_fixture(4, 5, Vector::Ones(4), 1.0, 1.0);
    const auto base = base_equilibrium(m);
    const auto rep = severe_tfp_experiment({{"cobb_douglas", m}}, -0.25);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(rep.scenarios[i].dlogGDP[0] ==
            doctest::Approx(base.lambda[static_cast<Eigen::Index>(i)] * std::log(0.75)).epsilon(1e-10));
  }
  SUBCASE("closed-economy reruns use the same machinery") {
    auto closed = models;
    for (auto& nm : closed) nm.model = calibrate(make_snapshot({5, 7, {true, false, true, false, false}, 0.3, 0.7, 0.55, 0.9, 0.7}), nm.model.elasticities, false);
    const auto rep = severe_tfp_experiment(closed, -0.25);
    CHECK(rep.failures() == 0);
    check_residuals(rep);
  }
}

TEST_CASE("business cycle experiment") {
  const auto models = open_pair();
  const Matrix cov = random_cov(5, 21);

  SUBCASE("zero covariance gives base outcomes") {
    const auto rep = business_cycle_experiment(models, Matrix::Zero(5, 5), 30, 1);
    for (const auto& st : rep.gdp_stats) {
      CHECK(st.n == 30);
      CHECK(std::abs(st.mean) < 1e-14);
      CHECK(st.sd < 1e-14);
      CHECK(st.skewness == 0.0);
    }
  }
  SUBCASE("identical inputs across calibrations and worker counts") {
    ExperimentOptions o1, o4, o8;
    o4.workers = 4;
    o8.workers = 8;
    const auto r1 = business_cycle_experiment(models, cov, 60, 77, o1);
    const auto r4 = business_cycle_experiment(models, cov, 60, 77, o4);
    const auto r8 = business_cycle_experiment(models, cov, 60, 77, o8);
    check_residuals(r1);
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(r1.gdp_stats[c].mean == r4.gdp_stats[c].mean);
      CHECK(r1.gdp_stats[c].sd == r8.gdp_stats[c].sd);
      CHECK(r1.gdp_stats[c].skewness == r8.gdp_stats[c].skewness);
      CHECK(r1.mean_dlogP[c] == r4.mean_dlogP[c]);
    }
    // Same model under two names sees the same draws.
    const auto twin = business_cycle_experiment({models[0], {"copy", models[0].model}}, cov, 20, 77);
    for (const auto& s : twin.scenarios) CHECK(s.dlogGDP[0] == s.dlogGDP[1]);
    const auto set = business_cycle_scenarios(models[0].model.economy, cov, 20, 77);
    const Matrix draws = mvn_sample(cov, 20, 77);
    for (Eigen::Index k = 0; k < 20; ++k)
      CHECK((set.shocks[static_cast<std::size_t>(k)].Z.array().log().matrix() - draws.row(k).transpose())
                .cwiseAbs()
                .maxCoeff() < 1e-14);
  }
  SUBCASE("failed draws are dropped from every calibration") {
    ExperimentOptions o;
    o.solver.max_iterations = 4;
    const auto rep = business_cycle_experiment(models, cov * 25.0, 40, 3, o);
    std::size_t failing = 0;
    for (std::size_t k = 0; k < rep.scenarios.size(); ++k) {
      const auto& ok = rep.scenarios[k].ok;
      const bool any_failed = !(ok[0] && ok[1]);
      failing += any_failed;
      CHECK(any_failed == (std::find(rep.dropped_draws.begin(), rep.dropped_draws.end(), k) != rep.dropped_draws.end()));
    }
    CHECK(failing > 0);
    CHECK(rep.gdp_stats[0].n == 40 - failing);
    CHECK(rep.gdp_stats[1].n == 40 - failing);
    const auto h = gdp_histogram(rep, 10);
    CHECK(h.edges.size() == 11);
    std::size_t total = 0;
    for (auto c : h.counts[1]) total += c;
    CHECK(total == 40 - failing);
  }
  SUBCASE("Cobb-Douglas closed economy matches the Hulten mean") {
    const auto m = closed_fixture(4, 9, Vector::Ones(4), 1.0, 1.0);
    const auto base = base_equilibrium(m);
    Vector var(4);
    var << 0.01, 0.004, 0.02, 0.008;
    const Matrix diag = var.asDiagonal();
    const std::size_t n = 400;
    const auto rep = business_cycle_experiment({{"cobb_douglas", m}}, diag, n, 5);
    const Matrix draws = mvn_sample(diag, n, 5);
    std::vector<double> hulten;
    for (std::size_t k = 0; k < n; ++k) {
      const double h = base.lambda.dot(draws.row(static_cast<Eigen::Index>(k)).transpose());
      CHECK(rep.scenarios[k].dlogGDP[0] == doctest::Approx(h).epsilon(1e-9));
      hulten.push_back(h);
    }
    const auto hs = distribution_stats(hulten);
    CHECK(rep.gdp_stats[0].mean == doctest::Approx(hs.mean).epsilon(1e-9));
    CHECK(std::abs(rep.gdp_stats[0].mean) < 3.0 * hs.sd / std::sqrt(static_cast<double>(n)));
  }
}
