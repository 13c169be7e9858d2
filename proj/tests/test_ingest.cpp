#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "prodnet/csv.hpp"
#include "prodnet/equilibrium.hpp"
#include "prodnet/errors.hpp"
#include "prodnet/ingest.hpp"

using namespace prodnet;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(PRODNET_TEST_DATA) / "fixture3";

// One-year tables with unit prices; supply/use given as (commodity, industry, value).
struct Cell {
  std::string a, b;
  double v;
};
RawTables one_year(const std::vector<Cell>& supply, const std::vector<Cell>& use, const std::vector<Cell>& imports,
                   int year = 2020) {
  RawTables r;
  std::vector<std::string> inds;
  for (const auto& c : supply) {
    r.supply.push_back({year, c.a, c.b, c.v});
    if (std::find(inds.begin(), inds.end(), c.b) == inds.end()) inds.push_back(c.b);
  }
  for (const auto& c : use) r.use.push_back({year, c.a, c.b, c.v});
  r.use.push_back({year, "F010", supply.front().a, 0.0});
  for (const auto& c : imports) r.imports.push_back({year, c.a, c.v});
  if (imports.empty()) r.imports.push_back({year, supply.front().a, 0.0});
  for (const auto& i : inds) r.prices.push_back({year, i, 1.0});
  return r;
}

fs::path temp_copy(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("prodnet_ingest_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const auto& e : fs::directory_iterator(kFixture)) fs::copy_file(e.path(), dir / e.path().filename());
  return dir;
}

SupplyUseTables random_tables(std::uint64_t seed, int C, int N, int years) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  RawTables r;
  for (int y = 2000; y < 2000 + years; ++y) {
    for (int c = 0; c < C; ++c) {
      for (int j = 0; j < N; ++j) r.supply.push_back({y, "c" + std::to_string(c), "s" + std::to_string(j), U(rng)});
      r.imports.push_back({y, "c" + std::to_string(c), 0.5 * U(rng)});
      r.use.push_back({y, "F010", "c" + std::to_string(c), U(rng)});
    }
    for (int i = 0; i < N; ++i) {
      for (int c = 0; c < C; ++c) r.use.push_back({y, "s" + std::to_string(i), "c" + std::to_string(c), U(rng)});
      r.use.push_back({y, "s" + std::to_string(i), "V001", U(rng)});
      r.prices.push_back({y, "s" + std::to_string(i), U(rng)});
    }
  }
  return assemble_tables(r);
}

}  // namespace

TEST_CASE("expenditure shares") {
  SUBCASE("single supplier") {
    const auto t = assemble_tables(one_year({{"x", "A", 10}, {"y", "B", 10}}, {{"B", "x", 100}}, {}));
    const Matrix om = compute_expenditure_shares(t, 2020);
    CHECK(om(1, 0) == 1.0);
    CHECK(om.row(0).sum() == 0.0);
  }
  SUBCASE("commodity split 60/40") {
    const auto t = assemble_tables(one_year({{"x", "A", 60}, {"x", "B", 40}}, {{"B", "x", 50}}, {}));
    const Matrix raw = t.U.at(2020) * Matrix::Identity(1, 1) * (t.S.at(2020) / 100.0);
    CHECK(raw(1, 0) == doctest::Approx(30.0));
    CHECK(raw(1, 1) == doctest::Approx(20.0));
    const Matrix om = compute_expenditure_shares(t, 2020);
    CHECK(om(1, 0) == doctest::Approx(0.6));
    CHECK(om(1, 1) == doctest::Approx(0.4));
  }
  SUBCASE("brute-force triple loop") {
    const auto t = random_tables(3, 4, 3, 1);
    const Matrix om = compute_expenditure_shares(t, 2000);
    const Matrix& S = t.S.at(2000);
    const Matrix& U = t.U.at(2000);
    for (int i = 0; i < 3; ++i) {
      double row = 0.0;
      std::vector<double> cell(3, 0.0);
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 4; ++c) {
          double tot = 0.0;
          for (int k = 0; k < 3; ++k) tot += S(c, k);
          cell[j] += U(i, c) * S(c, j) / tot;
        }
      for (double x : cell) row += x;
      for (int j = 0; j < 3; ++j) CHECK(om(i, j) == doctest::Approx(cell[j] / row).epsilon(1e-13));
      CHECK(om.row(i).sum() == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("zero supply with positive use names the commodity") {
    const auto t = assemble_tables(one_year({{"x", "A", 10}, {"ghost", "A", 0}}, {{"A", "ghost", 5}}, {}));
    try {
      compute_expenditure_shares(t, 2020);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }
}

TEST_CASE("import ratios") {
  SUBCASE("no imports") {
    const auto t0 = assemble_tables(one_year({{"x", "A", 10}, {"y", "B", 5}}, {}, {{"x", "", 0}, {"y", "", 0}}));
    CHECK(compute_import_ratios(t0, 2020) == Vector::Ones(2));
  }
  SUBCASE("single commodity 30% imported") {
    const auto t = assemble_tables(one_year({{"x", "A", 100}}, {}, {{"x", "", 30}}));
    CHECK(compute_import_ratios(t, 2020)[0] == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("brute-force oracle") {
    const auto t = random_tables(7, 4, 3, 1);
    const Vector phi = compute_import_ratios(t, 2000);
    const Matrix& S = t.S.at(2000);
    for (int j = 0; j < 3; ++j) {
      double m = 0.0;
      for (int c = 0; c < 4; ++c) {
        double tot = 0.0;
        for (int k = 0; k < 3; ++k) tot += S(c, k);
        m += t.imports.at(2000)[c] / tot * S(c, j) / tot;
      }
      CHECK(std::abs(phi[j] - std::clamp(1.0 - m, 0.0, 1.0)) < 1e-12);
    }
    CHECK(((phi.array() >= 0.0) && (phi.array() <= 1.0)).all());
  }
}

TEST_CASE("classify_tradeable") {
  CHECK(classify_tradeable({Vector::Ones(3), Vector::Ones(3)}) == std::vector<bool>{false, false, false});
  Vector p(2);
  p << 0.7, 0.9;
  CHECK(classify_tradeable({p, p, p}) == std::vector<bool>{true, false});
  CHECK_THROWS_AS(classify_tradeable({}), DataError);
}

TEST_CASE("fixture loading") {
  const auto a = load_fixture_tables(kFixture);
  const auto b = load_fixture_tables(kFixture);
  CHECK(a == b);
  CHECK(a.industries == std::vector<std::string>{"AGR", "OIL", "SRV"});
  CHECK(a.years.front() == 2012);
  CHECK(a.years.back() == 2024);
  CHECK(load_sector_labels(kFixture).at("OIL") == "Oil and gas extraction");

  SUBCASE("missing prices.csv names the file") {
    const auto dir = temp_copy("noprices");
    fs::remove(dir / "prices.csv");
    try {
      load_fixture_tables(dir);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("prices.csv") != std::string::npos);
    }
  }
  SUBCASE("missing year names the year") {
    const auto dir = temp_copy("noyear");
    auto t = read_csv(dir / "imports.csv");
    std::ofstream out(dir / "imports.csv");
    out << "year,commodity,value\n";
    for (const auto& r : t.rows)
      if (r[0] != "2017") out << r[0] << ',' << r[1] << ',' << r[2] << '\n';
    out.close();
    try {
      load_fixture_tables(dir);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("2017") != std::string::npos);
    }
    CHECK_THROWS_WITH_AS(load_fixture_tables(kFixture, {}, {2011}), doctest::Contains("2011"), ParseError);
  }
  SUBCASE("renamed column names the field") {
    const auto dir = temp_copy("badheader");
    std::ofstream(dir / "prices.csv") << "year,industry,price\n2012,AGR,1\n";
    CHECK_THROWS_WITH_AS(load_fixture_tables(dir), doctest::Contains("index"), ParseError);
  }
  SUBCASE("negative cells are clamped with a warning") {
    auto raw = one_year({{"x", "A", 10}, {"x", "B", -0.5}}, {{"A", "x", 3}}, {});
    const auto t = assemble_tables(raw);
    CHECK(t.S.at(2020)(0, 1) == 0.0);
    REQUIRE(t.warnings.size() == 1);
    CHECK(t.warnings[0].find("clamped") != std::string::npos);
  }
}

TEST_CASE("build_panel") {
  const auto tables = load_fixture_tables(kFixture);
  SUBCASE("constant tables give zero changes") {
    auto t = tables;
    for (int y : t.years) {
      t.S[y] = t.S[t.years[0]];
      t.U[y] = t.U[t.years[0]];
      t.imports[y] = t.imports[t.years[0]];
      t.price_index[y] = t.price_index[t.years[0]];
    }
    const auto p = build_panel(t);
    REQUIRE(!p.panel.empty());
    for (const auto& o : p.panel) {
      CHECK(o.dlog_omega == 0.0);
      CHECK(o.dlog_p == 0.0);
      CHECK(o.dlog_phi == 0.0);
    }
  }
  SUBCASE("counts, tradeability and zero import changes for non-tradeables") {
    const auto p = build_panel(tables);
    CHECK(p.report.candidates == 9 * 12);
    CHECK(p.report.kept + p.report.dropped_share + p.report.dropped_nonfinite == p.report.candidates);
    CHECK(p.report.tradeable == std::vector<bool>{false, true, false});
    for (const auto& o : p.panel)
      if (o.j != 1) CHECK(o.dlog_phi == 0.0);
  }
  SUBCASE("currency rescaling leaves the panel unchanged") {
    auto t = tables;
    for (int y : t.years) {
      t.S[y] *= 1000.0;
      t.U[y] *= 1000.0;
      t.imports[y] *= 1000.0;
    }
    const auto a = build_panel(tables).panel, b = build_panel(t).panel;
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(b[k].dlog_omega == doctest::Approx(a[k].dlog_omega).epsilon(1e-10));
      CHECK(std::abs(b[k].dlog_phi - a[k].dlog_phi) < 1e-12);
    }
  }
  SUBCASE("raising the share threshold never adds observations") {
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double th : {0.0, 0.01, 0.05, 0.1, 0.3, 0.6}) {
      PanelOptions o;
      o.min_avg_share = th;
      const auto n = build_panel(tables, o).panel.size();
      CHECK(n <= prev);
      prev = n;
    }
  }
  SUBCASE("zero share drops the observation") {
    auto t = tables;
    t.S[2015].col(1).setZero();  // OIL produces nothing in one year
    PanelOptions o;
    o.min_avg_share = 0.0;
    const auto p = build_panel(t, o);
    CHECK(p.report.dropped_nonfinite == 6);
  }
  SUBCASE("panel CSV round trip") {
    const auto p = build_panel(tables).panel;
    const auto path = fs::temp_directory_path() / "prodnet_panel_roundtrip.csv";
    write_panel_csv(p, tables.industries, path);
    const auto q = read_panel_csv(path, tables.industries);
    REQUIRE(p.size() == q.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(p[k].dlog_omega == q[k].dlog_omega);
      CHECK(p[k].dlog_p == q[k].dlog_p);
      CHECK(p[k].t == q[k].t);
    }
  }
  SUBCASE("household panel") {
    const auto h = build_household_panel(tables);
    CHECK(h.panel.size() == 3 * 12);
    for (const auto& o : h.panel) CHECK(o.i == 0);
  }
}

TEST_CASE("snapshot assembly calibrates cleanly") {
  const auto tables = load_fixture_tables(kFixture);
  const auto tr = build_panel(tables).report.tradeable;
  const auto s = assemble_snapshot(tables, 2024, tr);
  CHECK(validate_snapshot(s).empty());
  CHECK(s.phi(0, 1) < 1.0);
  CHECK(s.phi(0, 0) == 1.0);
  const auto m = calibrate(s, Elasticities::uniform(3, 0.3, 0.6, 1.5, 0.6), true);
  CHECK(m.exchange_rate_numeraire());
  const auto st = base_equilibrium(m);
  CHECK((st.P.array() - 1.0).abs().maxCoeff() < 1e-10);
  CHECK(check_equilibrium(m, st).max() < 1e-8);
}

TEST_CASE("tfp_covariance") {
  SUBCASE("constant TFP") {
    TfpPanel p{{2000, 2001, 2002, 2003, 2004, 2005}, {"a", "b"}, Matrix::Constant(6, 2, 0.3)};
    CHECK(tfp_covariance(p).cov.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("random walks: four-year variance is four times the yearly variance") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> N01;
    const int T = 40000;
    TfpPanel p;
    p.industries = {"a", "b"};
    p.log_tfp = Matrix::Zero(T, 2);
    for (int t = 0; t < T; ++t) {
      p.years.push_back(1000 + t);
      if (t > 0) {
        p.log_tfp(t, 0) = p.log_tfp(t - 1, 0) + 0.02 * N01(rng);
        p.log_tfp(t, 1) = p.log_tfp(t - 1, 1) + 0.05 * N01(rng);
      }
    }
    const auto c = tfp_covariance(p);
    CHECK(std::abs(c.cov(0, 0) / (4 * 0.02 * 0.02) - 1.0) < 0.05);
    CHECK(std::abs(c.cov(1, 1) / (4 * 0.05 * 0.05) - 1.0) < 0.05);
    CHECK(std::abs(c.cov(0, 1)) < 0.05 * std::sqrt(c.cov(0, 0) * c.cov(1, 1)));
    const auto d = tfp_covariance(p, 4, false);
    CHECK(d.n_differences == (T - 1) / 4);
    CHECK(c.n_differences == static_cast<std::size_t>(T - 4));
  }
  SUBCASE("perfectly correlated sectors give rank one") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> N01;
    TfpPanel p;
    p.industries = {"a", "b", "c"};
    p.log_tfp = Matrix::Zero(30, 3);
    for (int t = 0; t < 30; ++t) {
      p.years.push_back(1990 + t);
      const double x = N01(rng);
      p.log_tfp.row(t) << x, 2 * x, -x;
    }
    const auto c = tfp_covariance(p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.cov);
    CHECK(es.eigenvalues()[0] > -1e-12);
    CHECK(std::abs(es.eigenvalues()[1]) < 1e-12 * es.eigenvalues()[2]);
    CHECK((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("too few years") {
    TfpPanel p{{2000, 2001, 2002, 2003, 2004}, {"a"}, Matrix::Zero(5, 1)};
    CHECK_THROWS_AS(tfp_covariance(p), DataError);
  }
  SUBCASE("bundled fixture") {
    const auto p = load_tfp_panel(kFixture / "tfp.csv");
    CHECK(p.industries.size() == 3);
    const auto c = tfp_covariance(p);
    CHECK(c.cov.rows() == 3);
    CHECK(c.n_differences == p.years.size() - 4);
  }
}
