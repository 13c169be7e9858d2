#include "prodnet/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "prodnet/csv.hpp"
#include "prodnet/errors.hpp"
#include "prodnet/fileio.hpp"

namespace prodnet {

namespace {

class CodeIndex {
 public:
  std::size_t add(const std::string& code) {
    const auto [it, inserted] = index_.try_emplace(code, codes_.size());
    if (inserted) codes_.push_back(code);
    return it->second;
  }
  std::optional<std::size_t> find(const std::string& code) const {
    const auto it = index_.find(code);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const std::vector<std::string>& codes() const { return codes_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> codes_;
};

double clamp_cell(double v, const std::string& where, std::vector<std::string>& warnings) {
  if (v < 0.0) {
    std::ostringstream msg;
    msg << where << ": negative value " << v << " clamped to 0";
    warnings.push_back(msg.str());
    return 0.0;
  }
  return v;
}

void require_year(const SupplyUseTables& t, int year) {
  if (!t.S.count(year)) throw DataError("year " + std::to_string(year) + " is not present in the tables");
}

// Total supply per commodity; positive use of a zero-supply commodity is an error.
Vector commodity_totals(const SupplyUseTables& t, int year) {
  const Matrix& S = t.S.at(year);
  const Matrix& U = t.U.at(year);
  const Vector total = S.rowwise().sum();
  for (Eigen::Index c = 0; c < total.size(); ++c)
    if (!(total[c] > 0.0)) {
      const bool used = U.col(c).sum() > 0.0 || t.pce.at(year)[c] > 0.0 || t.imports.at(year)[c] > 0.0;
      if (used)
        throw DataError("commodity " + t.commodities[static_cast<std::size_t>(c)] + " has zero total supply in " +
                        std::to_string(year) + " but positive use");
    }
  return total;
}

// market_share(c, j) = S_cj / sum_k S_ck (zero rows stay zero).
Matrix market_shares(const SupplyUseTables& t, int year) {
  const Matrix& S = t.S.at(year);
  const Vector total = commodity_totals(t, year);
  Matrix m = Matrix::Zero(S.rows(), S.cols());
  for (Eigen::Index c = 0; c < S.rows(); ++c)
    if (total[c] > 0.0) m.row(c) = S.row(c) / total[c];
  return m;
}

}  // namespace

bool SupplyUseTables::operator==(const SupplyUseTables& o) const {
  return years == o.years && industries == o.industries && commodities == o.commodities && S == o.S && U == o.U &&
         imports == o.imports && labor == o.labor && pce == o.pce && exports == o.exports &&
         price_index == o.price_index;
}

SupplyUseTables assemble_tables(const RawTables& raw, const TableCodes& codes, const std::vector<int>& required_years) {
  SupplyUseTables t;
  CodeIndex ind, com;
  std::set<int> years;
  for (const auto& r : raw.supply) {
    com.add(r.commodity);
    ind.add(r.industry);
    years.insert(r.year);
  }
  if (years.empty()) throw ParseError("supply.csv: no rows");
  for (int y : required_years)
    if (!years.count(y)) throw ParseError("supply.csv: missing year " + std::to_string(y));
  t.years.assign(years.begin(), years.end());
  t.industries = ind.codes();
  t.commodities = com.codes();
  const auto N = static_cast<Eigen::Index>(t.industries.size());
  const auto C = static_cast<Eigen::Index>(t.commodities.size());
  for (int y : t.years) {
    t.S[y] = Matrix::Zero(C, N);
    t.U[y] = Matrix::Zero(N, C);
    t.imports[y] = Vector::Zero(C);
    t.labor[y] = Vector::Zero(N);
    t.pce[y] = Vector::Zero(C);
    t.exports[y] = Vector::Zero(C);
    t.price_index[y] = Vector::Constant(N, std::numeric_limits<double>::quiet_NaN());
  }
  auto& warn = t.warnings;
  auto year_of = [&](int y, const char* file) {
    if (!years.count(y))
      throw ParseError(std::string(file) + ": year " + std::to_string(y) + " does not appear in supply.csv");
    return y;
  };

  for (const auto& r : raw.supply) {
    const auto c = static_cast<Eigen::Index>(*com.find(r.commodity));
    const auto j = static_cast<Eigen::Index>(*ind.find(r.industry));
    t.S[r.year](c, j) += clamp_cell(r.value, "supply.csv " + std::to_string(r.year) + " " + r.commodity + "/" + r.industry, warn);
  }

  std::set<int> use_years, imp_years, price_years;
  std::set<std::string> ignored;
  for (const auto& r : raw.use) {
    const int y = year_of(r.year, "use.csv");
    use_years.insert(y);
    const std::string where = "use.csv " + std::to_string(y) + " " + r.industry + "/" + r.commodity;
    if (r.commodity == codes.labor) {
      if (const auto i = ind.find(r.industry)) t.labor[y][static_cast<Eigen::Index>(*i)] += clamp_cell(r.value, where, warn);
      continue;
    }
    const auto c = com.find(r.commodity);
    if (!c) {
      ignored.insert("commodity " + r.commodity);
      continue;
    }
    const auto ci = static_cast<Eigen::Index>(*c);
    if (r.industry == codes.pce) {
      t.pce[y][ci] += clamp_cell(r.value, where, warn);
    } else if (r.industry == codes.exports) {
      t.exports[y][ci] += clamp_cell(r.value, where, warn);
    } else if (const auto i = ind.find(r.industry)) {
      t.U[y](static_cast<Eigen::Index>(*i), ci) += clamp_cell(r.value, where, warn);
    } else {
      ignored.insert("column " + r.industry);
    }
  }
  for (const auto& r : raw.imports) {
    const int y = year_of(r.year, "imports.csv");
    imp_years.insert(y);
    const auto c = com.find(r.commodity);
    if (!c) throw ParseError("imports.csv: commodity " + r.commodity + " does not appear in supply.csv");
    t.imports[y][static_cast<Eigen::Index>(*c)] +=
        clamp_cell(r.value, "imports.csv " + std::to_string(y) + " " + r.commodity, warn);
  }
  for (const auto& r : raw.prices) {
    if (!years.count(r.year)) continue;  // price history may extend beyond the IO years
    price_years.insert(r.year);
    const auto i = ind.find(r.industry);
    if (!i) throw ParseError("prices.csv: industry " + r.industry + " does not appear in supply.csv");
    t.price_index[r.year][static_cast<Eigen::Index>(*i)] = r.index;
  }
  for (const auto& s : ignored) warn.push_back("use.csv: ignored " + s);

  auto check = [&](const std::set<int>& have, const char* file) {
    for (int y : t.years)
      if (!have.count(y)) throw ParseError(std::string(file) + ": missing year " + std::to_string(y));
  };
  check(use_years, "use.csv");
  check(imp_years, "imports.csv");
  check(price_years, "prices.csv");
  for (int y : t.years)
    for (Eigen::Index i = 0; i < N; ++i)
      if (std::isnan(t.price_index[y][i]))
        throw ParseError("prices.csv: missing industry " + t.industries[static_cast<std::size_t>(i)] + " in year " +
                         std::to_string(y));
  return t;
}

RawTables read_fixture_csv(const std::filesystem::path& dir) {
  for (const char* f : {"supply.csv", "use.csv", "imports.csv", "prices.csv"})
    if (!std::filesystem::exists(dir / f)) throw DataError("missing input file " + (dir / f).string());
  RawTables raw;
  {
    const auto t = read_csv(dir / "supply.csv");
    const auto y = t.column("year"), c = t.column("commodity"), i = t.column("industry"), v = t.column("value");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto ctx = "supply.csv row " + std::to_string(r + 2);
      raw.supply.push_back({parse_int(t.rows[r][y], ctx), t.rows[r][c], t.rows[r][i], parse_double(t.rows[r][v], ctx)});
    }
  }
  {
    const auto t = read_csv(dir / "use.csv");
    const auto y = t.column("year"), i = t.column("industry"), c = t.column("commodity"), v = t.column("value");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto ctx = "use.csv row " + std::to_string(r + 2);
      raw.use.push_back({parse_int(t.rows[r][y], ctx), t.rows[r][i], t.rows[r][c], parse_double(t.rows[r][v], ctx)});
    }
  }
  {
    const auto t = read_csv(dir / "imports.csv");
    const auto y = t.column("year"), c = t.column("commodity"), v = t.column("value");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto ctx = "imports.csv row " + std::to_string(r + 2);
      raw.imports.push_back({parse_int(t.rows[r][y], ctx), t.rows[r][c], parse_double(t.rows[r][v], ctx)});
    }
  }
  {
    const auto t = read_csv(dir / "prices.csv");
    const auto y = t.column("year"), i = t.column("industry"), v = t.column("index");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto ctx = "prices.csv row " + std::to_string(r + 2);
      raw.prices.push_back({parse_int(t.rows[r][y], ctx), t.rows[r][i], parse_double(t.rows[r][v], ctx)});
    }
  }
  return raw;
}

SupplyUseTables load_fixture_tables(const std::filesystem::path& dir, const TableCodes& codes,
                                    const std::vector<int>& required_years) {
  return assemble_tables(read_fixture_csv(dir), codes, required_years);
}

std::map<std::string, std::string> load_sector_labels(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  if (!std::filesystem::exists(dir / "sectors.csv")) return out;
  const auto t = read_csv(dir / "sectors.csv");
  const auto c = t.column("code"), l = t.column("label");
  for (const auto& row : t.rows) out[row[c]] = row[l];
  return out;
}

Matrix compute_expenditure_shares(const SupplyUseTables& tables, int year) {
  require_year(tables, year);
  const Matrix m = market_shares(tables, year);
  Matrix omega = tables.U.at(year) * m;
  for (Eigen::Index i = 0; i < omega.rows(); ++i) {
    const double total = omega.row(i).sum();
    if (total > 0.0) omega.row(i) /= total;
  }
  return omega;
}

Vector compute_import_ratios(const SupplyUseTables& tables, int year) {
  require_year(tables, year);
  const Matrix& S = tables.S.at(year);
  const Vector total = commodity_totals(tables, year);
  const Vector& imp = tables.imports.at(year);
  Vector phi = Vector::Ones(S.cols());
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    double imported = 0.0;
    for (Eigen::Index c = 0; c < S.rows(); ++c)
      if (total[c] > 0.0) imported += (imp[c] / total[c]) * (S(c, j) / total[c]);
    phi[j] = std::clamp(1.0 - imported, 0.0, 1.0);
  }
  return phi;
}

std::vector<bool> classify_tradeable(const std::vector<Vector>& phi_by_year, double threshold) {
  if (phi_by_year.empty()) throw DataError("classify_tradeable: no import-ratio years");
  const Eigen::Index n = phi_by_year.front().size();
  Vector mean = Vector::Zero(n);
  for (const auto& p : phi_by_year) {
    if (p.size() != n) throw DimensionError("classify_tradeable: inconsistent sector counts");
    mean += (Vector::Ones(n) - p);
  }
  mean /= static_cast<double>(phi_by_year.size());
  std::vector<bool> out(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = mean[j] > threshold;
  return out;
}

PanelBuild build_panel(const SupplyUseTables& tables, const PanelOptions& options) {
  const auto& years = tables.years;
  const auto n = static_cast<Eigen::Index>(tables.n_industries());
  std::map<int, Matrix> omega;
  std::vector<Vector> phis;
  std::map<int, Vector> phi;
  for (int y : years) {
    omega[y] = compute_expenditure_shares(tables, y);
    phi[y] = compute_import_ratios(tables, y);
    phis.push_back(phi[y]);
  }
  PanelBuild out;
  out.report.tradeable = classify_tradeable(phis, options.tradeable_threshold);
  for (int y : years)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!out.report.tradeable[static_cast<std::size_t>(j)]) phi[y][j] = 1.0;

  Matrix avg = Matrix::Zero(n, n);
  for (int y : years) avg += omega[y];
  avg /= static_cast<double>(years.size());

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (avg(i, j) >= options.min_avg_share) ++out.report.pairs_kept;

  auto share = [&](int y, Eigen::Index i, Eigen::Index j) {
    return options.share == PanelShare::domestic ? omega[y](i, j) * phi[y][j] : omega[y](i, j);
  };
  for (std::size_t k = 1; k < years.size(); ++k) {
    const int t = years[k], s = years[k - 1];
    if (t != s + 1) continue;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        ++out.report.candidates;
        if (avg(i, j) < options.min_avg_share) {
          ++out.report.dropped_share;
          continue;
        }
        PanelObservation o;
        o.i = static_cast<std::size_t>(i);
        o.j = static_cast<std::size_t>(j);
        o.t = t;
        o.dlog_omega = std::log(share(t, i, j)) - std::log(share(s, i, j));
        o.dlog_p = std::log(tables.price_index.at(t)[j]) - std::log(tables.price_index.at(s)[j]);
        o.dlog_phi = std::log(phi[t][j]) - std::log(phi[s][j]);
        if (!std::isfinite(o.dlog_omega) || !std::isfinite(o.dlog_p) || !std::isfinite(o.dlog_phi)) {
          ++out.report.dropped_nonfinite;
          continue;
        }
        out.panel.push_back(o);
      }
  }
  out.report.kept = out.panel.size();
  if (out.report.candidates == 0) throw DataError("build_panel: no consecutive years in the tables");
  return out;
}

namespace {

Vector household_shares(const SupplyUseTables& t, int year) {
  Vector c = market_shares(t, year).transpose() * t.pce.at(year);
  const double total = c.sum();
  if (!(total > 0.0)) throw DataError("no personal consumption in " + std::to_string(year));
  return c / total;
}

}  // namespace

PanelBuild build_household_panel(const SupplyUseTables& tables, const PanelOptions& options) {
  const auto& years = tables.years;
  const auto n = static_cast<Eigen::Index>(tables.n_industries());
  std::map<int, Vector> shares;
  Vector avg = Vector::Zero(n);
  for (int y : years) {
    shares[y] = household_shares(tables, y);
    avg += shares[y];
  }
  avg /= static_cast<double>(years.size());
  PanelBuild out;
  for (std::size_t k = 1; k < years.size(); ++k) {
    const int t = years[k], s = years[k - 1];
    if (t != s + 1) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      ++out.report.candidates;
      if (avg[j] < options.min_avg_share) {
        ++out.report.dropped_share;
        continue;
      }
      PanelObservation o;
      o.i = 0;
      o.j = static_cast<std::size_t>(j);
      o.t = t;
      o.dlog_omega = std::log(shares[t][j]) - std::log(shares[s][j]);
      o.dlog_p = std::log(tables.price_index.at(t)[j]) - std::log(tables.price_index.at(s)[j]);
      if (!std::isfinite(o.dlog_omega) || !std::isfinite(o.dlog_p)) {
        ++out.report.dropped_nonfinite;
        continue;
      }
      out.panel.push_back(o);
    }
  }
  out.report.kept = out.panel.size();
  return out;
}

IOSnapshot assemble_snapshot(const SupplyUseTables& tables, int year, const std::vector<bool>& tradeable) {
  require_year(tables, year);
  const auto n = static_cast<Eigen::Index>(tables.n_industries());
  if (tradeable.size() != static_cast<std::size_t>(n)) throw DimensionError("assemble_snapshot: tradeable flags");
  IOSnapshot s;
  s.year = year;
  s.omega = compute_expenditure_shares(tables, year);
  Vector phi = compute_import_ratios(tables, year);
  for (Eigen::Index j = 0; j < n; ++j)
    if (!tradeable[static_cast<std::size_t>(j)]) phi[j] = 1.0;
  s.phi = broadcast_import_ratios(phi);

  const Matrix& U = tables.U.at(year);
  const Vector& V = tables.labor.at(year);
  s.gamma.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double inter = U.row(i).sum();
    const double total = V[i] + inter;
    s.gamma[i] = total > 0.0 ? V[i] / total : 1.0;
    if (!(inter > 0.0)) {
      // No intermediates: a placeholder own-input row keeps Omega row-stochastic.
      s.omega.row(i).setZero();
      s.omega(i, i) = 1.0;
      s.gamma[i] = 1.0;
    }
  }
  s.a = build_io_matrix(s.omega, s.phi, s.gamma);

  const Matrix m = market_shares(tables, year);
  const Vector cons = m.transpose() * tables.pce.at(year);
  const double total_c = cons.sum();
  if (!(total_c > 0.0)) throw DataError("no personal consumption in " + std::to_string(year));
  s.a0 = cons / total_c;
  s.lambda = tables.S.at(year).colwise().sum().transpose() / total_c;
  s.nx = m.transpose() * tables.exports.at(year) / total_c;
  return s;
}

void write_panel_csv(const Panel& panel, const std::vector<std::string>& codes, const std::filesystem::path& path,
                     const std::string& comment) {
  std::ostringstream out;
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "i_code,j_code,t,dlog_omega,dlog_p,dlog_phi\n";
  for (const auto& o : panel)
    out << csv_escape(codes.at(o.i)) << ',' << csv_escape(codes.at(o.j)) << ',' << o.t << ','
        << format_double(o.dlog_omega) << ',' << format_double(o.dlog_p) << ',' << format_double(o.dlog_phi) << '\n';
  write_file_atomic(path, out.str());
}

Panel read_panel_csv(const std::filesystem::path& path, const std::vector<std::string>& codes) {
  const auto t = read_csv(path);
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t k = 0; k < codes.size(); ++k) idx[codes[k]] = k;
  const auto ci = t.column("i_code"), cj = t.column("j_code"), ct = t.column("t"), cw = t.column("dlog_omega"),
             cp = t.column("dlog_p"), cf = t.column("dlog_phi");
  Panel p;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto ctx = path.filename().string() + " row " + std::to_string(r + 2);
    const auto i = idx.find(row[ci]), j = idx.find(row[cj]);
    if (i == idx.end() || j == idx.end()) throw ParseError(ctx + ": unknown sector code");
    p.push_back({i->second, j->second, parse_int(row[ct], ctx), parse_double(row[cw], ctx), parse_double(row[cp], ctx),
                 parse_double(row[cf], ctx)});
  }
  return p;
}

TfpPanel load_tfp_panel(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing input file " + path.string());
  const auto t = read_csv(path);
  const auto cy = t.column("year"), ci = t.column("industry"), cv = t.column("log_tfp");
  CodeIndex ind;
  std::set<int> years;
  std::vector<std::tuple<int, std::size_t, double>> cells;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto ctx = "tfp.csv row " + std::to_string(r + 2);
    const int y = parse_int(t.rows[r][cy], ctx);
    years.insert(y);
    cells.emplace_back(y, ind.add(t.rows[r][ci]), parse_double(t.rows[r][cv], ctx));
  }
  TfpPanel p;
  p.years.assign(years.begin(), years.end());
  p.industries = ind.codes();
  p.log_tfp = Matrix::Constant(static_cast<Eigen::Index>(p.years.size()), static_cast<Eigen::Index>(p.industries.size()),
                               std::numeric_limits<double>::quiet_NaN());
  for (const auto& [y, i, v] : cells) {
    const auto row = std::lower_bound(p.years.begin(), p.years.end(), y) - p.years.begin();
    p.log_tfp(row, static_cast<Eigen::Index>(i)) = v;
  }
  for (Eigen::Index r = 0; r < p.log_tfp.rows(); ++r)
    for (Eigen::Index c = 0; c < p.log_tfp.cols(); ++c)
      if (std::isnan(p.log_tfp(r, c)))
        throw ParseError("tfp.csv: missing industry " + p.industries[static_cast<std::size_t>(c)] + " in year " +
                         std::to_string(p.years[static_cast<std::size_t>(r)]));
  return p;
}

TFPCovariance tfp_covariance(const TfpPanel& panel, int horizon_years, bool overlapping) {
  if (horizon_years < 1) throw DomainError("tfp_covariance: horizon must be positive");
  const auto n = panel.log_tfp.cols();
  std::map<int, Eigen::Index> row_of;
  for (std::size_t k = 0; k < panel.years.size(); ++k) row_of[panel.years[k]] = static_cast<Eigen::Index>(k);
  std::vector<Vector> diffs;
  int next_start = std::numeric_limits<int>::min();
  for (int y : panel.years) {
    if (!overlapping && y < next_start) continue;
    const auto it = row_of.find(y + horizon_years);
    if (it == row_of.end()) continue;
    diffs.push_back((panel.log_tfp.row(it->second) - panel.log_tfp.row(row_of[y])).transpose());
    next_start = y + horizon_years;
  }
  if (diffs.size() < 2)
    throw DataError("tfp_covariance: need at least two " + std::to_string(horizon_years) + "-year differences, have " +
                    std::to_string(diffs.size()));
  Vector mean = Vector::Zero(n);
  for (const auto& d : diffs) mean += d;
  mean /= static_cast<double>(diffs.size());
  Matrix cov = Matrix::Zero(n, n);
  for (const auto& d : diffs) cov += (d - mean) * (d - mean).transpose();
  cov /= static_cast<double>(diffs.size() - 1);
  cov = 0.5 * (cov + cov.transpose());

  TFPCovariance out;
  out.n_differences = diffs.size();
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  Vector ev = es.eigenvalues();
  out.clipped = std::min(0.0, ev.minCoeff());
  if (out.clipped < 0.0) {
    ev = ev.cwiseMax(0.0);
    cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose());
  }
  out.cov = cov;
  return out;
}

}  // namespace prodnet
