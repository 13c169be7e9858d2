#include "prodnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "prodnet/analytics.hpp"
#include "prodnet/csv.hpp"
#include "prodnet/errors.hpp"
#include "prodnet/fileio.hpp"

#ifndef PRODNET_VERSION
#define PRODNET_VERSION "0.0.0"
#endif

namespace prodnet {

namespace fs = std::filesystem;

namespace {

const std::string kHousehold = "HOUSEHOLD";

fs::path out_dir(const RunConfig& c) { return fs::path(c.output_dir.empty() ? "." : c.output_dir); }

Json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing input file " + path.string());
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, Json doc, const RunConfig& c) {
  doc["provenance"] = provenance_json(c);
  write_file_atomic(path, doc.dump(2) + "\n");
}

std::string pct(double dlog) { return format_double(100.0 * dlog); }

/// Small CSV builder that always starts with the provenance comment.
class CsvOut {
 public:
  CsvOut(const RunConfig& c, const std::vector<std::string>& header) {
    out_ << provenance_line(c) << '\n';
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) out_ << (k ? "," : "") << csv_escape(fields[k]);
    out_ << '\n';
  }
  void write(const fs::path& path) const { write_file_atomic(path, out_.str()); }

 private:
  std::ostringstream out_;
};

void restrict_years(SupplyUseTables& t, const std::vector<int>& years) {
  if (years.empty()) return;
  const std::set<int> keep(years.begin(), years.end());
  auto prune = [&](auto& m) {
    for (auto it = m.begin(); it != m.end();) it = keep.count(it->first) ? std::next(it) : m.erase(it);
  };
  prune(t.S);
  prune(t.U);
  prune(t.imports);
  prune(t.labor);
  prune(t.pce);
  prune(t.exports);
  prune(t.price_index);
  t.years.erase(std::remove_if(t.years.begin(), t.years.end(), [&](int y) { return !keep.count(y); }), t.years.end());
}

SupplyUseTables load_tables(const RunConfig& c, std::ostream& log) {
  if (c.source == "api") {
    if (c.years.empty()) throw DataError("config 'years' must list the years to request from the API");
    BeaConfig b = c.bea;
    b.years = c.years;
    log << "fetching BEA tables into " << c.cache_dir << "\n";
    const auto transport = make_https_transport();
    return fetch_bea_tables(b, c.cache_dir, transport.get());
  }
  if (c.fixtures.empty()) throw DataError("no fixtures directory configured (use --fixtures or 'fixtures')");
  auto t = load_fixture_tables(c.fixtures, c.bea.codes, c.years);
  restrict_years(t, c.years);
  return t;
}

PanelOptions panel_options(const RunConfig& c) {
  PanelOptions o;
  o.min_avg_share = c.min_avg_share;
  o.tradeable_threshold = c.tradeable_threshold;
  o.share = c.panel_share == "domestic" ? PanelShare::domestic : PanelShare::total_use;
  return o;
}

Economy load_economy(const RunConfig& c, int* base_year = nullptr) {
  const Json j = read_json(out_dir(c) / "sectors.json");
  if (base_year) *base_year = require(j, "base_year").get<int>();
  return economy_from_json(require(j, "economy"));
}

fs::path model_path(const RunConfig& c, const std::string& calibration, const std::string& economy) {
  return out_dir(c) / ("model_" + calibration + "_" + economy + ".json");
}

std::vector<std::string> economies(const RunOptions& o) {
  if (o.closed_only) return {"closed"};
  return o.config.scenarios.economies;
}

EstimationOptions estimation_options(const RunConfig& c) {
  EstimationOptions o;
  o.workers = c.estimation.workers;
  o.xi_upper = c.estimation.xi_upper;
  return o;
}

}  // namespace

const char* version() { return PRODNET_VERSION; }

std::string provenance_line(const RunConfig& config) {
  return std::string("# prodnet ") + version() + " config_hash=" + config_hash(config) +
         " seed=" + std::to_string(config.seed);
}

Json provenance_json(const RunConfig& config) {
  return {{"program", "prodnet"}, {"version", version()}, {"config_hash", config_hash(config)}, {"seed", config.seed}};
}

int cmd_ingest(const RunOptions& options, std::ostream& log) {
  const RunConfig& c = options.config;
  const fs::path dir = out_dir(c);
  fs::create_directories(dir);
  const SupplyUseTables tables = load_tables(c, log);
  if (tables.years.size() < 2) throw DataError("need at least two years of tables to build a panel");
  for (const auto& w : tables.warnings) log << "warning: " << w << "\n";

  const PanelBuild pb = build_panel(tables, panel_options(c));
  const PanelBuild hh = build_household_panel(tables, panel_options(c));

  std::vector<std::string> labels;
  std::map<std::string, std::string> label_map;
  if (c.source == "fixtures") label_map = load_sector_labels(c.fixtures);
  for (const auto& code : tables.industries) {
    const auto it = label_map.find(code);
    labels.push_back(it == label_map.end() ? code : it->second);
  }
  const Economy economy(tables.industries, labels, pb.report.tradeable);
  const int base_year = c.base_year ? c.base_year : tables.years.back();
  if (!std::count(tables.years.begin(), tables.years.end(), base_year))
    throw DataError("base year " + std::to_string(base_year) + " is not in the data");

  write_panel_csv(pb.panel, economy.codes(), dir / "panel.csv", provenance_line(c).substr(2));
  // Household rows use an extra code so the file stays self-describing.
  Panel hp = hh.panel;
  auto hh_codes = economy.codes();
  hh_codes.push_back(kHousehold);
  for (auto& o : hp) o.i = hh_codes.size() - 1;
  write_panel_csv(hp, hh_codes, dir / "household_panel.csv", provenance_line(c).substr(2));

  write_json(dir / "sectors.json",
             {{"economy", to_json(economy)}, {"years", tables.years}, {"base_year", base_year},
              {"warnings", tables.warnings}},
             c);
  write_json(dir / "filter_report.json", {{"panel", to_json(pb.report)}, {"household", to_json(hh.report)}}, c);
  for (int y : tables.years) {
    const IOSnapshot s = assemble_snapshot(tables, y, pb.report.tradeable);
    for (const auto& v : validate_snapshot(s, 1e-8))
      log << "warning: snapshot " << y << " violates " << v.invariant << ": " << v.detail << "\n";
    write_json(dir / ("snapshot_" + std::to_string(y) + ".json"), to_json(s), c);
  }

  const fs::path tfp = !c.tfp_file.empty() ? fs::path(c.tfp_file)
                       : c.source == "fixtures" ? fs::path(c.fixtures) / "tfp.csv"
                                                : fs::path();
  if (!tfp.empty() && fs::exists(tfp)) {
    const TfpPanel tp = load_tfp_panel(tfp);
    const TFPCovariance raw = tfp_covariance(tp, c.scenarios.tfp_horizon, c.scenarios.overlapping_windows);
    const auto n = static_cast<Eigen::Index>(economy.n_sectors());
    std::vector<Eigen::Index> pos;
    for (const auto& code : economy.codes()) {
      const auto it = std::find(tp.industries.begin(), tp.industries.end(), code);
      if (it == tp.industries.end()) throw DataError(tfp.string() + ": no TFP series for industry " + code);
      pos.push_back(static_cast<Eigen::Index>(it - tp.industries.begin()));
    }
    TFPCovariance cov = raw;
    cov.cov.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) cov.cov(a, b) = raw.cov(pos[a], pos[b]);
    Json j = to_json(cov);
    j["codes"] = economy.codes();
    j["horizon_years"] = c.scenarios.tfp_horizon;
    j["overlapping"] = c.scenarios.overlapping_windows;
    write_json(dir / "tfp_covariance.json", j, c);
  } else {
    log << "no TFP data found; business-cycle experiments will be skipped\n";
  }
  log << "ingest: " << economy.n_sectors() << " sectors, " << tables.years.size() << " years, " << pb.panel.size()
      << " panel observations (" << pb.report.dropped_share << " below share filter, "
      << pb.report.dropped_nonfinite << " non-finite)\n";
  return kExitOk;
}

int cmd_estimate(const RunOptions& options, std::ostream& log) {
  const RunConfig& c = options.config;
  const fs::path dir = out_dir(c);
  const Economy economy = load_economy(c);
  const auto n = economy.n_sectors();
  if (!fs::exists(dir / "panel.csv")) throw DataError("missing input file " + (dir / "panel.csv").string());
  const Panel panel = read_panel_csv(dir / "panel.csv", economy.codes());
  const ResidualizedPanel rp = residualize(panel, n);

  std::vector<EstimationMode> modes;
  if (options.mode) {
    modes.push_back(parse_estimation_mode(*options.mode));
  } else {
    for (const auto& m : c.estimation.modes) modes.push_back(parse_estimation_mode(m));
  }
  const EstimationOptions eo = estimation_options(c);
  Json results = Json::object();
  std::map<EstimationMode, EstimationResult> by_mode;
  bool all_converged = true;
  for (auto mode : modes) {
    log << "estimating " << to_string(mode) << " on " << panel.size() << " observations\n";
    const auto r = estimate(rp, mode, eo);
    if (!r.converged) log << "warning: " << to_string(mode) << " did not converge\n";
    if (!r.variance_ok) log << "warning: " << to_string(mode) << " variance: " << r.variance_error << "\n";
    all_converged = all_converged && r.converged;
    results[to_string(mode)] = to_json(r);
    by_mode[mode] = r;
  }
  Json doc = {{"codes", economy.codes()}, {"results", results}};

  std::optional<HouseholdEstimate> household;
  if (c.estimation.household && !options.mode) {
    const fs::path hp = dir / "household_panel.csv";
    auto codes = economy.codes();
    codes.push_back(kHousehold);
    Panel p = read_panel_csv(hp, codes);
    for (auto& o : p) o.i = 0;
    household = estimate_household_nu(p, eo);
    if (household->degenerate) log << "warning: household shares do not vary; nu is not identified\n";
    all_converged = all_converged && (household->converged || household->degenerate);
    doc["household"] = to_json(*household);
  }
  write_json(dir / "estimates.json", doc, c);

  CsvOut t3(c, {"code", "label", "estimate", "se", "biased_estimate", "biased_se"});
  auto cell = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  auto find = [&](EstimationMode m) -> const EstimationResult* {
    const auto it = by_mode.find(m);
    return it == by_mode.end() ? nullptr : &it->second;
  };
  const auto* ss = find(EstimationMode::sector_specific);
  const auto* bi = find(EstimationMode::biased_closed);
  const auto* un = find(EstimationMode::uniform);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    t3.row({economy.codes()[i], economy.labels()[i], cell(ss ? std::optional(ss->theta_hat[k]) : std::nullopt),
            cell(ss ? std::optional(ss->se_theta[k]) : std::nullopt),
            cell(bi ? std::optional(bi->theta_hat[k]) : std::nullopt),
            cell(bi ? std::optional(bi->se_theta[k]) : std::nullopt)});
  }
  if (un) t3.row({"UNIFORM", "Uniform", format_double(un->theta_hat[0]), format_double(un->se_theta[0]), "", ""});
  if (ss) t3.row({"ARMINGTON", "Armington", format_double(ss->xi_hat), format_double(ss->se_xi), "", ""});
  if (household)
    t3.row({"HOUSEHOLD", "Household", format_double(household->nu_hat), format_double(household->se), "", ""});
  t3.write(dir / "table3.csv");

  if (!all_converged && !options.allow_nonconverged) {
    log << "estimation did not converge (rerun with --allow-nonconverged to accept)\n";
    return kExitEstimation;
  }
  return kExitOk;
}

int cmd_calibrate(const RunOptions& options, std::ostream& log) {
  const RunConfig& c = options.config;
  const fs::path dir = out_dir(c);
  int base_year = 0;
  const Economy economy = load_economy(c, &base_year);
  const auto n = economy.n_sectors();
  const IOSnapshot snapshot = snapshot_from_json(read_json(dir / ("snapshot_" + std::to_string(base_year) + ".json")));
  const auto& ov = c.elasticities;

  Json est = Json::object();
  if (fs::exists(dir / "estimates.json")) {
    est = read_json(dir / "estimates.json");
  } else if (!(ov.theta && ov.xi)) {
    throw DataError("missing input file " + (dir / "estimates.json").string() +
                    " (run estimate, or set elasticities.theta and elasticities.xi)");
  }
  auto result = [&](const std::string& mode) -> std::optional<EstimationResult> {
    if (!est.contains("results") || !est["results"].contains(mode)) return std::nullopt;
    return estimation_from_json(est["results"][mode]);
  };
  const auto ss = result("sector_specific");
  const auto un = result("uniform");

  double xi = 0.0;
  if (ov.xi) {
    xi = *ov.xi;
  } else if (ss) {
    xi = ss->xi_hat;
  } else if (un) {
    xi = un->xi_hat;
  } else {
    throw DataError("no Armington estimate available; set elasticities.xi or run sector_specific estimation");
  }
  double nu = 1.0;
  if (ov.nu) {
    nu = *ov.nu;
  } else if (est.contains("household")) {
    const auto h = household_from_json(est["household"]);
    if (!h.degenerate) nu = h.nu_hat;
  } else {
    log << "no household estimate; using nu = 1\n";
  }

  for (const auto& cal : c.scenarios.calibrations) {
    Vector theta;
    if (cal == "main") {
      if (ov.theta) {
        theta = Vector::Constant(static_cast<Eigen::Index>(n), *ov.theta);
      } else if (ss) {
        theta = ss->theta_hat;
      } else {
        throw DataError("estimates.json has no sector_specific results for the main calibration");
      }
    } else if (cal == "uniform") {
      if (!un) throw DataError("estimates.json has no uniform results for the uniform calibration");
      theta = Vector::Constant(static_cast<Eigen::Index>(n), un->theta_hat[0]);
    } else {
      theta = Vector::Ones(static_cast<Eigen::Index>(n));
    }
    Elasticities e = Elasticities::uniform(n, 0.0, ov.sigma, xi, nu);
    e.theta = theta;
    e.validate();
    for (const auto& econ : economies(options)) {
      CalibratedModel m = calibrate(snapshot, e, econ == "open", &economy);
      if (ov.xi_export) m.elasticities.xi_export = *ov.xi_export;
      // Fails fast on a model whose base year does not solve.
      const auto base = base_equilibrium(m);
      log << "calibrated " << cal << " (" << econ << "), base residual " << check_equilibrium(m, base).max() << "\n";
      write_json(model_path(c, cal, econ), to_json(m), c);
    }
  }
  return kExitOk;
}

int cmd_simulate(const RunOptions& options, std::ostream& log) {
  const RunConfig& c = options.config;
  const auto& sc = c.scenarios;
  const fs::path dir = out_dir(c);
  ExperimentOptions xo;
  xo.workers = std::max(1u, sc.workers);

  std::optional<Matrix> cov;
  if (fs::exists(dir / "tfp_covariance.json")) cov = tfp_covariance_from_json(read_json(dir / "tfp_covariance.json")).cov;

  Json summary = Json::object();
  std::size_t attempted = 0, succeeded = 0;
  auto tally = [&](const ComparisonReport& r) {
    for (const auto& s : r.scenarios)
      for (bool ok : s.ok) {
        ++attempted;
        succeeded += ok;
      }
  };
  auto pct_columns = [](const ComparisonReport& r, const std::string& suffix) {
    std::vector<std::string> h;
    for (const auto& cal : r.calibrations) h.push_back(cal + suffix);
    return h;
  };

  for (const auto& econ : economies(options)) {
    std::vector<NamedModel> models;
    for (const auto& cal : sc.calibrations) models.push_back({cal, model_from_json(read_json(model_path(c, cal, econ)))});
    const auto& eco = models.front().model.economy;
    const bool has_pair = std::count(sc.calibrations.begin(), sc.calibrations.end(), "main") &&
                          std::count(sc.calibrations.begin(), sc.calibrations.end(), "uniform");
    Json es = Json::object();

    if (sc.foreign_price && econ == "open") {
      log << "foreign price experiment (" << econ << ")\n";
      const auto r = foreign_price_experiment(models, sc.foreign_price_magnitude, xo);
      tally(r);
      std::vector<std::string> h = {"shocked_code", "shocked_label", "rank", "code", "label"};
      for (auto& x : pct_columns(r, "_pct")) h.push_back(x);
      if (has_pair) h.push_back("difference_pct");
      CsvOut t(c, h);
      for (std::size_t k = 0; k < r.scenarios.size(); ++k) {
        const auto& s = r.scenarios[k];
        if (!s.ok[0]) continue;
        const auto top = top_responders(r, k, 0, sc.top_k);
        for (std::size_t rank = 0; rank < top.size(); ++rank) {
          const auto j = static_cast<Eigen::Index>(top[rank]);
          std::vector<std::string> row = {s.label, eco.labels()[static_cast<std::size_t>(s.shocked)],
                                          std::to_string(rank + 1), eco.codes()[top[rank]], eco.labels()[top[rank]]};
          for (std::size_t cc = 0; cc < models.size(); ++cc) row.push_back(s.ok[cc] ? pct(s.dlogP[cc][j]) : "");
          if (has_pair) {
            const auto a = r.calibration_index("main"), b = r.calibration_index("uniform");
            row.push_back(s.ok[a] && s.ok[b] ? pct(s.dlogP[a][j] - s.dlogP[b][j]) : "");
          }
          t.row(row);
        }
      }
      t.write(dir / ("table4_foreign_price_" + econ + ".csv"));
      es["foreign_price"] = summary_json(r);
    }

    if (sc.severe_tfp) {
      log << "severe TFP experiment (" << econ << ")\n";
      const auto r = severe_tfp_experiment(models, sc.severe_tfp_magnitude, xo);
      tally(r);
      std::vector<std::size_t> order(r.scenarios.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      auto change = [&](std::size_t k) {
        const auto& s = r.scenarios[k];
        const auto a = r.calibration_index("main"), b = r.calibration_index("uniform");
        return s.ok[a] && s.ok[b] ? s.dlogGDP[a] - s.dlogGDP[b] : -HUGE_VAL;
      };
      if (has_pair) std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return change(x) > change(y); });
      std::vector<std::string> h = {"code", "label"};
      for (auto& x : pct_columns(r, "_gdp_pct")) h.push_back(x);
      if (has_pair) h.push_back("change_pct");
      CsvOut t(c, h);
      for (std::size_t k : order) {
        const auto& s = r.scenarios[k];
        std::vector<std::string> row = {s.label, eco.labels()[static_cast<std::size_t>(s.shocked)]};
        for (std::size_t cc = 0; cc < models.size(); ++cc) row.push_back(s.ok[cc] ? pct(s.dlogGDP[cc]) : "");
        if (has_pair) row.push_back(std::isfinite(change(k)) ? pct(change(k)) : "");
        t.row(row);
      }
      t.write(dir / ("table6_severe_tfp_" + econ + ".csv"));
      es["severe_tfp"] = summary_json(r);
    }

    if (sc.business_cycle) {
      if (!cov) {
        log << "business-cycle experiment skipped: no tfp_covariance.json\n";
        es["business_cycle"] = {{"skipped", "no TFP covariance"}};
      } else {
        log << "business-cycle experiment (" << econ << "), " << sc.n_draws << " draws\n";
        const auto r = business_cycle_experiment(models, *cov, sc.n_draws, c.seed, xo);
        tally(r);
        std::vector<std::string> h = {"code", "label"};
        for (auto& x : pct_columns(r, "_pct")) h.push_back(x);
        if (has_pair) h.push_back("difference_pct");
        std::vector<std::size_t> order(eco.n_sectors());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        if (has_pair) {
          const auto a = r.calibration_index("main"), b = r.calibration_index("uniform");
          const Vector d = r.mean_dlogP[a] - r.mean_dlogP[b];
          std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
            return d[static_cast<Eigen::Index>(x)] > d[static_cast<Eigen::Index>(y)];
          });
        }
        CsvOut t5(c, h);
        for (std::size_t i : order) {
          const auto k = static_cast<Eigen::Index>(i);
          std::vector<std::string> row = {eco.codes()[i], eco.labels()[i]};
          for (std::size_t cc = 0; cc < models.size(); ++cc) row.push_back(pct(r.mean_dlogP[cc][k]));
          if (has_pair)
            row.push_back(pct(r.mean_dlogP[r.calibration_index("main")][k] - r.mean_dlogP[r.calibration_index("uniform")][k]));
          t5.row(row);
        }
        t5.write(dir / ("table5_price_response_" + econ + ".csv"));

        CsvOut t7(c, {"calibration", "n", "mean_pct", "sd_pct", "skewness", "dropped"});
        for (std::size_t cc = 0; cc < models.size(); ++cc) {
          const auto& st = r.gdp_stats[cc];
          t7.row({r.calibrations[cc], std::to_string(st.n), pct(st.mean), pct(st.sd), format_double(st.skewness),
                  std::to_string(r.dropped_draws.size())});
        }
        t7.write(dir / ("table7_business_cycle_" + econ + ".csv"));

        const Histogram hist = gdp_histogram(r, sc.histogram_bins);
        std::vector<std::string> hh = {"bin_lo_pct", "bin_hi_pct"};
        for (const auto& cal : r.calibrations) hh.push_back("count_" + cal);
        CsvOut th(c, hh);
        for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
          std::vector<std::string> row = {pct(hist.edges[b]), pct(hist.edges[b + 1])};
          for (const auto& counts : hist.counts) row.push_back(std::to_string(counts[b]));
          th.row(row);
        }
        th.write(dir / ("histogram_" + econ + ".csv"));
        es["business_cycle"] = summary_json(r);
      }
    }
    summary[econ] = es;
  }
  write_json(dir / "simulation.json",
             {{"economies", summary}, {"attempted", attempted}, {"succeeded", succeeded}}, c);
  log << "simulate: " << succeeded << " of " << attempted << " scenario solves succeeded\n";
  if (attempted > 0 && succeeded == 0) return kExitSolver;
  return kExitOk;
}

int cmd_report(const RunOptions& options, std::ostream& log) {
  const RunConfig& c = options.config;
  const fs::path dir = out_dir(c);
  if (!fs::exists(dir / "simulation.json")) throw DataError("missing input file " + (dir / "simulation.json").string());

  // First-order responses of the main calibration to one-sector TFP shocks
  // of the severe-shock magnitude.
  const std::string cal = std::count(c.scenarios.calibrations.begin(), c.scenarios.calibrations.end(), "main")
                              ? "main"
                              : c.scenarios.calibrations.front();
  for (const auto& econ : economies(options)) {
    const CalibratedModel m = model_from_json(read_json(model_path(c, cal, econ)));
    const auto base = base_equilibrium(m);
    const auto n = static_cast<Eigen::Index>(m.size());
    const double dz = std::log1p(c.scenarios.severe_tfp_magnitude);
    CsvOut t(c, {"shocked_code", "code", "dlogP", "dlogW", "dlambda"});
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector z = Vector::Zero(n);
      z[i] = dz;
      const auto fo = first_order_response(m, base, z, Vector::Zero(n), 0.0);
      for (Eigen::Index j = 0; j < n; ++j)
        t.row({m.economy.codes()[static_cast<std::size_t>(i)], m.economy.codes()[static_cast<std::size_t>(j)],
               format_double(fo.dlogP[j]), format_double(fo.dlogW[j]), format_double(fo.dlambda[j])});
    }
    t.write(dir / ("first_order_" + econ + ".csv"));
  }

  // Plain-text rendering of every table CSV in the output directory.
  std::vector<fs::path> tables;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("table", 0) == 0 && e.path().extension() == ".csv") tables.push_back(e.path());
  }
  std::sort(tables.begin(), tables.end());
  std::ostringstream out;
  out << provenance_line(c) << "\n";
  for (const auto& p : tables) {
    const CsvTable t = read_csv(p);
    std::vector<std::size_t> width(t.header.size());
    for (std::size_t k = 0; k < t.header.size(); ++k) width[k] = t.header[k].size();
    for (const auto& row : t.rows)
      for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], std::min<std::size_t>(row[k].size(), 48));
    out << "\n== " << p.stem().string() << " ==\n";
    auto line = [&](const std::vector<std::string>& row) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        std::string cell = row[k].size() > 48 ? row[k].substr(0, 45) + "..." : row[k];
        out << std::left << std::setw(static_cast<int>(width[k]) + 2) << cell;
      }
      out << "\n";
    };
    line(t.header);
    for (const auto& row : t.rows) line(row);
  }
  const Json sim = read_json(dir / "simulation.json");
  out << "\nscenario solves: " << sim.value("succeeded", 0) << " of " << sim.value("attempted", 0) << " succeeded\n";
  write_file_atomic(dir / "report.txt", out.str());
  log << out.str();
  return kExitOk;
}

int run_command(const std::string& name, const RunOptions& options, std::ostream& log) {
  try {
    if (name == "ingest") return cmd_ingest(options, log);
    if (name == "estimate") return cmd_estimate(options, log);
    if (name == "calibrate") return cmd_calibrate(options, log);
    if (name == "simulate") return cmd_simulate(options, log);
    if (name == "report") return cmd_report(options, log);
    log << "unknown command " << name << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    log << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const TransportError& e) {
    log << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const EstimationError& e) {
    log << "estimation error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const SingularityError& e) {
    log << "estimation error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const SolverError& e) {
    log << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const InvertibilityError& e) {
    log << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace prodnet
