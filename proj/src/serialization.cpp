#include "prodnet/serialization.hpp"

#include <cmath>
#include <limits>

#include "prodnet/errors.hpp"

namespace prodnet {

namespace {

Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double to_double(const Json& j, const std::string& field) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ParseError("field '" + field + "' is not a number");
  return j.get<double>();
}

double get_double(const Json& j, const std::string& field) { return to_double(require(j, field), field); }

template <class T>
T get_as(const Json& j, const std::string& field) {
  const Json& v = require(j, field);
  try {
    return v.get<T>();
  } catch (const Json::exception&) {
    throw ParseError("field '" + field + "' has the wrong type");
  }
}

Json bools(const std::vector<bool>& b) {
  Json a = Json::array();
  for (bool x : b) a.push_back(x);
  return a;
}

}  // namespace

const Json& require(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ParseError("expected an object holding '" + field + "'");
  const auto it = j.find(field);
  if (it == j.end()) throw ParseError("missing field '" + field + "'");
  return *it;
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(num(v[k]));
  return a;
}

Vector vector_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError("field '" + field + "' is not an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = to_double(j[k], field);
  return v;
}

Json matrix_to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_to_json(m.row(i).transpose()));
  return a;
}

Matrix matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError("field '" + field + "' is not an array of rows");
  if (j.empty()) return Matrix(0, 0);
  const auto cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != cols) throw ParseError("field '" + field + "' has ragged rows");
    m.row(static_cast<Eigen::Index>(i)) = vector_from_json(j[i], field).transpose();
  }
  return m;
}

Json to_json(const Economy& e) {
  return {{"codes", e.codes()}, {"labels", e.labels()}, {"tradeable", bools(e.tradeable())}};
}

Economy economy_from_json(const Json& j) {
  return Economy(get_as<std::vector<std::string>>(j, "codes"), get_as<std::vector<std::string>>(j, "labels"),
                 get_as<std::vector<bool>>(j, "tradeable"));
}

Json to_json(const IOSnapshot& s) {
  return {{"year", s.year},
          {"omega", matrix_to_json(s.omega)},
          {"phi", matrix_to_json(s.phi)},
          {"gamma", vector_to_json(s.gamma)},
          {"a", matrix_to_json(s.a)},
          {"a0", vector_to_json(s.a0)},
          {"lambda", vector_to_json(s.lambda)},
          {"nx", vector_to_json(s.nx)}};
}

IOSnapshot snapshot_from_json(const Json& j) {
  IOSnapshot s;
  s.year = get_as<int>(j, "year");
  s.omega = matrix_from_json(require(j, "omega"), "omega");
  s.phi = matrix_from_json(require(j, "phi"), "phi");
  s.gamma = vector_from_json(require(j, "gamma"), "gamma");
  s.a = matrix_from_json(require(j, "a"), "a");
  s.a0 = vector_from_json(require(j, "a0"), "a0");
  s.lambda = vector_from_json(require(j, "lambda"), "lambda");
  s.nx = vector_from_json(require(j, "nx"), "nx");
  return s;
}

Json to_json(const Elasticities& e) {
  return {{"sigma", e.sigma}, {"theta", vector_to_json(e.theta)}, {"xi", e.xi}, {"nu", e.nu},
          {"xi_export", e.xi_export}};
}

Elasticities elasticities_from_json(const Json& j) {
  Elasticities e;
  e.sigma = get_double(j, "sigma");
  e.theta = vector_from_json(require(j, "theta"), "theta");
  e.xi = get_double(j, "xi");
  e.nu = get_double(j, "nu");
  e.xi_export = get_double(j, "xi_export");
  e.validate();
  return e;
}

Json to_json(const CalibratedModel& m) {
  return {{"schema", "prodnet.calibrated_model"},
          {"schema_version", kModelSchemaVersion},
          {"economy", to_json(m.economy)},
          {"elasticities", to_json(m.elasticities)},
          {"gamma", vector_to_json(m.gamma)},
          {"omega", matrix_to_json(m.omega)},
          {"phi", matrix_to_json(m.phi)},
          {"beta", vector_to_json(m.beta)},
          {"labor", vector_to_json(m.labor)},
          {"phi_f", vector_to_json(m.phi_f)},
          {"base_year", m.base_year},
          {"open_economy", m.open_economy}};
}

CalibratedModel model_from_json(const Json& j) {
  if (get_as<std::string>(j, "schema") != "prodnet.calibrated_model")
    throw ParseError("not a calibrated model document");
  const int version = get_as<int>(j, "schema_version");
  if (version != kModelSchemaVersion)
    throw ParseError("unsupported calibrated model schema_version " + std::to_string(version));
  CalibratedModel m;
  m.economy = economy_from_json(require(j, "economy"));
  m.elasticities = elasticities_from_json(require(j, "elasticities"));
  m.gamma = vector_from_json(require(j, "gamma"), "gamma");
  m.omega = matrix_from_json(require(j, "omega"), "omega");
  m.phi = matrix_from_json(require(j, "phi"), "phi");
  m.beta = vector_from_json(require(j, "beta"), "beta");
  m.labor = vector_from_json(require(j, "labor"), "labor");
  m.phi_f = vector_from_json(require(j, "phi_f"), "phi_f");
  m.base_year = get_as<int>(j, "base_year");
  m.open_economy = get_as<bool>(j, "open_economy");
  const auto n = static_cast<Eigen::Index>(m.economy.n_sectors());
  if (m.gamma.size() != n || m.omega.rows() != n || m.omega.cols() != n || m.phi.rows() != n ||
      m.phi.cols() != n || m.beta.size() != n || m.labor.size() != n || m.phi_f.size() != n ||
      m.elasticities.theta.size() != n)
    throw ParseError("calibrated model arrays do not match the sector count");
  return m;
}

Json to_json(const EstimationResult& r) {
  Json starts = Json::array();
  for (const auto& s : r.starts)
    starts.push_back({{"x0", vector_to_json(s.x0)},
                      {"objective", num(s.objective)},
                      {"converged", s.converged},
                      {"evaluations", s.evaluations}});
  return {{"mode", to_string(r.mode)},
          {"theta_hat", vector_to_json(r.theta_hat)},
          {"xi_hat", num(r.xi_hat)},
          {"se_theta", vector_to_json(r.se_theta)},
          {"se_xi", num(r.se_xi)},
          {"covariance", matrix_to_json(r.covariance)},
          {"objective_value", num(r.objective_value)},
          {"n_obs", r.n_obs},
          {"n_moments", r.n_moments},
          {"n_params", r.n_params},
          {"converged", r.converged},
          {"xi_identified", r.xi_identified},
          {"variance_ok", r.variance_ok},
          {"variance_error", r.variance_error},
          {"at_bound", bools(r.at_bound)},
          {"best_start", r.best_start},
          {"starts", starts}};
}

EstimationResult estimation_from_json(const Json& j) {
  EstimationResult r;
  r.mode = parse_estimation_mode(get_as<std::string>(j, "mode"));
  r.theta_hat = vector_from_json(require(j, "theta_hat"), "theta_hat");
  r.xi_hat = get_double(j, "xi_hat");
  r.se_theta = vector_from_json(require(j, "se_theta"), "se_theta");
  r.se_xi = get_double(j, "se_xi");
  r.covariance = matrix_from_json(require(j, "covariance"), "covariance");
  r.objective_value = get_double(j, "objective_value");
  r.n_obs = get_as<std::size_t>(j, "n_obs");
  r.n_moments = get_as<std::size_t>(j, "n_moments");
  r.n_params = get_as<std::size_t>(j, "n_params");
  r.converged = get_as<bool>(j, "converged");
  r.xi_identified = get_as<bool>(j, "xi_identified");
  r.variance_ok = get_as<bool>(j, "variance_ok");
  r.variance_error = get_as<std::string>(j, "variance_error");
  r.at_bound = get_as<std::vector<bool>>(j, "at_bound");
  r.best_start = get_as<std::size_t>(j, "best_start");
  for (const auto& s : require(j, "starts")) {
    StartOutcome o;
    o.x0 = vector_from_json(require(s, "x0"), "x0");
    o.objective = get_double(s, "objective");
    o.converged = get_as<bool>(s, "converged");
    o.evaluations = get_as<int>(s, "evaluations");
    r.starts.push_back(o);
  }
  return r;
}

Json to_json(const HouseholdEstimate& h) {
  return {{"nu_hat", num(h.nu_hat)}, {"se", num(h.se)}, {"degenerate", h.degenerate},
          {"converged", h.converged}, {"n_obs", h.n_obs}};
}

HouseholdEstimate household_from_json(const Json& j) {
  HouseholdEstimate h;
  h.nu_hat = get_double(j, "nu_hat");
  h.se = get_double(j, "se");
  h.degenerate = get_as<bool>(j, "degenerate");
  h.converged = get_as<bool>(j, "converged");
  h.n_obs = get_as<std::size_t>(j, "n_obs");
  return h;
}

Json to_json(const FilterReport& r) {
  return {{"candidates", r.candidates},   {"dropped_share", r.dropped_share},
          {"dropped_nonfinite", r.dropped_nonfinite}, {"kept", r.kept},
          {"pairs_kept", r.pairs_kept},   {"tradeable", bools(r.tradeable)}};
}

Json to_json(const TFPCovariance& c) {
  return {{"cov", matrix_to_json(c.cov)}, {"n_differences", c.n_differences}, {"clipped", num(c.clipped)}};
}

TFPCovariance tfp_covariance_from_json(const Json& j) {
  TFPCovariance c;
  c.cov = matrix_from_json(require(j, "cov"), "cov");
  c.n_differences = get_as<std::size_t>(j, "n_differences");
  c.clipped = get_double(j, "clipped");
  return c;
}

Json to_json(const DistributionStats& s) {
  return {{"n", s.n}, {"mean", num(s.mean)}, {"sd", num(s.sd)}, {"skewness", num(s.skewness)}};
}

Json summary_json(const ComparisonReport& r) {
  Json stats = Json::object(), prices = Json::object();
  for (std::size_t c = 0; c < r.calibrations.size(); ++c) {
    stats[r.calibrations[c]] = to_json(r.gdp_stats[c]);
    prices[r.calibrations[c]] = vector_to_json(r.mean_dlogP[c]);
  }
  Json failures = Json::array();
  for (const auto& s : r.scenarios)
    for (std::size_t c = 0; c < s.ok.size(); ++c)
      if (!s.ok[c]) failures.push_back({{"scenario", s.label}, {"calibration", r.calibrations[c]}, {"error", s.errors[c]}});
  return {{"kind", to_string(r.kind)},
          {"magnitude", num(r.magnitude)},
          {"seed", r.seed},
          {"n_draws", r.n_draws},
          {"n_scenarios", r.scenarios.size()},
          {"calibrations", r.calibrations},
          {"sector_codes", r.sector_codes},
          {"gdp_stats", stats},
          {"mean_dlogP", prices},
          {"dropped_draws", r.dropped_draws},
          {"failures", failures}};
}

}  // namespace prodnet
