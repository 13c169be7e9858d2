#include "prodnet/config.hpp"

#include <cstdio>
#include <set>

#include "prodnet/errors.hpp"
#include "prodnet/fileio.hpp"

namespace prodnet {

namespace {

// Reads known keys from one JSON object and rejects the rest.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError("config " + (path_.empty() ? "root" : path_) + " must be an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    const Json* v = find(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const Json::exception&) {
      throw ParseError("config key '" + path_ + key + "' has the wrong type");
    }
  }

  void get(const std::string& key, std::optional<double>& out) {
    const Json* v = find(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
    } else if (v->is_number()) {
      out = v->get<double>();
    } else {
      throw ParseError("config key '" + path_ + key + "' has the wrong type");
    }
  }

  Section sub(const std::string& key) {
    static const Json empty = Json::object();
    const Json* v = find(key);
    return Section(v ? *v : empty, path_ + key + ".");
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ParseError("unknown config key '" + path_ + item.key() + "'");
  }

 private:
  const Json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json opt(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

Json table_json(const BeaTableRequest& t) {
  return {{"dataset", t.dataset},         {"parameters", t.parameters}, {"row_field", t.row_field},
          {"column_field", t.column_field}, {"value_field", t.value_field}, {"year_field", t.year_field}};
}

void read_table(Section s, BeaTableRequest& t) {
  s.get("dataset", t.dataset);
  s.get("parameters", t.parameters);
  s.get("row_field", t.row_field);
  s.get("column_field", t.column_field);
  s.get("value_field", t.value_field);
  s.get("year_field", t.year_field);
  s.finish();
}

void check_one_of(const std::string& key, const std::string& v, const std::set<std::string>& allowed) {
  if (!allowed.count(v)) throw ParseError("config key '" + key + "' has invalid value '" + v + "'");
}

}  // namespace

BeaConfig default_bea_config() {
  BeaConfig c;
  c.supply = {"InputOutput", {{"TableID", "262"}}};
  c.use = {"InputOutput", {{"TableID", "259"}}};
  c.prices = {"GDPbyIndustry", {{"TableID", "11"}, {"Frequency", "A"}, {"Industry", "ALL"}}, "Industry", "",
              "DataValue", "Year"};
  return c;
}

Json to_json(const RunConfig& c) {
  const auto& b = c.bea;
  const auto& s = c.scenarios;
  const auto& e = c.elasticities;
  return {{"source", c.source},
          {"fixtures", c.fixtures},
          {"cache_dir", c.cache_dir},
          {"tfp_file", c.tfp_file},
          {"bea",
           {{"base_url", b.base_url},
            {"api_key_env", b.api_key_env},
            {"supply", table_json(b.supply)},
            {"use", table_json(b.use)},
            {"prices", table_json(b.prices)},
            {"imports_column", b.imports_column},
            {"exclude_prefixes", b.exclude_prefixes}}},
          {"codes", {{"labor", b.codes.labor}, {"pce", b.codes.pce}, {"exports", b.codes.exports}}},
          {"years", c.years},
          {"base_year", c.base_year},
          {"tradeable_threshold", c.tradeable_threshold},
          {"min_avg_share", c.min_avg_share},
          {"panel_share", c.panel_share},
          {"estimation",
           {{"modes", c.estimation.modes},
            {"household", c.estimation.household},
            {"workers", c.estimation.workers},
            {"xi_upper", c.estimation.xi_upper}}},
          {"elasticities",
           {{"sigma", e.sigma}, {"theta", opt(e.theta)}, {"xi", opt(e.xi)}, {"nu", opt(e.nu)},
            {"xi_export", opt(e.xi_export)}}},
          {"scenarios",
           {{"foreign_price", s.foreign_price},
            {"foreign_price_magnitude", s.foreign_price_magnitude},
            {"top_k", s.top_k},
            {"severe_tfp", s.severe_tfp},
            {"severe_tfp_magnitude", s.severe_tfp_magnitude},
            {"business_cycle", s.business_cycle},
            {"n_draws", s.n_draws},
            {"tfp_horizon", s.tfp_horizon},
            {"overlapping_windows", s.overlapping_windows},
            {"histogram_bins", s.histogram_bins},
            {"calibrations", s.calibrations},
            {"economies", s.economies},
            {"workers", s.workers}}},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

RunConfig config_from_json(const Json& j) {
  RunConfig c;
  c.bea = default_bea_config();
  Section root(j, "");
  root.get("source", c.source);
  root.get("fixtures", c.fixtures);
  root.get("cache_dir", c.cache_dir);
  root.get("tfp_file", c.tfp_file);
  {
    Section b = root.sub("bea");
    b.get("base_url", c.bea.base_url);
    b.get("api_key_env", c.bea.api_key_env);
    read_table(b.sub("supply"), c.bea.supply);
    read_table(b.sub("use"), c.bea.use);
    read_table(b.sub("prices"), c.bea.prices);
    b.get("imports_column", c.bea.imports_column);
    b.get("exclude_prefixes", c.bea.exclude_prefixes);
    b.finish();
  }
  {
    Section s = root.sub("codes");
    s.get("labor", c.bea.codes.labor);
    s.get("pce", c.bea.codes.pce);
    s.get("exports", c.bea.codes.exports);
    s.finish();
  }
  root.get("years", c.years);
  root.get("base_year", c.base_year);
  root.get("tradeable_threshold", c.tradeable_threshold);
  root.get("min_avg_share", c.min_avg_share);
  root.get("panel_share", c.panel_share);
  {
    Section s = root.sub("estimation");
    s.get("modes", c.estimation.modes);
    s.get("household", c.estimation.household);
    s.get("workers", c.estimation.workers);
    s.get("xi_upper", c.estimation.xi_upper);
    s.finish();
  }
  {
    Section s = root.sub("elasticities");
    s.get("sigma", c.elasticities.sigma);
    s.get("theta", c.elasticities.theta);
    s.get("xi", c.elasticities.xi);
    s.get("nu", c.elasticities.nu);
    s.get("xi_export", c.elasticities.xi_export);
    s.finish();
  }
  {
    auto& sc = c.scenarios;
    Section s = root.sub("scenarios");
    s.get("foreign_price", sc.foreign_price);
    s.get("foreign_price_magnitude", sc.foreign_price_magnitude);
    s.get("top_k", sc.top_k);
    s.get("severe_tfp", sc.severe_tfp);
    s.get("severe_tfp_magnitude", sc.severe_tfp_magnitude);
    s.get("business_cycle", sc.business_cycle);
    s.get("n_draws", sc.n_draws);
    s.get("tfp_horizon", sc.tfp_horizon);
    s.get("overlapping_windows", sc.overlapping_windows);
    s.get("histogram_bins", sc.histogram_bins);
    s.get("calibrations", sc.calibrations);
    s.get("economies", sc.economies);
    s.get("workers", sc.workers);
    s.finish();
  }
  root.get("seed", c.seed);
  root.get("output_dir", c.output_dir);
  root.finish();

  check_one_of("source", c.source, {"fixtures", "api"});
  check_one_of("panel_share", c.panel_share, {"total_use", "domestic"});
  for (const auto& m : c.estimation.modes) {
    try {
      parse_estimation_mode(m);
    } catch (const Error&) {
      throw ParseError("config key 'estimation.modes' has invalid value '" + m + "'");
    }
  }
  for (const auto& m : c.scenarios.calibrations)
    check_one_of("scenarios.calibrations", m, {"main", "uniform", "cobb_douglas"});
  for (const auto& m : c.scenarios.economies) check_one_of("scenarios.economies", m, {"open", "closed"});
  if (!(c.tradeable_threshold >= 0.0 && c.tradeable_threshold <= 1.0))
    throw ParseError("config key 'tradeable_threshold' must lie in [0, 1]");
  if (!(c.min_avg_share >= 0.0)) throw ParseError("config key 'min_avg_share' must be nonnegative");
  if (!(c.elasticities.sigma >= 0.0)) throw ParseError("config key 'elasticities.sigma' must be nonnegative");
  if (c.scenarios.tfp_horizon < 1) throw ParseError("config key 'scenarios.tfp_horizon' must be positive");
  if (c.scenarios.histogram_bins < 1) throw ParseError("config key 'scenarios.histogram_bins' must be positive");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string config_hash(const RunConfig& c) {
  Json j = to_json(c);
  j.erase("output_dir");  // where results go does not change them
  const std::string text = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace prodnet
