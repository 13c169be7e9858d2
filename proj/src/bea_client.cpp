#include "prodnet/bea.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <json.hpp>
#include <set>
#include <sstream>

#include "prodnet/csv.hpp"
#include "prodnet/errors.hpp"
#include "prodnet/fileio.hpp"

namespace prodnet {

namespace {

using nlohmann::json;

class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(double timeout) : timeout_(timeout) {}

  std::string get(const std::string& url) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportError("malformed URL " + url);
    const auto path_begin = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_begin);
    const std::string target = path_begin == std::string::npos ? "/" : url.substr(path_begin);
    httplib::Client cli(origin);
    const auto secs = static_cast<time_t>(timeout_);
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    cli.set_follow_location(true);
    auto res = cli.Get(target);
    if (!res) throw TransportError("HTTP request to " + origin + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw TransportError("HTTP " + std::to_string(res->status) + " from " + origin);
    return res->body;
  }

 private:
  double timeout_;
};

std::string url_encode(const std::string& s) {
  std::ostringstream out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out << c;
    } else {
      static const char* hex = "0123456789ABCDEF";
      out << '%' << hex[c >> 4] << hex[c & 15];
    }
  }
  return out.str();
}

std::string cache_name(const BeaTableRequest& t, int year) {
  std::string name = t.dataset;
  for (const auto& [k, v] : t.parameters) name += "_" + k + "-" + v;
  name += "_" + std::to_string(year) + ".json";
  for (char& c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') c = '_';
  return name;
}

std::string field_string(const json& row, const std::string& field, const std::string& context) {
  const auto it = row.find(field);
  if (it == row.end()) throw ParseError(context + ": missing field '" + field + "'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number()) return it->dump();
  throw ParseError(context + ": field '" + field + "' has unexpected type");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

bool excluded(const std::string& code, const std::vector<std::string>& prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const std::string& p) { return !p.empty() && code.rfind(p, 0) == 0; });
}

std::string load_or_fetch(const BeaConfig& config, const BeaTableRequest& table, int year,
                          const std::filesystem::path& cache_dir, HttpTransport* transport) {
  const auto path = cache_dir / cache_name(table, year);
  if (std::filesystem::exists(path)) return read_file(path);
  const char* key = std::getenv(config.api_key_env.c_str());
  if (!transport) throw TransportError("no cached response " + path.string() + " and no network transport");
  if (!key || !*key)
    throw TransportError("no cached response " + path.string() + " and " + config.api_key_env + " is not set");
  const std::string body = transport->get(bea_request_url(config, table, year, key));
  // Validate before caching so a bad response is never persisted.
  parse_bea_payload(body, table, year);
  write_file_atomic(path, body);
  return body;
}

}  // namespace

std::unique_ptr<HttpTransport> make_https_transport(double timeout_seconds) {
  return std::make_unique<HttplibTransport>(timeout_seconds);
}

std::string bea_request_url(const BeaConfig& config, const BeaTableRequest& table, int year,
                            const std::string& api_key) {
  std::string url = config.base_url + "?UserID=" + url_encode(api_key) +
                    "&method=GetData&DataSetName=" + url_encode(table.dataset) + "&Year=" + std::to_string(year);
  for (const auto& [k, v] : table.parameters) url += "&" + url_encode(k) + "=" + url_encode(v);
  return url + "&ResultFormat=JSON";
}

std::vector<BeaRow> parse_bea_payload(const std::string& body, const BeaTableRequest& table, int year) {
  const std::string ctx = table.dataset + " " + std::to_string(year);
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(ctx + ": response is not JSON (" + e.what() + ")");
  }
  const auto api = doc.find("BEAAPI");
  if (api == doc.end()) throw ParseError(ctx + ": missing field 'BEAAPI'");
  if (api->contains("Error")) throw TransportError(ctx + ": API error " + (*api)["Error"].dump());
  const auto res = api->find("Results");
  if (res == api->end()) throw ParseError(ctx + ": missing field 'Results'");
  const json& results = res->is_array() ? (res->empty() ? json::object() : (*res)[0]) : *res;
  if (results.contains("Error")) throw TransportError(ctx + ": API error " + results["Error"].dump());
  const auto data = results.find("Data");
  if (data == results.end() || !data->is_array()) throw ParseError(ctx + ": missing field 'Data'");

  std::vector<BeaRow> rows;
  for (const auto& r : *data) {
    BeaRow row;
    row.row = trim(field_string(r, table.row_field, ctx));
    row.column = table.column_field.empty() ? "" : trim(field_string(r, table.column_field, ctx));
    row.year = year;
    if (!table.year_field.empty() && r.contains(table.year_field))
      row.year = parse_int(field_string(r, table.year_field, ctx), ctx + " field '" + table.year_field + "'");
    std::string v = field_string(r, table.value_field, ctx);
    v.erase(std::remove(v.begin(), v.end(), ','), v.end());
    v = trim(v);
    // Suppressed or not-available cells ("...", "(D)", "") count as zero.
    if (v.empty() || v.find_first_of("0123456789") == std::string::npos || v.front() == '(') {
      row.value = 0.0;
    } else {
      row.value = parse_double(v, ctx + " field '" + table.value_field + "'");
    }
    if (row.year == year) rows.push_back(row);
  }
  return rows;
}

SupplyUseTables fetch_bea_tables(const BeaConfig& config, const std::filesystem::path& cache_dir,
                                 HttpTransport* transport) {
  if (config.years.empty()) throw DataError("BEA configuration lists no years");
  std::filesystem::create_directories(cache_dir);
  std::vector<BeaRow> supply, use, prices;
  for (int y : config.years) {
    auto s = parse_bea_payload(load_or_fetch(config, config.supply, y, cache_dir, transport), config.supply, y);
    auto u = parse_bea_payload(load_or_fetch(config, config.use, y, cache_dir, transport), config.use, y);
    auto p = parse_bea_payload(load_or_fetch(config, config.prices, y, cache_dir, transport), config.prices, y);
    supply.insert(supply.end(), s.begin(), s.end());
    use.insert(use.end(), u.begin(), u.end());
    prices.insert(prices.end(), p.begin(), p.end());
  }

  const auto& codes = config.codes;
  std::set<std::string> use_rows, use_cols;
  for (const auto& r : use) {
    use_rows.insert(r.row);
    use_cols.insert(r.column);
  }
  auto is_industry = [&](const std::string& c) {
    return use_cols.count(c) && c != codes.pce && c != codes.exports && c != config.imports_column &&
           !excluded(c, config.exclude_prefixes);
  };
  auto is_commodity = [&](const std::string& c) {
    return use_rows.count(c) && c != codes.labor && !excluded(c, config.exclude_prefixes);
  };

  RawTables raw;
  for (const auto& r : supply) {
    if (!is_commodity(r.row)) continue;
    if (r.column == config.imports_column) {
      raw.imports.push_back({r.year, r.row, r.value});
    } else if (is_industry(r.column)) {
      raw.supply.push_back({r.year, r.row, r.column, r.value});
    }
  }
  std::set<std::string> industries;
  for (const auto& r : raw.supply) industries.insert(r.industry);
  for (const auto& r : use) {
    const bool row_ok = r.row == codes.labor || is_commodity(r.row);
    const bool col_ok = r.column == codes.pce || r.column == codes.exports || industries.count(r.column);
    if (row_ok && col_ok) raw.use.push_back({r.year, r.column, r.row, r.value});
  }
  for (const auto& r : prices)
    if (industries.count(r.row)) raw.prices.push_back({r.year, r.row, r.value});
  return assemble_tables(raw, codes, config.years);
}

}  // namespace prodnet
