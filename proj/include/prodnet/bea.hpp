#pragma once

// BEA API client. Dataset names, table IDs and response field names are
// configuration; raw responses are cached on disk so runs reproduce offline.

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "prodnet/ingest.hpp"

namespace prodnet {

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Returns the response body; throws TransportError on failure.
  virtual std::string get(const std::string& url) = 0;
};

/// HTTPS transport backed by cpp-httplib.
std::unique_ptr<HttpTransport> make_https_transport(double timeout_seconds = 60.0);

struct BeaTableRequest {
  std::string dataset;
  std::map<std::string, std::string> parameters;  ///< e.g. TableID
  std::string row_field = "RowCode";
  std::string column_field = "ColCode";  ///< empty for single-column tables
  std::string value_field = "DataValue";
  std::string year_field = "Year";

  bool operator==(const BeaTableRequest&) const = default;
};

struct BeaConfig {
  std::string base_url = "https://apps.bea.gov/api/data";
  std::string api_key_env = "BEA_API_KEY";
  std::vector<int> years;
  BeaTableRequest supply;  ///< rows commodities, columns industries and the imports column
  BeaTableRequest use;     ///< rows commodities and the labor row, columns industries and final uses
  BeaTableRequest prices;  ///< rows industries (gross-output price index)
  std::string imports_column = "MCIF";
  std::vector<std::string> exclude_prefixes = {"T0"};  ///< totals rows/columns
  TableCodes codes;

  bool operator==(const BeaConfig&) const = default;
};

/// Request URL without the key, used for cache naming and logging.
std::string bea_request_url(const BeaConfig& config, const BeaTableRequest& table, int year,
                            const std::string& api_key);

/// Fetches (or reads from cache_dir) every configured table and year and
/// assembles SupplyUseTables. `transport` may be null for cache-only runs.
/// Missing key or transport without a cache hit raises TransportError; an
/// unexpected payload raises ParseError naming the field.
SupplyUseTables fetch_bea_tables(const BeaConfig& config, const std::filesystem::path& cache_dir,
                                 HttpTransport* transport);

/// Long-format rows extracted from one cached payload.
struct BeaRow {
  int year;
  std::string row, column;
  double value;
};
std::vector<BeaRow> parse_bea_payload(const std::string& body, const BeaTableRequest& table, int year);

}  // namespace prodnet
