#pragma once

// Supply/Use/Import tables to expenditure shares, import ratios, estimation
// panels, base-year snapshots and the TFP shock covariance.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "prodnet/economy.hpp"
#include "prodnet/panel.hpp"

namespace prodnet {

/// Row and column codes with special meaning in the use table.
struct TableCodes {
  std::string labor = "V001";    ///< compensation of employees (commodity column of use.csv)
  std::string pce = "F010";      ///< personal consumption (industry column of use.csv)
  std::string exports = "F040";  ///< exports (industry column of use.csv)

  bool operator==(const TableCodes&) const = default;
};

/// Long-format records as they appear in the CSV fixtures.
struct SupplyRecord {
  int year;
  std::string commodity, industry;
  double value;
};
struct UseRecord {
  int year;
  std::string industry, commodity;
  double value;
};
struct ImportRecord {
  int year;
  std::string commodity;
  double value;
};
struct PriceRecord {
  int year;
  std::string industry;
  double index;
};
struct RawTables {
  std::vector<SupplyRecord> supply;
  std::vector<UseRecord> use;
  std::vector<ImportRecord> imports;
  std::vector<PriceRecord> prices;
};

struct SupplyUseTables {
  std::vector<int> years;                 ///< ascending
  std::vector<std::string> industries;    ///< N codes, in first-appearance order of supply.csv
  std::vector<std::string> commodities;   ///< C codes
  std::map<int, Matrix> S;                ///< C x N supply
  std::map<int, Matrix> U;                ///< N x C intermediate use
  std::map<int, Vector> imports;          ///< C
  std::map<int, Vector> labor;            ///< N compensation
  std::map<int, Vector> pce;              ///< C personal consumption
  std::map<int, Vector> exports;          ///< C
  std::map<int, Vector> price_index;      ///< N gross-output price index
  std::vector<std::string> warnings;

  std::size_t n_industries() const { return industries.size(); }
  bool operator==(const SupplyUseTables& o) const;
};

/// Builds dense year-indexed tables. Negative cells are clamped to 0 with a
/// warning; a year present in supply (or listed in required_years) but missing
/// from a table is a ParseError naming the year and table.
SupplyUseTables assemble_tables(const RawTables& raw, const TableCodes& codes = {},
                                const std::vector<int>& required_years = {});

/// Reads supply.csv, use.csv, imports.csv and prices.csv from `dir`. A missing
/// file raises DataError naming it.
RawTables read_fixture_csv(const std::filesystem::path& dir);
SupplyUseTables load_fixture_tables(const std::filesystem::path& dir, const TableCodes& codes = {},
                                    const std::vector<int>& required_years = {});

/// Optional sectors.csv (code, label, ...). Returns an empty map when absent.
std::map<std::string, std::string> load_sector_labels(const std::filesystem::path& dir);

/// Omega_ij = sum_c U_ic S_cj / sum_k S_ck, rows normalized to 1. Rows without
/// intermediate spending are left at zero.
Matrix compute_expenditure_shares(const SupplyUseTables& tables, int year);

/// Domestic share per input j: 1 - sum_c (Imp_c / sum_k S_ck)(S_cj / sum_k S_ck),
/// clamped to [0, 1].
Vector compute_import_ratios(const SupplyUseTables& tables, int year);

/// Sector j is tradeable when its mean import share (1 - Phi_jt) exceeds the threshold.
std::vector<bool> classify_tradeable(const std::vector<Vector>& phi_by_year, double threshold = 0.25);

enum class PanelShare { total_use, domestic };

struct PanelOptions {
  double min_avg_share = 0.01;
  double tradeable_threshold = 0.25;
  PanelShare share = PanelShare::total_use;
};

struct FilterReport {
  std::size_t candidates = 0;         ///< N*N*(year pairs)
  std::size_t dropped_share = 0;      ///< below min_avg_share
  std::size_t dropped_nonfinite = 0;  ///< log of zero or negative
  std::size_t kept = 0;
  std::size_t pairs_kept = 0;
  std::vector<bool> tradeable;
};

struct PanelBuild {
  Panel panel;
  FilterReport report;
};

/// Year-over-year log-changes for consecutive years. Non-tradeable inputs get
/// Phi = 1 and hence dlog_phi = 0.
PanelBuild build_panel(const SupplyUseTables& tables, const PanelOptions& options = {});

/// Household consumption-share changes (i = 0) over domestic goods.
PanelBuild build_household_panel(const SupplyUseTables& tables, const PanelOptions& options = {});

/// Base-year snapshot: shares from the tables, Phi common across purchasers
/// and 1 for non-tradeables, lambda and nx relative to total consumption.
IOSnapshot assemble_snapshot(const SupplyUseTables& tables, int year, const std::vector<bool>& tradeable);

/// Panel export with columns i_code, j_code, t, dlog_omega, dlog_p, dlog_phi,
/// preceded by a "# comment" line when `comment` is non-empty.
void write_panel_csv(const Panel& panel, const std::vector<std::string>& codes, const std::filesystem::path& path,
                     const std::string& comment = "");
Panel read_panel_csv(const std::filesystem::path& path, const std::vector<std::string>& codes);

struct TfpPanel {
  std::vector<int> years;
  std::vector<std::string> industries;
  Matrix log_tfp;  ///< years x industries
};

/// tfp.csv = (year, industry, log_tfp). Every (year, industry) must be present.
TfpPanel load_tfp_panel(const std::filesystem::path& path);

struct TFPCovariance {
  Matrix cov;
  std::size_t n_differences = 0;
  double clipped = 0.0;  ///< most negative eigenvalue removed by clipping
};

/// Covariance of horizon-year log-TFP differences (overlapping windows by
/// default), symmetrized and eigenvalue-clipped at 0. Throws DataError when
/// fewer than two differences are available.
TFPCovariance tfp_covariance(const TfpPanel& panel, int horizon_years = 4, bool overlapping = true);

}  // namespace prodnet
