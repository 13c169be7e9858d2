#pragma once

// JSON documents exchanged between pipeline stages. Numbers are written in
// shortest round-trip form, so a read-back reproduces every double exactly.
// Non-finite values are written as null and read back as NaN.

#include <json.hpp>

#include "prodnet/estimation.hpp"
#include "prodnet/ingest.hpp"
#include "prodnet/shocks.hpp"

namespace prodnet {

using Json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& field);
Json matrix_to_json(const Matrix& m);  ///< array of rows
Matrix matrix_from_json(const Json& j, const std::string& field);

Json to_json(const Economy& e);
Economy economy_from_json(const Json& j);

Json to_json(const IOSnapshot& s);
IOSnapshot snapshot_from_json(const Json& j);

Json to_json(const Elasticities& e);
Elasticities elasticities_from_json(const Json& j);

/// Carries "schema" and "schema_version"; reading another version is a ParseError.
Json to_json(const CalibratedModel& m);
CalibratedModel model_from_json(const Json& j);

Json to_json(const EstimationResult& r);
EstimationResult estimation_from_json(const Json& j);
Json to_json(const HouseholdEstimate& h);
HouseholdEstimate household_from_json(const Json& j);

Json to_json(const FilterReport& r);
Json to_json(const TFPCovariance& c);
TFPCovariance tfp_covariance_from_json(const Json& j);

Json to_json(const DistributionStats& s);
/// Summary only: stats, mean price responses, dropped draws and failures.
Json summary_json(const ComparisonReport& r);

/// Required-field accessor raising ParseError naming the field.
const Json& require(const Json& j, const std::string& field);

}  // namespace prodnet
