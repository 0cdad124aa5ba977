#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codesign/chain.hpp"
#include "codesign/cost.hpp"
#include "codesign/model.hpp"

namespace codesign::io {

using nlohmann::json;

json to_json(const QuantizedDemandModel& demand);
json to_json(const PriceModel& price);
json to_json(const ChainSpec& spec);
json to_json(const CostParams& params);
json to_json(const ThresholdPolicy& policy);
json to_json(const CostBreakdown& cost);

QuantizedDemandModel demand_from_json(const json& j);
PriceModel price_from_json(const json& j);
ChainSpec chain_spec_from_json(const json& j);
CostParams cost_params_from_json(const json& j);
/// Accepts a matrix [T][band] or, with `spec`, a scalar applied everywhere.
ThresholdPolicy policy_from_json(const json& j, const ChainSpec& spec);

/// Model document with keys `demand`, `price`, `chain_spec`, `cost_params`.
struct ModelDocument {
  QuantizedDemandModel demand;
  PriceModel price;
  std::optional<ChainSpec> chain_spec;
  std::optional<CostParams> cost_params;
};

json to_json(const ModelDocument& doc);
ModelDocument model_from_json(const json& j);

/// Interval index of an integer timestamp or an ISO-8601 date-time
/// (`YYYY-MM-DD[T ]hh:mm[:ss][Z|+hh:mm]`), counting `interval_seconds`
/// intervals from the Unix epoch.
std::int64_t parse_interval(std::string_view timestamp, double interval_seconds);

/// Reads `timestamp,value` CSV with a header row.
std::vector<Sample> read_series_csv(std::istream& in, double interval_seconds = 3600.0);
std::vector<Sample> read_series_csv(const std::filesystem::path& path,
                                    double interval_seconds = 3600.0);

json read_json_file(const std::filesystem::path& path);

}  // namespace codesign::io
