#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "codesign/model.hpp"
#include "codesign/optimize.hpp"
#include "codesign/sensitivity.hpp"

namespace codesign::cli {

struct NpvSettings {
  std::uint64_t K = 8760;
  double beta = 0.0;
  double xi = 0.0;
};

struct SimulationTask {
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> N_grid;
  /// Empty means {0, n}.
  std::vector<int> x0s;
  double tolerance = 0.01;
};

/// Grids left unset default to the baseline price scaled by {1, 1.2, 0.8} in
/// the mean and {1, 2, 0.5} in the deviation; an empty grid skips the study.
struct SensitivityTask {
  std::optional<std::vector<PricePoint>> fixed_grid;
  std::optional<std::vector<PricePoint>> assumed_grid;
  /// Empty means the task candidates.
  std::vector<double> candidates;
};

struct SurfaceTask {
  std::vector<double> volumes;
  std::vector<double> alphas;
};

struct FitTask {
  std::filesystem::path demand_csv;
  std::filesystem::path price_csv;
  double interval_seconds = 3600.0;
  double quantum_d = 0.0;
  std::size_t period_T = 1;
  double extreme_cutoff = INFINITY;
};

/// One run: the instance plus every task parameter, as read from a JSON
/// document. Relative paths resolve against the document's directory.
struct RunConfig {
  nlohmann::json source;
  std::filesystem::path base_dir;

  std::optional<QuantizedDemandModel> demand;
  std::optional<PriceModel> price;
  /// Either given directly or derived from a fixed `chain_spec`.
  GeometryRule geometry;
  CostParams params;

  std::optional<double> volume;
  std::vector<double> candidates;
  std::uint64_t N = 0;
  std::optional<NpvSettings> npv;
  std::optional<nlohmann::json> policy;
  OptimizeOptions optimize;
  std::uint64_t seed = 1;

  SimulationTask simulation;
  SensitivityTask sensitivity;
  SurfaceTask surface;
  std::optional<FitTask> fit;

  const QuantizedDemandModel& require_demand() const;
  const PriceModel& require_price() const;
  double require_volume() const;
  /// Chain geometry for tank size `V`.
  ChainSpec spec_for(double V) const;
};

/// Values from `from` to `to` inclusive, rounded to nine decimals so that a
/// grid like 9.0, 9.1, ... prints cleanly.
std::vector<double> make_range(double from, double to, double step);

/// Parses the document; `base_dir` anchors relative file paths.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace codesign::cli
