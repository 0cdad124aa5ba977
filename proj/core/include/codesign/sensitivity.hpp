#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "codesign/chain.hpp"
#include "codesign/optimize.hpp"

namespace codesign {

/// Price parameters applied uniformly to every phase.
struct PricePoint {
  double mu = 0.0;
  double sigma = 1.0;
};

struct SensitivityRow {
  double mu = 0.0;
  double sigma = 0.0;
  double volume = 0.0;
  double capital = 0.0;
  double operating_N = 0.0;
  double total = 0.0;
  /// Percentage difference of the compared quantity against the baseline row:
  /// operating cost for fixed-design studies, total cost for misassumed designs.
  double diff_pct = 0.0;
  StationaryDistribution pi;
};

/// Re-prices a fixed (V, policy) design under each true price model. The
/// baseline is the design evaluated under `baseline`.
std::vector<SensitivityRow> sensitivity_fixed_design(
    const ThresholdPolicy& policy, double V, std::span<const PricePoint> true_grid,
    PricePoint baseline, const QuantizedDemandModel& demand, const ChainSpec& spec,
    const CostParams& params, std::uint64_t N);

struct MisassumedDesignRow {
  SensitivityRow row;
  CoDesignResult design;
};

/// Designs under each assumed price model, then evaluates the design under the
/// true one. The baseline is the design made with the true parameters.
std::vector<MisassumedDesignRow> sensitivity_misassumed_design(
    std::span<const PricePoint> assumed_grid, PricePoint true_params,
    std::span<const double> candidates, const QuantizedDemandModel& demand,
    const GeometryRule& rule, const CostParams& params, std::uint64_t N,
    const OptimizeOptions& options, unsigned threads = 1);

}  // namespace codesign
