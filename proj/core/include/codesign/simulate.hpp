#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "codesign/model.hpp"

namespace codesign {

struct SimOptions {
  /// Count one-step transitions between flat states (dense, size^2).
  bool record_transitions = false;
  /// When set, one CSV row `k,kappa,i,price,demand_tau,pumped,cost` per step.
  std::ostream* trajectory = nullptr;
};

struct SimResult {
  /// Time-average realized cost per interval.
  double W_N = 0.0;
  double total_cost = 0.0;
  std::vector<std::uint64_t> visit_counts;
  std::uint64_t enforced_events = 0;
  std::uint64_t pump_events = 0;
  /// Steps where demand exceeded the stored volume and the tank hit empty.
  std::uint64_t empty_events = 0;
  /// Mean volume (i * delta_x) observed in each phase.
  std::vector<double> phase_mean_volume;
  std::vector<std::uint64_t> transition_counts;
  std::uint64_t seed = 0;
  std::uint64_t N = 0;
  int x0 = 0;
};

/// Closed-loop Monte Carlo run from volume index `x0` at phase 0. Prices and
/// demands come from two streams derived from `seed`.
SimResult simulate(const ThresholdPolicy& policy, const QuantizedDemandModel& demand,
                   const PriceModel& price, const ChainSpec& spec, const CostParams& params,
                   std::uint64_t N, int x0, std::uint64_t seed, const SimOptions& options = {});

struct ConvergenceRow {
  std::uint64_t seed = 0;
  std::uint64_t N = 0;
  int x0 = 0;
  double W_N = 0.0;
  double rel_error = 0.0;
};

struct ConvergenceReport {
  double expected_per_interval = 0.0;
  std::vector<ConvergenceRow> rows;
};

/// |W_N - expected| / expected for every (seed, N, x0); `x0s` defaults to
/// {0, n}.
ConvergenceReport convergence_report(const ThresholdPolicy& policy,
                                     const QuantizedDemandModel& demand, const PriceModel& price,
                                     const ChainSpec& spec, const CostParams& params,
                                     std::span<const std::uint64_t> seeds,
                                     std::span<const std::uint64_t> N_grid,
                                     std::span<const int> x0s = {}, unsigned threads = 1);

}  // namespace codesign
