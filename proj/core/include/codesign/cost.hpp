#pragma once

#include <cstdint>

#include "codesign/chain.hpp"
#include "codesign/model.hpp"

namespace codesign {

/// Long-run expected operating cost per interval, split by regime.
struct CostBreakdown {
  double enforced = 0.0;
  double threshold = 0.0;
  double penalty = 0.0;
  double total_per_interval = 0.0;
};

/// E[r | r <= alpha] for r ~ N(mu, sigma^2).
double truncated_mean(double alpha, double mu, double sigma);

/// Expected cost per interval while in state (i, kappa).
double expected_state_cost(int i, std::size_t kappa, const ThresholdPolicy& policy,
                           const PriceModel& price, const ChainSpec& spec,
                           const CostParams& params);

CostBreakdown expected_operating_cost(const StationaryDistribution& pi,
                                      const ThresholdPolicy& policy, const PriceModel& price,
                                      const ChainSpec& spec, const CostParams& params);

/// Everything computed on the way to a co-design cost.
struct DesignEvaluation {
  double volume = 0.0;
  double capital = 0.0;
  CostBreakdown operating;
  double operating_N = 0.0;
  double total = 0.0;
  StationaryDistribution pi;
};

/// Builds the chain, solves for the stationary distribution and prices the
/// design over `N` intervals. `V` prices the capital and must round down to
/// `spec.n` cells.
DesignEvaluation evaluate_design(double V, const ThresholdPolicy& policy, const PriceModel& price,
                                 const QuantizedDemandModel& demand, const ChainSpec& spec,
                                 const CostParams& params, std::uint64_t N);

/// c_t(V) + N * expected operating cost per interval.
double total_codesign_cost(double V, const ThresholdPolicy& policy, const PriceModel& price,
                           const QuantizedDemandModel& demand, const ChainSpec& spec,
                           const CostParams& params, std::uint64_t N);

/// Net present value with `K` intervals per year, annual inflation `beta` on
/// energy and discount rate `xi`.
double npv_codesign_cost(double V, const ThresholdPolicy& policy, const PriceModel& price,
                         const QuantizedDemandModel& demand, const ChainSpec& spec,
                         const CostParams& params, std::uint64_t N, std::uint64_t K, double beta,
                         double xi);

/// Same, from an already computed per-interval cost.
double npv_from_operating(double capital, double per_interval, std::uint64_t N, std::uint64_t K,
                          double beta, double xi);

}  // namespace codesign
