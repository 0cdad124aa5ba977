#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "codesign/cost.hpp"
#include "codesign/model.hpp"

namespace codesign {

/// Simultaneous-perturbation stochastic approximation settings.
///
/// Gains follow a_k = a0 / (A + k + 1)^alpha_exp and c_k = c0 / (k + 1)^gamma_exp.
/// Non-positive `a0`, `c0` and negative `A` request the automatic choices
/// made by `resolve_spsa_defaults`.
struct SpsaConfig {
  std::size_t iterations = 3000;
  double a0 = 0.0;
  double c0 = 0.0;
  double A = -1.0;
  double alpha_exp = 0.602;
  double gamma_exp = 0.101;
  double box_lo = NAN;
  double box_hi = NAN;
  std::uint64_t seed = 1;
  std::size_t restarts = 2;
  /// Size of the first step per coordinate used to calibrate a0.
  double initial_step = 0.5;
  std::size_t calibration_samples = 8;
  /// Factor applied to `initial_step` for each further restart.
  double restart_step_decay = 0.5;
};

/// Fills c0 = 0.1 mean(sigma), box = [min mu - 5 max sigma, max mu + 5 max sigma]
/// and A = 10% of iterations where they were left unset.
SpsaConfig resolve_spsa_defaults(SpsaConfig config, const PriceModel& price);
ValidationReport validate_spsa(const SpsaConfig& config);

struct SpsaResult {
  std::vector<double> x;
  double cost = INFINITY;
  std::size_t evaluations = 0;
  std::size_t best_restart = 0;
  /// Best cost seen after each iteration, across all restarts in order.
  std::vector<double> trace;
  /// One entry per aborted restart.
  std::vector<std::string> aborted;
};

using Objective = std::function<double(std::span<const double>)>;

/// Minimizes `objective` over the box starting at `x0`. Each restart starts
/// from the best point found so far with a fresh gain schedule, gains scaled
/// by `restart_step_decay` per restart, and its own derived seed. Returns the
/// best iterate seen, not the last one.
///
/// A NaN or -inf value aborts the current restart; +inf marks a rejected point
/// (the update is skipped, or the step reverted).
SpsaResult spsa_minimize(const Objective& objective, std::span<const double> x0,
                         const SpsaConfig& config);

/// Central differences with step `h`, for checking SPSA gradient estimates.
std::vector<double> central_difference_gradient(const Objective& objective,
                                                std::span<const double> x, double h);

/// Maps a tank size to chain geometry.
struct GeometryRule {
  enum class Kind {
    /// n_p = tau_max - 1 and n_s = n - tau_max.
    max_demand_level,
    /// n_p = reserve_volume / delta_x and n_s = n - headroom_volume / delta_x.
    explicit_volumes,
  };

  Kind kind = Kind::max_demand_level;
  double delta_x = 1.0;
  int zeta = 1;
  double reserve_volume = 0.0;
  double headroom_volume = 0.0;
  double penalty_volume = 0.0;
  /// Round V down to the grid instead of requiring a multiple of delta_x.
  bool floor_volume = false;

  ChainSpec build(double V, const QuantizedDemandModel& demand) const;
};

enum class PolicyShape {
  /// One threshold per (volume, phase) in the band.
  state_dependent,
  /// A single threshold shared by every band state and phase.
  scalar,
};

enum class StationaryMethod {
  numeric,
  /// Closed form for the single-phase constant-demand geometry.
  closed_form_example1,
};

struct OptimizeOptions {
  PolicyShape shape = PolicyShape::state_dependent;
  StationaryMethod method = StationaryMethod::numeric;
  SpsaConfig spsa;
};

struct TankPolicyResult {
  double volume = 0.0;
  ChainSpec spec;
  ThresholdPolicy policy;
  CostBreakdown operating;
  SpsaResult spsa;
};

/// Expected cost per interval of `policy`, or +inf when the chain it induces
/// is reducible.
double policy_objective(const ThresholdPolicy& policy, const QuantizedDemandModel& demand,
                        const PriceModel& price, const ChainSpec& spec, const CostParams& params,
                        StationaryMethod method);

TankPolicyResult optimize_policy_for_tank(double V, const QuantizedDemandModel& demand,
                                          const PriceModel& price, const GeometryRule& rule,
                                          const CostParams& params,
                                          const OptimizeOptions& options);

struct CandidateResult {
  double volume = 0.0;
  bool ok = false;
  std::string error;
  ChainSpec spec;
  ThresholdPolicy policy;
  CostBreakdown operating;
  double capital = 0.0;
  double operating_N = 0.0;
  double total = INFINITY;
  std::size_t evaluations = 0;
};

struct CoDesignResult {
  double best_V = 0.0;
  std::size_t best_index = 0;
  ChainSpec best_spec;
  ThresholdPolicy best_policy;
  double J_star = INFINITY;
  std::vector<CandidateResult> per_candidate;
};

/// Optimizes the policy for every candidate tank size and returns the one with
/// the lowest capital-plus-operating cost. Ties within 1e-9 relative go to the
/// smaller tank. `threads` = 0 uses the hardware concurrency; results do not
/// depend on the thread count.
CoDesignResult codesign_sweep(std::span<const double> candidates,
                              const QuantizedDemandModel& demand, const PriceModel& price,
                              const GeometryRule& rule, const CostParams& params, std::uint64_t N,
                              const OptimizeOptions& options, unsigned threads = 1);

/// Runs `task(k)` for k in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace codesign
