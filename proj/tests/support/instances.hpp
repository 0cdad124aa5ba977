#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "codesign/model.hpp"
#include "codesign/optimize.hpp"

namespace fixtures {

inline constexpr std::uint64_t kHorizon = 175200;  // 20 years of hourly intervals
inline constexpr double kUnitCapital = 10000.0;

/// Constant demand of one unit per interval.
inline codesign::QuantizedDemandModel unit_demand() {
  return {1.0, 1, {{0.0, 1.0}}};
}

/// Demand 0.8..1.2 in steps of 0.1, uniformly, on a 0.1 grid.
inline codesign::QuantizedDemandModel spread_demand() {
  codesign::QuantizedDemandModel d{0.1, 1, {std::vector<double>(13, 0.0)}};
  for (int t = 8; t <= 12; ++t) d.probs[0][static_cast<std::size_t>(t)] = 0.2;
  return d;
}

inline codesign::PriceModel price(double mu = 20.0, double sigma = 10.0) {
  return codesign::PriceModel::constant(1, mu, sigma);
}

inline codesign::CostParams params(double unit_capital = kUnitCapital) {
  return {1.0, 0.0, codesign::CapitalCost::per_unit(unit_capital)};
}

/// Single-phase constant-demand geometry: n = V, enforced pumping only when
/// empty, pump delivers two units.
inline codesign::ChainSpec unit_spec(int V) { return {V, 0, V - 1, 0, 2, 1.0, 1}; }

inline codesign::GeometryRule unit_rule() {
  codesign::GeometryRule r;
  r.delta_x = 1.0;
  r.zeta = 2;
  return r;
}

inline codesign::GeometryRule spread_rule() {
  codesign::GeometryRule r;
  r.delta_x = 0.1;
  r.zeta = 20;
  return r;
}

struct RandomInstance {
  codesign::QuantizedDemandModel demand;
  codesign::PriceModel price;
  codesign::ChainSpec spec;
  codesign::ThresholdPolicy policy;
};

/// A valid instance with random probabilities, prices, geometry and
/// thresholds. Sizes stay small enough for dense reference computations.
inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_T = 3,
                                      std::size_t max_m = 4, int max_slack = 0) {
  std::uniform_int_distribution<std::size_t> pick_T(1, max_T), pick_m(2, max_m);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomInstance r;
  const std::size_t T = pick_T(rng);
  const std::size_t m = pick_m(rng);
  r.demand.quantum_d = 0.5;
  r.demand.period_T = T;
  r.demand.probs.assign(T, std::vector<double>(m, 0.0));
  for (auto& row : r.demand.probs) {
    double total = 0.0;
    for (auto& a : row) total += (a = u(rng) < 0.25 ? 0.0 : u(rng));
    if (total == 0.0) row[m - 1] = total = 1.0;
    for (auto& a : row) a /= total;
  }
  // Guarantee the largest level is present so tau_max = m - 1 in some phase.
  if (r.demand.max_level() + 1 < m) {
    r.demand.probs[0][m - 1] += 0.1;
    for (auto& a : r.demand.probs[0]) a /= 1.1;
  }
  r.price.period_T = T;
  for (std::size_t k = 0; k < T; ++k) {
    r.price.mean.push_back(10.0 + 20.0 * u(rng));
    r.price.std.push_back(2.0 + 8.0 * u(rng));
  }
  const int tau_max = static_cast<int>(r.demand.max_level());
  const int tau_min = static_cast<int>(r.demand.min_level());
  std::uniform_int_distribution<int> pick_zeta(std::max(1, tau_max), tau_max + 3);
  r.spec.zeta = pick_zeta(rng);
  r.spec.n_p = std::max(0, tau_max - 1) + std::uniform_int_distribution<int>(0, 1)(rng);
  const int band = std::uniform_int_distribution<int>(1, 4)(rng);
  r.spec.n_s = r.spec.n_p + band;
  // Smallest tank that passes the overflow guard. Slack above it leaves
  // levels that can never be reached.
  r.spec.n = std::max(r.spec.n_s + 1, r.spec.n_s + r.spec.zeta - tau_min) +
             std::uniform_int_distribution<int>(0, max_slack)(rng);
  r.spec.n_r = std::uniform_int_distribution<int>(0, r.spec.n_p)(rng);
  r.spec.delta_x = 0.5;
  r.spec.period_T = T;
  std::vector<std::vector<double>> thresholds(T, std::vector<double>(static_cast<std::size_t>(band)));
  for (std::size_t k = 0; k < T; ++k)
    for (auto& a : thresholds[k]) a = r.price.mean[k] + r.price.std[k] * (4.0 * u(rng) - 2.0);
  r.policy = codesign::ThresholdPolicy(r.spec.n_p, r.spec.n_s, thresholds);
  return r;
}

}  // namespace fixtures
