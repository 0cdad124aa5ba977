#include "codesign/simulate.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "codesign/chain.hpp"
#include "codesign/cost.hpp"
#include "codesign/error.hpp"
#include "codesign/optimize.hpp"
#include "codesign/rng.hpp"

namespace codesign {

SimResult simulate(const ThresholdPolicy& policy, const QuantizedDemandModel& demand,
                   const PriceModel& price, const ChainSpec& spec, const CostParams& params,
                   std::uint64_t N, int x0, std::uint64_t seed, const SimOptions& options) {
  require_valid(demand, price, spec);
  if (const auto pr = validate_policy(policy, spec); !pr.ok())
    throw Error(ErrorKind::dimension_mismatch, pr.summary());
  if (x0 < 0 || x0 > spec.n)
    throw Error(ErrorKind::invalid_instance, "initial volume index outside [0, n]");

  const std::size_t T = spec.period_T;
  const std::size_t states = spec.num_states();

  std::mt19937_64 price_rng(derive_seed(seed, 0));
  std::mt19937_64 demand_rng(derive_seed(seed, 1));
  std::vector<std::normal_distribution<double>> price_dist;
  std::vector<std::discrete_distribution<int>> demand_dist;
  for (std::size_t k = 0; k < T; ++k) {
    price_dist.emplace_back(price.mean[k], price.std[k]);
    demand_dist.emplace_back(demand.probs[k].begin(), demand.probs[k].end());
  }

  SimResult out;
  out.seed = seed;
  out.N = N;
  out.x0 = x0;
  out.visit_counts.assign(states, 0);
  if (options.record_transitions) out.transition_counts.assign(states * states, 0);
  std::vector<double> volume_sum(T, 0.0);
  std::vector<std::uint64_t> phase_steps(T, 0);

  if (options.trajectory) *options.trajectory << "k,kappa,i,price,demand_tau,pumped,cost\n";

  int i = x0;
  double total = 0.0;
  for (std::uint64_t k = 0; k < N; ++k) {
    const std::size_t kappa = k % T;
    const double r = price_dist[kappa](price_rng);
    const int tau = demand_dist[kappa](demand_rng);

    bool pump = false;
    if (i <= spec.n_p) {
      pump = true;
      ++out.enforced_events;
    } else if (i <= spec.n_s) {
      pump = r <= policy.at(kappa, i);
    }
    double cost = pump ? params.eps_p * r : 0.0;
    if (i <= spec.n_r) cost += params.penalty_w;
    total += cost;
    if (pump) ++out.pump_events;

    const std::size_t from = flat_index({i, kappa}, spec.n);
    ++out.visit_counts[from];
    volume_sum[kappa] += i * spec.delta_x;
    ++phase_steps[kappa];

    if (options.trajectory)
      *options.trajectory << k << ',' << kappa << ',' << i << ',' << r << ',' << tau << ','
                          << (pump ? 1 : 0) << ',' << cost << '\n';

    int next = i + (pump ? spec.zeta : 0) - tau;
    if (next < 0) {
      next = 0;
      ++out.empty_events;
    }
    if (next > spec.n) throw Error(ErrorKind::invalid_instance, "simulated volume overflowed the tank");
    if (options.record_transitions)
      ++out.transition_counts[from * states + flat_index({next, (kappa + 1) % T}, spec.n)];
    i = next;
  }

  out.total_cost = total;
  out.W_N = N > 0 ? total / static_cast<double>(N) : 0.0;
  out.phase_mean_volume.resize(T);
  for (std::size_t k = 0; k < T; ++k)
    out.phase_mean_volume[k] =
        phase_steps[k] > 0 ? volume_sum[k] / static_cast<double>(phase_steps[k]) : 0.0;
  return out;
}

ConvergenceReport convergence_report(const ThresholdPolicy& policy,
                                     const QuantizedDemandModel& demand, const PriceModel& price,
                                     const ChainSpec& spec, const CostParams& params,
                                     std::span<const std::uint64_t> seeds,
                                     std::span<const std::uint64_t> N_grid,
                                     std::span<const int> x0s, unsigned threads) {
  if (seeds.empty() || N_grid.empty())
    throw Error(ErrorKind::invalid_instance, "convergence report needs seeds and horizons");

  ConvergenceReport report;
  const auto pi = stationary(build_chain(demand, price, spec, policy));
  report.expected_per_interval = expected_operating_cost(pi, policy, price, spec, params).total_per_interval;

  std::vector<int> starts(x0s.begin(), x0s.end());
  if (starts.empty()) starts = {0, spec.n};

  for (auto seed : seeds)
    for (auto N : N_grid)
      for (int x0 : starts) report.rows.push_back({seed, N, x0, 0.0, 0.0});

  const double expected = report.expected_per_interval;
  parallel_for(report.rows.size(), threads, [&](std::size_t k) {
    auto& row = report.rows[k];
    row.W_N = simulate(policy, demand, price, spec, params, row.N, row.x0, row.seed).W_N;
    row.rel_error = std::abs(row.W_N - expected) / std::abs(expected);
  });
  return report;
}

}  // namespace codesign
