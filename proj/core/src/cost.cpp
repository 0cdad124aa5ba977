#include "codesign/cost.hpp"

#include <cmath>
#include <sstream>

#include "codesign/error.hpp"
#include "codesign/gaussian.hpp"

namespace codesign {

double truncated_mean(double alpha, double mu, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::invalid_instance, "sigma must be positive");
  if (alpha == INFINITY) return mu;
  const double F = gaussian::cdf(alpha, mu, sigma);
  if (F < 1e-300) {
    std::ostringstream os;
    os << "degenerate truncation: threshold " << alpha << " is far below the price support";
    throw Error(ErrorKind::degenerate_truncation, os.str());
  }
  return mu - sigma * sigma * gaussian::pdf(alpha, mu, sigma) / F;
}

namespace {

struct StateCost {
  double enforced = 0.0;
  double threshold = 0.0;
  double penalty = 0.0;
};

// The threshold regime uses the partial expectation directly, so thresholds
// far below the price support cost 0 instead of 0 * (undefined mean).
StateCost state_cost(int i, std::size_t kappa, const ThresholdPolicy& policy,
                     const PriceModel& price, const ChainSpec& spec, const CostParams& params) {
  StateCost c;
  if (i <= spec.n_p) {
    c.enforced = params.eps_p * price.mean[kappa];
  } else if (i <= spec.n_s) {
    c.threshold = params.eps_p * gaussian::partial_expectation(policy.at(kappa, i),
                                                               price.mean[kappa], price.std[kappa]);
  }
  if (i <= spec.n_r) c.penalty = params.penalty_w;
  return c;
}

}  // namespace

double expected_state_cost(int i, std::size_t kappa, const ThresholdPolicy& policy,
                           const PriceModel& price, const ChainSpec& spec,
                           const CostParams& params) {
  if (i < 0 || i > spec.n || kappa >= spec.period_T)
    throw Error(ErrorKind::dimension_mismatch, "state index out of range");
  const auto c = state_cost(i, kappa, policy, price, spec, params);
  return c.enforced + c.threshold + c.penalty;
}

CostBreakdown expected_operating_cost(const StationaryDistribution& pi,
                                      const ThresholdPolicy& policy, const PriceModel& price,
                                      const ChainSpec& spec, const CostParams& params) {
  if (pi.pi.size() != spec.num_states() || pi.n != spec.n || pi.period_T != spec.period_T)
    throw Error(ErrorKind::dimension_mismatch,
                "stationary distribution does not match the chain geometry");
  if (const auto pr = validate_policy(policy, spec); !pr.ok())
    throw Error(ErrorKind::dimension_mismatch, pr.summary());

  CostBreakdown out;
  for (std::size_t kappa = 0; kappa < spec.period_T; ++kappa)
    for (int i = 0; i <= spec.n; ++i) {
      const double w = pi.at({i, kappa});
      if (w == 0.0) continue;
      const auto c = state_cost(i, kappa, policy, price, spec, params);
      out.enforced += w * c.enforced;
      out.threshold += w * c.threshold;
      out.penalty += w * c.penalty;
    }
  out.total_per_interval = out.enforced + out.threshold + out.penalty;
  return out;
}

DesignEvaluation evaluate_design(double V, const ThresholdPolicy& policy, const PriceModel& price,
                                 const QuantizedDemandModel& demand, const ChainSpec& spec,
                                 const CostParams& params, std::uint64_t N) {
  // A nominal size may sit above the grid as long as it rounds down to n.
  const double cells = V / spec.delta_x;
  if (!(cells > spec.n - 1e-9) || cells >= spec.n + 1 - 1e-9) {
    std::ostringstream os;
    os << "tank size " << V << " does not round down to chain geometry n * delta_x = " << spec.volume();
    throw Error(ErrorKind::geometry_mismatch, os.str());
  }
  const auto P = build_chain(demand, price, spec, policy);
  DesignEvaluation ev;
  ev.volume = V;
  ev.pi = stationary(P);
  ev.operating = expected_operating_cost(ev.pi, policy, price, spec, params);
  ev.capital = params.capital_cost(V);
  ev.operating_N = static_cast<double>(N) * ev.operating.total_per_interval;
  ev.total = ev.capital + ev.operating_N;
  return ev;
}

double total_codesign_cost(double V, const ThresholdPolicy& policy, const PriceModel& price,
                           const QuantizedDemandModel& demand, const ChainSpec& spec,
                           const CostParams& params, std::uint64_t N) {
  return evaluate_design(V, policy, price, demand, spec, params, N).total;
}

double npv_from_operating(double capital, double per_interval, std::uint64_t N, std::uint64_t K,
                          double beta, double xi) {
  if (K == 0) throw Error(ErrorKind::invalid_instance, "intervals per year K must be positive");
  if (N % K != 0)
    throw Error(ErrorKind::invalid_instance, "intervals per year K must divide the horizon N");
  if (xi == -1.0) throw Error(ErrorKind::invalid_instance, "discount rate xi must not be -1");
  const double ratio = (1.0 + beta) / (1.0 + xi);
  double factor = 0.0;
  double term = 1.0;
  for (std::uint64_t j = 1; j <= N / K; ++j) {
    term *= ratio;
    factor += term;
  }
  return capital + static_cast<double>(K) * per_interval * factor;
}

double npv_codesign_cost(double V, const ThresholdPolicy& policy, const PriceModel& price,
                         const QuantizedDemandModel& demand, const ChainSpec& spec,
                         const CostParams& params, std::uint64_t N, std::uint64_t K, double beta,
                         double xi) {
  if (K == 0) throw Error(ErrorKind::invalid_instance, "intervals per year K must be positive");
  const auto ev = evaluate_design(V, policy, price, demand, spec, params, N);
  return npv_from_operating(ev.capital, ev.operating.total_per_interval, N, K, beta, xi);
}

}  // namespace codesign
