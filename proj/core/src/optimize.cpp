#include "codesign/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "codesign/chain.hpp"
#include "codesign/error.hpp"
#include "codesign/rng.hpp"

namespace codesign {

SpsaConfig resolve_spsa_defaults(SpsaConfig config, const PriceModel& price) {
  if (!(config.c0 > 0.0) && !price.std.empty())
    config.c0 = 0.1 * std::accumulate(price.std.begin(), price.std.end(), 0.0) /
                static_cast<double>(price.std.size());
  if ((std::isnan(config.box_lo) || std::isnan(config.box_hi)) && !price.mean.empty()) {
    const double mu_lo = *std::min_element(price.mean.begin(), price.mean.end());
    const double mu_hi = *std::max_element(price.mean.begin(), price.mean.end());
    const double sd = *std::max_element(price.std.begin(), price.std.end());
    if (std::isnan(config.box_lo)) config.box_lo = mu_lo - 5.0 * sd;
    if (std::isnan(config.box_hi)) config.box_hi = mu_hi + 5.0 * sd;
  }
  if (config.A < 0.0) config.A = 0.1 * static_cast<double>(config.iterations);
  return config;
}

ValidationReport validate_spsa(const SpsaConfig& c) {
  ValidationReport r;
  r.add("spsa iterations", c.iterations >= 1);
  r.add("spsa restarts", c.restarts >= 1);
  r.add("spsa c0 positive", c.c0 > 0.0, "c0 = " + std::to_string(c.c0));
  r.add("spsa box", c.box_lo < c.box_hi,
        "box [" + std::to_string(c.box_lo) + ", " + std::to_string(c.box_hi) + "]");
  r.add("spsa alpha exponent", c.alpha_exp > 0.5 && c.alpha_exp <= 1.0);
  r.add("spsa gamma exponent", c.gamma_exp > 0.0 && c.gamma_exp <= 0.5);
  r.add("spsa stability constant", c.A >= 0.0);
  r.add("spsa initial step", c.initial_step > 0.0);
  r.add("spsa restart step decay", c.restart_step_decay > 0.0 && c.restart_step_decay <= 1.0);
  return r;
}

namespace {

class PerturbationStream {
 public:
  explicit PerturbationStream(std::uint64_t seed) : engine_(seed) {}

  void fill(std::vector<double>& delta) {
    for (double& d : delta) {
      if (bits_left_ == 0) {
        bits_ = engine_();
        bits_left_ = 64;
      }
      d = (bits_ & 1U) ? 1.0 : -1.0;
      bits_ >>= 1;
      --bits_left_;
    }
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t bits_ = 0;
  int bits_left_ = 0;
};

struct RestartAbort {
  std::string reason;
};

}  // namespace

SpsaResult spsa_minimize(const Objective& objective, std::span<const double> x0,
                         const SpsaConfig& config) {
  if (x0.empty()) throw Error(ErrorKind::dimension_mismatch, "SPSA needs at least one variable");
  if (const auto r = validate_spsa(config); !r.ok())
    throw Error(ErrorKind::invalid_instance, r.summary());

  const std::size_t dim = x0.size();
  const double lo = config.box_lo;
  const double hi = config.box_hi;
  auto project = [&](std::vector<double>& x) {
    for (double& v : x) v = std::clamp(v, lo, hi);
  };

  SpsaResult result;
  result.trace.reserve(config.iterations * config.restarts);

  auto evaluate = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double f = objective(std::span<const double>(x));
    if (std::isnan(f) || f == -INFINITY)
      throw RestartAbort{"objective returned " + std::to_string(f)};
    return f;
  };

  std::vector<double> start(x0.begin(), x0.end());
  project(start);
  std::vector<double> best_x = start;
  double best_f = INFINITY;

  std::vector<double> x(dim), delta(dim), plus(dim), minus(dim), trial(dim), ghat(dim);
  double base_a0 = config.a0;
  std::size_t restarts_run = 0;

  for (std::size_t restart = 0; restart < config.restarts; ++restart) {
    PerturbationStream stream(derive_seed(config.seed, restart));
    x = best_f < INFINITY ? best_x : start;
    const double A = config.A;

    auto gradient_estimate = [&](double c) -> bool {
      stream.fill(delta);
      for (std::size_t j = 0; j < dim; ++j) {
        plus[j] = x[j] + c * delta[j];
        minus[j] = x[j] - c * delta[j];
      }
      project(plus);
      project(minus);
      const double fp = evaluate(plus);
      const double fm = evaluate(minus);
      if (fp == INFINITY || fm == INFINITY) return false;
      const double diff = (fp - fm) / (2.0 * c);
      for (std::size_t j = 0; j < dim; ++j) ghat[j] = diff / delta[j];
      return true;
    };

    try {
      double fx = evaluate(x);
      if (fx == INFINITY) throw RestartAbort{"objective infeasible at the starting point"};
      if (fx < best_f) {
        best_f = fx;
        best_x = x;
        result.best_restart = restart;
      }

      // The gain is calibrated once, at the starting point where gradients are
      // representative; warm restarts reuse it scaled down.
      if (!(base_a0 > 0.0)) {
        double magnitude = 0.0;
        std::size_t used = 0;
        for (std::size_t s = 0; s < config.calibration_samples; ++s) {
          if (!gradient_estimate(config.c0)) continue;
          for (double g : ghat) magnitude += std::abs(g);
          used += dim;
        }
        magnitude = used > 0 ? magnitude / static_cast<double>(used) : 0.0;
        base_a0 = config.initial_step * std::pow(A + 1.0, config.alpha_exp) /
                  (magnitude > 0.0 && std::isfinite(magnitude) ? magnitude : 1.0);
      }
      const double decay = std::pow(config.restart_step_decay, static_cast<double>(restarts_run++));
      const double a0 = base_a0 * decay;
      const double c0 = config.c0 * decay;

      for (std::size_t k = 0; k < config.iterations; ++k) {
        const double kk = static_cast<double>(k);
        const double ak = a0 / std::pow(A + kk + 1.0, config.alpha_exp);
        const double ck = c0 / std::pow(kk + 1.0, config.gamma_exp);
        if (gradient_estimate(ck)) {
          for (std::size_t j = 0; j < dim; ++j) trial[j] = x[j] - ak * ghat[j];
          project(trial);
          const double ft = evaluate(trial);
          if (ft < INFINITY) {
            x.swap(trial);
            fx = ft;
            if (fx < best_f) {
              best_f = fx;
              best_x = x;
              result.best_restart = restart;
            }
          }
        }
        result.trace.push_back(best_f);
      }
    } catch (const RestartAbort& abort) {
      result.aborted.push_back("restart " + std::to_string(restart) + ": " + abort.reason);
    }
  }

  if (!(best_f < INFINITY)) {
    std::string why = "SPSA found no feasible point";
    for (const auto& a : result.aborted) why += "; " + a;
    throw Error(ErrorKind::optimization_failure, why);
  }
  result.x = std::move(best_x);
  result.cost = best_f;
  return result;
}

std::vector<double> central_difference_gradient(const Objective& objective,
                                                std::span<const double> x, double h) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = point[j];
    point[j] = saved + h;
    const double fp = objective(point);
    point[j] = saved - h;
    const double fm = objective(point);
    point[j] = saved;
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------

namespace {

int grid_index(double volume, double delta_x, const char* what) {
  const double ratio = volume / delta_x;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6) {
    std::ostringstream os;
    os << what << " " << volume << " is not a multiple of delta_x = " << delta_x;
    throw Error(ErrorKind::geometry_mismatch, os.str());
  }
  return static_cast<int>(rounded);
}

}  // namespace

ChainSpec GeometryRule::build(double V, const QuantizedDemandModel& demand) const {
  if (!(delta_x > 0.0)) throw Error(ErrorKind::invalid_instance, "delta_x must be positive");
  ChainSpec spec;
  spec.n = floor_volume ? static_cast<int>(std::floor(V / delta_x + 1e-9))
                        : grid_index(V, delta_x, "tank size");
  spec.delta_x = delta_x;
  spec.zeta = zeta;
  spec.period_T = demand.period_T;
  spec.n_r = grid_index(penalty_volume, delta_x, "penalty volume");
  switch (kind) {
    case Kind::max_demand_level: {
      const int tau_max = static_cast<int>(demand.max_level());
      spec.n_p = tau_max - 1;
      spec.n_s = spec.n - tau_max;
      break;
    }
    case Kind::explicit_volumes:
      spec.n_p = grid_index(reserve_volume, delta_x, "reserve volume");
      spec.n_s = spec.n - grid_index(headroom_volume, delta_x, "headroom volume");
      break;
  }
  return spec;
}

namespace {

bool is_example1_geometry(const QuantizedDemandModel& demand, const ChainSpec& spec) {
  return spec.period_T == 1 && demand.period_T == 1 && demand.levels() == 2 &&
         demand.probs[0][0] == 0.0 && demand.probs[0][1] == 1.0 && spec.zeta == 2 &&
         spec.n_p == 0 && spec.n_s == spec.n - 1;
}

}  // namespace

double policy_objective(const ThresholdPolicy& policy, const QuantizedDemandModel& demand,
                        const PriceModel& price, const ChainSpec& spec, const CostParams& params,
                        StationaryMethod method) {
  try {
    StationaryDistribution pi;
    if (method == StationaryMethod::closed_form_example1) {
      if (!is_example1_geometry(demand, spec))
        throw Error(ErrorKind::geometry_mismatch,
                    "closed-form stationary distribution needs the single-phase, unit-demand, "
                    "double-pump geometry with n_p = 0 and n_s = n - 1");
      const double alpha = policy.rows()[0][0];
      for (const auto& row : policy.rows())
        for (double a : row)
          if (a != alpha)
            throw Error(ErrorKind::geometry_mismatch,
                        "closed-form stationary distribution needs a state-independent threshold");
      pi = analytic_stationary_example1(alpha, spec.n, price);
    } else {
      pi = stationary(build_chain(demand, price, spec, policy));
    }
    return expected_operating_cost(pi, policy, price, spec, params).total_per_interval;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::not_irreducible || e.kind() == ErrorKind::solver_failure)
      return INFINITY;
    throw;
  }
}

TankPolicyResult optimize_policy_for_tank(double V, const QuantizedDemandModel& demand,
                                          const PriceModel& price, const GeometryRule& rule,
                                          const CostParams& params,
                                          const OptimizeOptions& options) {
  TankPolicyResult out;
  out.volume = V;
  out.spec = rule.build(V, demand);
  require_valid(demand, price, out.spec);
  if (const auto r = validate_cost_params(params); !r.ok())
    throw Error(ErrorKind::invalid_instance, r.summary());
  const ChainSpec& spec = out.spec;

  auto to_policy = [&](std::span<const double> x) {
    return options.shape == PolicyShape::scalar ? ThresholdPolicy::constant(spec, x[0])
                                                : ThresholdPolicy::from_flat(spec, x);
  };

  std::vector<double> x0;
  if (options.shape == PolicyShape::scalar) {
    x0.push_back(std::accumulate(price.mean.begin(), price.mean.end(), 0.0) /
                 static_cast<double>(price.mean.size()));
  } else {
    for (std::size_t kappa = 0; kappa < spec.period_T; ++kappa)
      x0.insert(x0.end(), static_cast<std::size_t>(spec.band_size()), price.mean[kappa]);
  }

  const Objective objective = [&](std::span<const double> x) {
    return policy_objective(to_policy(x), demand, price, spec, params, options.method);
  };
  const SpsaConfig config = resolve_spsa_defaults(options.spsa, price);
  out.spsa = spsa_minimize(objective, x0, config);
  out.policy = to_policy(out.spsa.x);

  if (options.method == StationaryMethod::closed_form_example1) {
    const auto pi = analytic_stationary_example1(out.spsa.x[0], spec.n, price);
    out.operating = expected_operating_cost(pi, out.policy, price, spec, params);
  } else {
    out.operating = expected_operating_cost(stationary(build_chain(demand, price, spec, out.policy)),
                                            out.policy, price, spec, params);
  }
  return out;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& task) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          task(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

CoDesignResult codesign_sweep(std::span<const double> candidates,
                              const QuantizedDemandModel& demand, const PriceModel& price,
                              const GeometryRule& rule, const CostParams& params, std::uint64_t N,
                              const OptimizeOptions& options, unsigned threads) {
  if (candidates.empty()) throw Error(ErrorKind::invalid_instance, "no candidate tank sizes");

  CoDesignResult result;
  result.per_candidate.resize(candidates.size());

  parallel_for(candidates.size(), threads, [&](std::size_t k) {
    CandidateResult& c = result.per_candidate[k];
    c.volume = candidates[k];
    try {
      OptimizeOptions opts = options;
      // Seeds follow the chain size so a tank gets the same run in any grid.
      const auto n = static_cast<std::uint64_t>(std::llround(c.volume / rule.delta_x));
      opts.spsa.seed = derive_seed(options.spsa.seed, n);
      auto tank = optimize_policy_for_tank(c.volume, demand, price, rule, params, opts);
      c.spec = tank.spec;
      c.policy = std::move(tank.policy);
      c.operating = tank.operating;
      c.capital = params.capital_cost(c.volume);
      c.operating_N = static_cast<double>(N) * tank.operating.total_per_interval;
      c.total = c.capital + c.operating_N;
      c.evaluations = tank.spsa.evaluations;
      c.ok = true;
    } catch (const std::exception& e) {
      c.ok = false;
      c.error = e.what();
    }
  });

  bool any = false;
  for (std::size_t k = 0; k < result.per_candidate.size(); ++k) {
    const auto& c = result.per_candidate[k];
    if (!c.ok) continue;
    if (!any) {
      any = true;
      result.best_index = k;
      continue;
    }
    const auto& best = result.per_candidate[result.best_index];
    const double tol = 1e-9 * std::max(std::abs(best.total), std::abs(c.total));
    if (c.total < best.total - tol ||
        (std::abs(c.total - best.total) <= tol && c.volume < best.volume))
      result.best_index = k;
  }
  if (!any) {
    std::string why = "every candidate tank size failed";
    for (const auto& c : result.per_candidate) {
      std::ostringstream os;
      os << "; V=" << c.volume << ": " << c.error;
      why += os.str();
    }
    throw Error(ErrorKind::optimization_failure, why);
  }
  const auto& best = result.per_candidate[result.best_index];
  result.best_V = best.volume;
  result.best_spec = best.spec;
  result.best_policy = best.policy;
  result.J_star = best.total;
  return result;
}

}  // namespace codesign
