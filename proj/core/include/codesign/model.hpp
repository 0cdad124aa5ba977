#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace codesign {

/// Periodic distribution of quantized demand levels.
///
/// The demand in an interval with phase `kappa` is `tau * quantum_d` with
/// probability `probs[kappa][tau]`, for `tau` in `0..levels()-1`.
struct QuantizedDemandModel {
  double quantum_d = 1.0;
  std::size_t period_T = 1;
  std::vector<std::vector<double>> probs;

  std::size_t levels() const { return probs.empty() ? 0 : probs.front().size(); }
  double prob(std::size_t kappa, std::size_t tau) const { return probs[kappa][tau]; }

  /// Smallest level with positive probability in any phase.
  std::size_t min_level() const;
  /// Largest level with positive probability in any phase.
  std::size_t max_level() const;
  /// Expected demand in quanta for a phase.
  double mean_level(std::size_t kappa) const;
};

/// Per-phase Gaussian electricity price.
struct PriceModel {
  std::size_t period_T = 1;
  std::vector<double> mean;
  std::vector<double> std;

  static PriceModel constant(std::size_t period_T, double mu, double sigma);

  double cdf(std::size_t kappa, double x) const;
  double pdf(std::size_t kappa, double x) const;
};

/// Integer tank geometry on the volume grid `i * delta_x`.
///
/// States `i <= n_p` pump unconditionally, `n_p < i <= n_s` pump when the
/// price is at or below the threshold, `i > n_s` never pump. A penalty is
/// charged while `i <= n_r`.
struct ChainSpec {
  int n = 0;
  int n_p = 0;
  int n_s = 0;
  int n_r = 0;
  int zeta = 1;
  double delta_x = 1.0;
  std::size_t period_T = 1;

  std::size_t num_states() const { return static_cast<std::size_t>(n + 1) * period_T; }
  int band_size() const { return n_s - n_p; }
  double volume() const { return n * delta_x; }
};

/// Price thresholds for the threshold band, one row per phase.
///
/// `at(kappa, i)` is the threshold applied in state `(i, kappa)` for
/// `n_p < i <= n_s`.
class ThresholdPolicy {
 public:
  ThresholdPolicy() = default;
  ThresholdPolicy(int n_p, int n_s, std::vector<std::vector<double>> thresholds);

  static ThresholdPolicy constant(const ChainSpec& spec, double alpha);
  /// One threshold per phase, repeated across the band.
  static ThresholdPolicy per_phase(const ChainSpec& spec, std::span<const double> alpha);
  /// Flat vector in phase-major order, as produced by `flatten()`.
  static ThresholdPolicy from_flat(const ChainSpec& spec, std::span<const double> flat);

  double at(std::size_t kappa, int i) const;
  std::size_t period() const { return thresholds_.size(); }
  int n_p() const { return n_p_; }
  int n_s() const { return n_s_; }
  int band_size() const { return n_s_ - n_p_; }
  const std::vector<std::vector<double>>& rows() const { return thresholds_; }
  std::vector<double> flatten() const;

 private:
  int n_p_ = 0;
  int n_s_ = 0;
  std::vector<std::vector<double>> thresholds_;
};

/// Capital cost as a function of tank volume: linear per-unit cost or a
/// piecewise-linear table.
class CapitalCost {
 public:
  CapitalCost() = default;
  static CapitalCost per_unit(double cost_per_volume);
  static CapitalCost table(std::vector<std::pair<double, double>> points);

  double operator()(double volume) const;
  bool is_nondecreasing() const;
  bool is_table() const { return !points_.empty(); }
  double unit_cost() const { return per_unit_; }
  const std::vector<std::pair<double, double>>& points() const { return points_; }

 private:
  double per_unit_ = 0.0;
  std::vector<std::pair<double, double>> points_;
};

struct CostParams {
  double eps_p = 1.0;
  double penalty_w = 0.0;
  CapitalCost capital_cost;
};

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

class ValidationReport {
 public:
  void add(std::string name, bool passed, std::string detail = {});
  bool ok() const;
  const std::vector<ValidationCheck>& checks() const { return checks_; }
  std::vector<ValidationCheck> failures() const;
  bool failed(const std::string& name) const;
  /// "name: detail; name: detail" for the failing checks.
  std::string summary() const;

 private:
  std::vector<ValidationCheck> checks_;
};

ValidationReport validate_demand(const QuantizedDemandModel& demand);
ValidationReport validate_price(const PriceModel& price);
ValidationReport validate_instance(const QuantizedDemandModel& demand, const PriceModel& price,
                                   const ChainSpec& spec);
ValidationReport validate_cost_params(const CostParams& params);
ValidationReport validate_policy(const ThresholdPolicy& policy, const ChainSpec& spec);

/// Throws `InvalidInstance` carrying the report summary when the instance fails.
void require_valid(const QuantizedDemandModel& demand, const PriceModel& price,
                   const ChainSpec& spec);

/// One observation of a time series; `interval` is the sampling-interval index.
struct Sample {
  std::int64_t interval = 0;
  double value = 0.0;
};

QuantizedDemandModel quantize_demand_series(std::span<const Sample> series, double quantum_d,
                                            std::size_t period_T);

PriceModel estimate_price_model(std::span<const Sample> series, std::size_t period_T,
                                double extreme_cutoff);

}  // namespace codesign
