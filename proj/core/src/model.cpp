#include "codesign/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "codesign/error.hpp"
#include "codesign/gaussian.hpp"

namespace codesign {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_instance: return "invalid_instance";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::not_irreducible: return "not_irreducible";
    case ErrorKind::solver_failure: return "solver_failure";
    case ErrorKind::degenerate_truncation: return "degenerate_truncation";
    case ErrorKind::geometry_mismatch: return "geometry_mismatch";
    case ErrorKind::optimization_failure: return "optimization_failure";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

namespace {

constexpr double kNormalizationTol = 1e-12;

template <typename T>
std::string str(const T& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// QuantizedDemandModel

std::size_t QuantizedDemandModel::min_level() const {
  std::size_t lo = levels();
  for (const auto& row : probs)
    for (std::size_t tau = 0; tau < row.size(); ++tau)
      if (row[tau] > 0.0) {
        lo = std::min(lo, tau);
        break;
      }
  return lo == levels() ? 0 : lo;
}

std::size_t QuantizedDemandModel::max_level() const {
  std::size_t hi = 0;
  for (const auto& row : probs)
    for (std::size_t tau = row.size(); tau-- > 0;)
      if (row[tau] > 0.0) {
        hi = std::max(hi, tau);
        break;
      }
  return hi;
}

double QuantizedDemandModel::mean_level(std::size_t kappa) const {
  double m = 0.0;
  for (std::size_t tau = 0; tau < levels(); ++tau) m += static_cast<double>(tau) * probs[kappa][tau];
  return m;
}

// ---------------------------------------------------------------------------
// PriceModel

PriceModel PriceModel::constant(std::size_t period_T, double mu, double sigma) {
  PriceModel p;
  p.period_T = period_T;
  p.mean.assign(period_T, mu);
  p.std.assign(period_T, sigma);
  return p;
}

double PriceModel::cdf(std::size_t kappa, double x) const {
  return gaussian::cdf(x, mean[kappa], std[kappa]);
}

double PriceModel::pdf(std::size_t kappa, double x) const {
  return gaussian::pdf(x, mean[kappa], std[kappa]);
}

// ---------------------------------------------------------------------------
// ThresholdPolicy

ThresholdPolicy::ThresholdPolicy(int n_p, int n_s, std::vector<std::vector<double>> thresholds)
    : n_p_(n_p), n_s_(n_s), thresholds_(std::move(thresholds)) {
  if (n_s_ <= n_p_)
    throw Error(ErrorKind::dimension_mismatch, "threshold policy needs n_s > n_p");
  for (const auto& row : thresholds_)
    if (row.size() != static_cast<std::size_t>(n_s_ - n_p_))
      throw Error(ErrorKind::dimension_mismatch,
                  "threshold row has " + str(row.size()) + " entries, band has " +
                      str(n_s_ - n_p_));
}

ThresholdPolicy ThresholdPolicy::constant(const ChainSpec& spec, double alpha) {
  return ThresholdPolicy(
      spec.n_p, spec.n_s,
      std::vector<std::vector<double>>(spec.period_T,
                                       std::vector<double>(spec.band_size(), alpha)));
}

ThresholdPolicy ThresholdPolicy::per_phase(const ChainSpec& spec, std::span<const double> alpha) {
  if (alpha.size() != spec.period_T)
    throw Error(ErrorKind::dimension_mismatch, "per-phase policy needs one threshold per phase");
  std::vector<std::vector<double>> rows;
  for (double a : alpha) rows.emplace_back(spec.band_size(), a);
  return ThresholdPolicy(spec.n_p, spec.n_s, std::move(rows));
}

ThresholdPolicy ThresholdPolicy::from_flat(const ChainSpec& spec, std::span<const double> flat) {
  const auto band = static_cast<std::size_t>(spec.band_size());
  if (flat.size() != band * spec.period_T)
    throw Error(ErrorKind::dimension_mismatch,
                "flat threshold vector has " + str(flat.size()) + " entries, expected " +
                    str(band * spec.period_T));
  std::vector<std::vector<double>> rows(spec.period_T);
  for (std::size_t k = 0; k < spec.period_T; ++k)
    rows[k].assign(flat.begin() + static_cast<std::ptrdiff_t>(k * band),
                   flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * band));
  return ThresholdPolicy(spec.n_p, spec.n_s, std::move(rows));
}

double ThresholdPolicy::at(std::size_t kappa, int i) const {
  return thresholds_[kappa][static_cast<std::size_t>(i - n_p_ - 1)];
}

std::vector<double> ThresholdPolicy::flatten() const {
  std::vector<double> flat;
  flat.reserve(thresholds_.size() * static_cast<std::size_t>(band_size()));
  for (const auto& row : thresholds_) flat.insert(flat.end(), row.begin(), row.end());
  return flat;
}

// ---------------------------------------------------------------------------
// CapitalCost

CapitalCost CapitalCost::per_unit(double cost_per_volume) {
  CapitalCost c;
  c.per_unit_ = cost_per_volume;
  return c;
}

CapitalCost CapitalCost::table(std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw Error(ErrorKind::invalid_instance, "capital cost table is empty");
  std::sort(points.begin(), points.end());
  CapitalCost c;
  c.points_ = std::move(points);
  return c;
}

double CapitalCost::operator()(double volume) const {
  if (points_.empty()) return per_unit_ * volume;
  // Exact hits first so tabulated sizes return the tabulated cost bit-for-bit.
  const auto it = std::lower_bound(points_.begin(), points_.end(), volume,
                                   [](const auto& p, double v) { return p.first < v; });
  if (it != points_.end() && std::abs(it->first - volume) <= 1e-9 * std::max(1.0, volume))
    return it->second;
  if (it == points_.begin()) return points_.front().second;
  if (it == points_.end()) return points_.back().second;
  const auto& [v0, c0] = *(it - 1);
  const auto& [v1, c1] = *it;
  return c0 + (c1 - c0) * (volume - v0) / (v1 - v0);
}

bool CapitalCost::is_nondecreasing() const {
  if (points_.empty()) return per_unit_ >= 0.0;
  for (std::size_t k = 1; k < points_.size(); ++k)
    if (points_[k].second < points_[k - 1].second) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Validation

void ValidationReport::add(std::string name, bool passed, std::string detail) {
  checks_.push_back({std::move(name), passed, std::move(detail)});
}

bool ValidationReport::ok() const {
  return std::all_of(checks_.begin(), checks_.end(), [](const auto& c) { return c.passed; });
}

std::vector<ValidationCheck> ValidationReport::failures() const {
  std::vector<ValidationCheck> out;
  std::copy_if(checks_.begin(), checks_.end(), std::back_inserter(out),
               [](const auto& c) { return !c.passed; });
  return out;
}

bool ValidationReport::failed(const std::string& name) const {
  return std::any_of(checks_.begin(), checks_.end(),
                     [&](const auto& c) { return !c.passed && c.name == name; });
}

std::string ValidationReport::summary() const {
  std::string s;
  for (const auto& c : checks_) {
    if (c.passed) continue;
    if (!s.empty()) s += "; ";
    s += c.name;
    if (!c.detail.empty()) s += ": " + c.detail;
  }
  return s;
}

ValidationReport validate_demand(const QuantizedDemandModel& demand) {
  ValidationReport r;
  r.add("demand quantum", demand.quantum_d > 0.0 && std::isfinite(demand.quantum_d),
        "quantum_d = " + str(demand.quantum_d));
  const bool shape_ok = demand.period_T >= 1 && demand.probs.size() == demand.period_T &&
                        demand.levels() >= 1 &&
                        std::all_of(demand.probs.begin(), demand.probs.end(), [&](const auto& row) {
                          return row.size() == demand.levels();
                        });
  r.add("demand shape", shape_ok,
        "expected " + str(demand.period_T) + " rows of equal non-zero length, got " +
            str(demand.probs.size()));
  if (!shape_ok) return r;

  bool nonneg = true;
  std::string neg_detail;
  bool normalized = true;
  std::string norm_detail;
  for (std::size_t k = 0; k < demand.period_T; ++k) {
    double sum = 0.0;
    for (double a : demand.probs[k]) {
      if (!(a >= 0.0) || !std::isfinite(a)) {
        nonneg = false;
        neg_detail = "phase " + str(k) + " has entry " + str(a);
      }
      sum += a;
    }
    if (std::abs(sum - 1.0) > kNormalizationTol) {
      normalized = false;
      norm_detail = "phase " + str(k) + " sums to " + str(sum);
    }
  }
  r.add("probability nonnegativity", nonneg, neg_detail);
  r.add("probability normalization", normalized, norm_detail);
  return r;
}

ValidationReport validate_price(const PriceModel& price) {
  ValidationReport r;
  const bool shape_ok = price.period_T >= 1 && price.mean.size() == price.period_T &&
                        price.std.size() == price.period_T;
  r.add("price shape", shape_ok,
        "mean/std must both have " + str(price.period_T) + " entries");
  if (!shape_ok) return r;
  bool finite = std::all_of(price.mean.begin(), price.mean.end(),
                            [](double m) { return std::isfinite(m); });
  r.add("price mean finite", finite);
  std::string detail;
  bool pos = true;
  for (std::size_t k = 0; k < price.period_T; ++k)
    if (!(price.std[k] > 0.0) || !std::isfinite(price.std[k])) {
      pos = false;
      detail = "phase " + str(k) + " has std " + str(price.std[k]);
    }
  r.add("price std positive", pos, detail);
  return r;
}

ValidationReport validate_instance(const QuantizedDemandModel& demand, const PriceModel& price,
                                   const ChainSpec& spec) {
  ValidationReport r = validate_demand(demand);
  const auto price_report = validate_price(price);
  for (const auto& c : price_report.checks()) r.add(c.name, c.passed, c.detail);

  r.add("period consistency",
        demand.period_T == price.period_T && demand.period_T == spec.period_T,
        "demand " + str(demand.period_T) + ", price " + str(price.period_T) + ", chain " +
            str(spec.period_T));
  r.add("volume quantum", spec.delta_x > 0.0 && std::isfinite(spec.delta_x),
        "delta_x = " + str(spec.delta_x));
  r.add("pump multiple", spec.zeta >= 1, "zeta = " + str(spec.zeta));
  r.add("penalty ceiling", spec.n_r >= 0, "n_r = " + str(spec.n_r));
  r.add("band ordering", 0 <= spec.n_p && spec.n_p < spec.n_s && spec.n_s < spec.n,
        "need 0 <= n_p < n_s < n, got n_p=" + str(spec.n_p) + " n_s=" + str(spec.n_s) +
            " n=" + str(spec.n));

  if (!r.failed("demand shape")) {
    // Pumping at the top of the band under the smallest possible demand must
    // stay within the tank; coasting from the bottom of the band under the
    // largest possible demand must not go below empty.
    const int tau_min = static_cast<int>(demand.min_level());
    const int tau_max = static_cast<int>(demand.max_level());
    r.add("overflow guard", spec.n_s + spec.zeta - tau_min <= spec.n,
          "n_s + zeta - min demand level = " + str(spec.n_s + spec.zeta - tau_min) + " > n = " +
              str(spec.n));
    r.add("underflow guard", spec.n_p + 1 - tau_max >= 0,
          "n_p + 1 - max demand level = " + str(spec.n_p + 1 - tau_max) + " < 0");
  }
  return r;
}

ValidationReport validate_cost_params(const CostParams& params) {
  ValidationReport r;
  r.add("pump energy positive", params.eps_p > 0.0 && std::isfinite(params.eps_p),
        "eps_p = " + str(params.eps_p));
  r.add("penalty nonnegative", params.penalty_w >= 0.0 && std::isfinite(params.penalty_w),
        "w = " + str(params.penalty_w));
  r.add("capital cost monotone", params.capital_cost.is_nondecreasing());
  return r;
}

ValidationReport validate_policy(const ThresholdPolicy& policy, const ChainSpec& spec) {
  ValidationReport r;
  const bool dims = policy.period() == spec.period_T && policy.n_p() == spec.n_p &&
                    policy.n_s() == spec.n_s;
  r.add("policy dimensions", dims,
        "policy has " + str(policy.period()) + " phases over band (" + str(policy.n_p()) + ", " +
            str(policy.n_s()) + "], chain has " + str(spec.period_T) + " over (" +
            str(spec.n_p) + ", " + str(spec.n_s) + "]");
  bool no_nan = true;
  for (const auto& row : policy.rows())
    for (double a : row)
      if (std::isnan(a)) no_nan = false;
  r.add("policy thresholds defined", no_nan);
  return r;
}

void require_valid(const QuantizedDemandModel& demand, const PriceModel& price,
                   const ChainSpec& spec) {
  const auto report = validate_instance(demand, price, spec);
  if (!report.ok()) throw Error(ErrorKind::invalid_instance, report.summary());
}

// ---------------------------------------------------------------------------
// Estimation from time series

namespace {

std::size_t phase_of(std::int64_t interval, std::size_t period_T) {
  const auto T = static_cast<std::int64_t>(period_T);
  return static_cast<std::size_t>(((interval % T) + T) % T);
}

}  // namespace

QuantizedDemandModel quantize_demand_series(std::span<const Sample> series, double quantum_d,
                                            std::size_t period_T) {
  if (series.empty()) throw Error(ErrorKind::insufficient_data, "demand series is empty");
  if (!(quantum_d > 0.0)) throw Error(ErrorKind::invalid_instance, "quantum_d must be positive");
  if (period_T == 0) throw Error(ErrorKind::invalid_instance, "period_T must be at least 1");

  std::vector<std::map<std::size_t, std::size_t>> counts(period_T);
  std::vector<std::size_t> totals(period_T, 0);
  std::size_t max_tau = 0;
  for (const auto& s : series) {
    if (!std::isfinite(s.value))
      throw Error(ErrorKind::invalid_instance, "non-finite demand sample");
    // std::round breaks ties away from zero.
    const double level = std::round(s.value / quantum_d);
    if (level < 0.0)
      throw Error(ErrorKind::invalid_instance,
                  "negative demand sample " + str(s.value) + " at interval " + str(s.interval));
    const auto tau = static_cast<std::size_t>(level);
    const std::size_t k = phase_of(s.interval, period_T);
    ++counts[k][tau];
    ++totals[k];
    max_tau = std::max(max_tau, tau);
  }

  QuantizedDemandModel model;
  model.quantum_d = quantum_d;
  model.period_T = period_T;
  model.probs.assign(period_T, std::vector<double>(max_tau + 1, 0.0));
  for (std::size_t k = 0; k < period_T; ++k) {
    if (totals[k] == 0)
      throw Error(ErrorKind::insufficient_data, "insufficient data for phase " + str(k));
    for (const auto& [tau, c] : counts[k])
      model.probs[k][tau] = static_cast<double>(c) / static_cast<double>(totals[k]);
  }
  return model;
}

PriceModel estimate_price_model(std::span<const Sample> series, std::size_t period_T,
                                double extreme_cutoff) {
  if (series.empty()) throw Error(ErrorKind::insufficient_data, "price series is empty");
  if (!(extreme_cutoff > 0.0))
    throw Error(ErrorKind::invalid_instance, "extreme_cutoff must be positive");
  if (period_T == 0) throw Error(ErrorKind::invalid_instance, "period_T must be at least 1");

  std::vector<std::vector<double>> by_phase(period_T);
  for (const auto& s : series) {
    if (!std::isfinite(s.value)) continue;
    if (s.value > extreme_cutoff) continue;
    by_phase[phase_of(s.interval, period_T)].push_back(s.value);
  }

  PriceModel price;
  price.period_T = period_T;
  price.mean.resize(period_T);
  price.std.resize(period_T);
  for (std::size_t k = 0; k < period_T; ++k) {
    const auto& v = by_phase[k];
    if (v.size() < 2)
      throw Error(ErrorKind::insufficient_data,
                  "insufficient data: phase " + str(k) + " has " + str(v.size()) + " samples");
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0))
      throw Error(ErrorKind::insufficient_data,
                  "insufficient data: zero price variance in phase " + str(k));
    price.mean[k] = mean;
    price.std[k] = sd;
  }
  return price;
}

}  // namespace codesign
