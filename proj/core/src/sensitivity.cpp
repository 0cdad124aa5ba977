#include "codesign/sensitivity.hpp"

#include <optional>

#include "codesign/cost.hpp"

namespace codesign {

namespace {

double pct(double value, double baseline) { return 100.0 * (value - baseline) / baseline; }

SensitivityRow evaluate_row(PricePoint p, const ThresholdPolicy& policy, double V,
                            const QuantizedDemandModel& demand, const ChainSpec& spec,
                            const CostParams& params, std::uint64_t N) {
  const auto price = PriceModel::constant(spec.period_T, p.mu, p.sigma);
  auto ev = evaluate_design(V, policy, price, demand, spec, params, N);
  SensitivityRow row;
  row.mu = p.mu;
  row.sigma = p.sigma;
  row.volume = V;
  row.capital = ev.capital;
  row.operating_N = ev.operating_N;
  row.total = ev.total;
  row.pi = std::move(ev.pi);
  return row;
}

}  // namespace

std::vector<SensitivityRow> sensitivity_fixed_design(
    const ThresholdPolicy& policy, double V, std::span<const PricePoint> true_grid,
    PricePoint baseline, const QuantizedDemandModel& demand, const ChainSpec& spec,
    const CostParams& params, std::uint64_t N) {
  const double base = evaluate_row(baseline, policy, V, demand, spec, params, N).operating_N;
  std::vector<SensitivityRow> rows;
  rows.reserve(true_grid.size());
  for (const auto& p : true_grid) {
    auto row = evaluate_row(p, policy, V, demand, spec, params, N);
    row.diff_pct = pct(row.operating_N, base);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<MisassumedDesignRow> sensitivity_misassumed_design(
    std::span<const PricePoint> assumed_grid, PricePoint true_params,
    std::span<const double> candidates, const QuantizedDemandModel& demand,
    const GeometryRule& rule, const CostParams& params, std::uint64_t N,
    const OptimizeOptions& options, unsigned threads) {
  auto design_under = [&](PricePoint assumed) {
    const auto price = PriceModel::constant(demand.period_T, assumed.mu, assumed.sigma);
    OptimizeOptions opts = options;
    // Gains and box follow the assumed model, as they would for a designer
    // holding those beliefs.
    opts.spsa = resolve_spsa_defaults(options.spsa, price);
    return codesign_sweep(candidates, demand, price, rule, params, N, opts, threads);
  };

  std::vector<MisassumedDesignRow> out;
  out.reserve(assumed_grid.size());
  std::optional<double> baseline;
  for (const auto& assumed : assumed_grid) {
    MisassumedDesignRow r;
    r.design = design_under(assumed);
    r.row = evaluate_row(true_params, r.design.best_policy, r.design.best_V, demand,
                         r.design.best_spec, params, N);
    r.row.mu = assumed.mu;
    r.row.sigma = assumed.sigma;
    if (!baseline && assumed.mu == true_params.mu && assumed.sigma == true_params.sigma)
      baseline = r.row.total;
    out.push_back(std::move(r));
  }
  if (!baseline) {
    const auto design = design_under(true_params);
    baseline = evaluate_row(true_params, design.best_policy, design.best_V, demand,
                            design.best_spec, params, N)
                   .total;
  }
  for (auto& r : out) r.row.diff_pct = pct(r.row.total, *baseline);
  return out;
}

}  // namespace codesign
