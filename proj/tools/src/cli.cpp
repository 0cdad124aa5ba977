#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "codesign/chain.hpp"
#include "codesign/cost.hpp"
#include "codesign/error.hpp"
#include "codesign/io.hpp"
#include "codesign/optimize.hpp"
#include "codesign/sensitivity.hpp"
#include "codesign/simulate.hpp"
#include "output.hpp"
#include "paper_suite.hpp"
#include "run_config.hpp"

#ifndef CODESIGN_VERSION
#define CODESIGN_VERSION "0.0.0"
#endif
#ifndef CODESIGN_CONFIG_DIR
#define CODESIGN_CONFIG_DIR "configs"
#endif

namespace codesign::cli {

using nlohmann::json;

namespace {

/// A validation failure that keeps the names of the failed checks.
class CheckFailure : public Error {
 public:
  CheckFailure(const ValidationReport& report, const std::string& scope)
      : Error(ErrorKind::invalid_instance, scope + ": " + report.summary()) {
    for (const auto& c : report.checks())
      if (!c.passed) failed.push_back(c.name);
  }
  std::vector<std::string> failed;
};

void require(const ValidationReport& report, const std::string& scope) {
  if (!report.ok()) throw CheckFailure(report, scope);
}

std::string volume_label(double V) { return "V=" + csv_number(V); }

struct Run {
  const RunConfig& cfg;
  unsigned threads;
  OutputDir& dir;
  json summary = json::object();
  std::vector<std::uint64_t> seeds;
};

struct Design {
  double volume = 0.0;
  ChainSpec spec;
  ThresholdPolicy policy;
  std::string source;
};

void preflight(const RunConfig& cfg, std::span<const double> volumes) {
  require(validate_cost_params(cfg.params), "cost parameters");
  for (double V : volumes) require(validate_instance(cfg.require_demand(), cfg.require_price(), cfg.spec_for(V)),
                                   volume_label(V));
}

Design resolve_design(Run& run) {
  const auto& cfg = run.cfg;
  Design d;
  d.volume = cfg.require_volume();
  const double volumes[] = {d.volume};
  preflight(cfg, volumes);
  d.spec = cfg.spec_for(d.volume);
  if (cfg.policy) {
    d.policy = io::policy_from_json(*cfg.policy, d.spec);
    require(validate_policy(d.policy, d.spec), "policy");
    d.source = "config";
  } else {
    auto tank = optimize_policy_for_tank(d.volume, cfg.require_demand(), cfg.require_price(), cfg.geometry,
                                         cfg.params, cfg.optimize);
    d.policy = std::move(tank.policy);
    d.source = "optimized";
    run.seeds.push_back(cfg.optimize.spsa.seed);
  }
  return d;
}

json design_json(const Design& d) {
  return {{"volume", d.volume}, {"chain_spec", io::to_json(d.spec)}, {"policy", io::to_json(d.policy)},
          {"policy_source", d.source}};
}

std::string policy_csv(const ThresholdPolicy& policy, const ChainSpec& spec) {
  CsvWriter csv{"kappa", "i", "volume", "alpha"};
  for (std::size_t kappa = 0; kappa < spec.period_T; ++kappa)
    for (int i = spec.n_p + 1; i <= spec.n_s; ++i)
      csv.cell(static_cast<std::uint64_t>(kappa)).cell(i).cell(i * spec.delta_x).cell(policy.at(kappa, i)).end_row();
  return csv.str();
}

void cmd_validate(Run& run) {
  const auto& cfg = run.cfg;
  json checks = json::array();
  bool ok = true;
  std::vector<std::string> failed;
  auto record = [&](const ValidationReport& r, const std::string& scope) {
    for (const auto& c : r.checks()) {
      checks.push_back({{"scope", scope}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
      if (!c.passed) failed.push_back(scope + ": " + c.name);
    }
    ok = ok && r.ok();
  };
  record(validate_demand(cfg.require_demand()), "demand");
  record(validate_price(cfg.require_price()), "price");
  record(validate_cost_params(cfg.params), "cost parameters");
  record(validate_spsa(resolve_spsa_defaults(cfg.optimize.spsa, cfg.require_price())), "spsa");
  std::vector<double> volumes = cfg.candidates;
  if (cfg.volume && std::find(volumes.begin(), volumes.end(), *cfg.volume) == volumes.end())
    volumes.insert(volumes.begin(), *cfg.volume);
  for (double V : volumes) {
    ChainSpec spec;
    try {
      spec = cfg.spec_for(V);
    } catch (const Error& e) {
      ValidationReport r;
      r.add("geometry", false, e.what());
      record(r, volume_label(V));
      continue;
    }
    record(validate_instance(cfg.require_demand(), cfg.require_price(), spec), volume_label(V));
  }
  if (!ok) {
    ValidationReport combined;
    for (const auto& f : failed) combined.add(f, false);
    throw CheckFailure(combined, "validation failed");
  }
  run.dir.write_json("validation.json", {{"ok", ok}, {"checks", checks}});
  run.summary["ok"] = ok;
  run.summary["checks"] = checks.size();
}

void cmd_chain(Run& run) {
  const auto d = resolve_design(run);
  const auto P = build_chain(run.cfg.require_demand(), run.cfg.require_price(), d.spec, d.policy);
  CsvWriter csv{"from_i", "from_kappa", "to_i", "to_kappa", "probability"};
  const auto& M = P.matrix();
  double worst_row = 0.0;
  for (Eigen::Index r = 0; r < M.outerSize(); ++r) {
    const auto from = state_of(static_cast<std::size_t>(r), d.spec.n);
    double row = 0.0;
    for (TransitionMatrix::Sparse::InnerIterator it(M, r); it; ++it) {
      const auto to = state_of(static_cast<std::size_t>(it.index()), d.spec.n);
      csv.cell(from.i).cell(static_cast<std::uint64_t>(from.kappa)).cell(to.i)
          .cell(static_cast<std::uint64_t>(to.kappa)).cell(it.value()).end_row();
      row += it.value();
    }
    worst_row = std::max(worst_row, std::abs(row - 1.0));
  }
  const bool irreducible = check_irreducible(P);
  run.dir.write_text("chain.csv", csv.str());
  auto j = design_json(d);
  j["states"] = P.size();
  j["nonzeros"] = M.nonZeros();
  j["irreducible"] = irreducible;
  j["max_row_sum_error"] = worst_row;
  run.dir.write_json("chain.json", j);
  run.summary = {{"states", P.size()}, {"nonzeros", M.nonZeros()}, {"irreducible", irreducible}};
}

void cmd_stationary(Run& run) {
  const auto d = resolve_design(run);
  const auto pi = stationary(build_chain(run.cfg.require_demand(), run.cfg.require_price(), d.spec, d.policy));
  CsvWriter csv{"kappa", "i", "volume", "probability"};
  double empty = 0.0;
  for (std::size_t kappa = 0; kappa < d.spec.period_T; ++kappa) {
    for (int i = 0; i <= d.spec.n; ++i)
      csv.cell(static_cast<std::uint64_t>(kappa)).cell(i).cell(i * d.spec.delta_x).cell(pi.at({i, kappa})).end_row();
    empty += pi.at({0, kappa});
  }
  run.dir.write_text("stationary.csv", csv.str());
  auto j = design_json(d);
  j["states"] = pi.pi.size();
  j["residual"] = pi.residual;
  j["empty_probability"] = empty;
  j["pi"] = pi.pi;
  run.dir.write_json("stationary.json", j);
  run.summary = {{"states", pi.pi.size()}, {"residual", pi.residual}, {"empty_probability", empty}};
}

json evaluation_json(const RunConfig& cfg, const DesignEvaluation& ev) {
  json j = {{"capital", ev.capital},
            {"operating_per_interval", io::to_json(ev.operating)},
            {"operating_N", ev.operating_N},
            {"total", ev.total},
            {"N", cfg.N}};
  if (cfg.npv)
    j["npv"] = npv_from_operating(ev.capital, ev.operating.total_per_interval, cfg.N, cfg.npv->K, cfg.npv->beta,
                                  cfg.npv->xi);
  return j;
}

void cmd_evaluate(Run& run) {
  const auto d = resolve_design(run);
  const auto ev = evaluate_design(d.volume, d.policy, run.cfg.require_price(), run.cfg.require_demand(), d.spec,
                                  run.cfg.params, run.cfg.N);
  auto j = design_json(d);
  j.update(evaluation_json(run.cfg, ev));
  run.dir.write_json("evaluation.json", j);
  run.summary = evaluation_json(run.cfg, ev);
  run.summary["volume"] = d.volume;
}

void cmd_optimize(Run& run) {
  const auto& cfg = run.cfg;
  const double V = cfg.require_volume();
  const double volumes[] = {V};
  preflight(cfg, volumes);
  const auto tank =
      optimize_policy_for_tank(V, cfg.require_demand(), cfg.require_price(), cfg.geometry, cfg.params, cfg.optimize);
  run.seeds.push_back(cfg.optimize.spsa.seed);
  const double capital = cfg.params.capital_cost(V);
  const double operating_N = static_cast<double>(cfg.N) * tank.operating.total_per_interval;
  json j = {{"volume", V},
            {"chain_spec", io::to_json(tank.spec)},
            {"policy", io::to_json(tank.policy)},
            {"operating_per_interval", io::to_json(tank.operating)},
            {"capital", capital},
            {"operating_N", operating_N},
            {"total", capital + operating_N},
            {"spsa",
             {{"cost", tank.spsa.cost},
              {"evaluations", tank.spsa.evaluations},
              {"best_restart", tank.spsa.best_restart},
              {"aborted", tank.spsa.aborted},
              {"seed", cfg.optimize.spsa.seed}}}};
  run.dir.write_json("optimize.json", j);
  run.dir.write_text("policy.csv", policy_csv(tank.policy, tank.spec));
  CsvWriter trace{"step", "best_cost"};
  for (std::size_t k = 0; k < tank.spsa.trace.size(); ++k)
    trace.cell(static_cast<std::uint64_t>(k + 1)).cell(tank.spsa.trace[k]).end_row();
  run.dir.write_text("trace.csv", trace.str());
  run.summary = {{"volume", V},
                 {"operating_per_interval", tank.operating.total_per_interval},
                 {"operating_N", operating_N},
                 {"total", capital + operating_N}};
}

void cmd_codesign(Run& run) {
  const auto& cfg = run.cfg;
  std::vector<double> candidates = cfg.candidates;
  if (candidates.empty() && cfg.volume) candidates.push_back(*cfg.volume);
  if (candidates.empty()) throw Error(ErrorKind::invalid_instance, "config: task.candidates is required");
  require(validate_cost_params(cfg.params), "cost parameters");
  require(validate_demand(cfg.require_demand()), "demand");
  require(validate_price(cfg.require_price()), "price");
  const auto r = codesign_sweep(candidates, cfg.require_demand(), cfg.require_price(), cfg.geometry, cfg.params,
                                cfg.N, cfg.optimize, run.threads);
  run.seeds.push_back(cfg.optimize.spsa.seed);

  CsvWriter csv{"volume", "ok", "capital", "operating_N", "total", "evaluations"};
  json rows = json::array();
  for (const auto& c : r.per_candidate) {
    csv.cell(c.volume).cell(c.ok ? "1" : "0").cell(c.capital).cell(c.operating_N).cell(c.total)
        .cell(static_cast<std::uint64_t>(c.evaluations)).end_row();
    json row = {{"volume", c.volume}, {"ok", c.ok}};
    if (c.ok) {
      row["capital"] = c.capital;
      row["operating_N"] = c.operating_N;
      row["total"] = c.total;
      row["evaluations"] = c.evaluations;
      if (cfg.npv)
        row["npv"] = npv_from_operating(c.capital, c.operating.total_per_interval, cfg.N, cfg.npv->K, cfg.npv->beta,
                                        cfg.npv->xi);
    } else {
      row["error"] = c.error;
    }
    rows.push_back(row);
  }
  const auto& best = r.per_candidate[r.best_index];
  json j = {{"best_V", r.best_V},
            {"J_star", r.J_star},
            {"capital", best.capital},
            {"operating_N", best.operating_N},
            {"best_chain_spec", io::to_json(r.best_spec)},
            {"best_policy", io::to_json(r.best_policy)},
            {"candidates", rows}};
  run.dir.write_json("codesign.json", j);
  run.dir.write_text("candidates.csv", csv.str());
  run.dir.write_text("policy.csv", policy_csv(r.best_policy, r.best_spec));
  run.summary = {{"best_V", r.best_V},
                 {"J_star", r.J_star},
                 {"capital", best.capital},
                 {"operating_N", best.operating_N}};
  if (r.best_policy.rows().size() == 1 && r.best_policy.band_size() > 0) {
    const auto& row = r.best_policy.rows()[0];
    if (std::all_of(row.begin(), row.end(), [&](double a) { return a == row[0]; })) run.summary["alpha_star"] = row[0];
  }
}

void cmd_simulate(Run& run) {
  const auto& cfg = run.cfg;
  const auto d = resolve_design(run);
  const auto rep = convergence_report(d.policy, cfg.require_demand(), cfg.require_price(), d.spec, cfg.params,
                                      cfg.simulation.seeds, cfg.simulation.N_grid, cfg.simulation.x0s, run.threads);
  run.seeds.insert(run.seeds.end(), cfg.simulation.seeds.begin(), cfg.simulation.seeds.end());
  CsvWriter csv{"seed", "N", "x0", "W_N", "rel_error"};
  for (const auto& row : rep.rows)
    csv.cell(row.seed).cell(row.N).cell(row.x0).cell(row.W_N).cell(row.rel_error).end_row();

  // Summary per (N, x0) group, in first-seen order.
  json groups = json::array();
  std::vector<std::pair<std::uint64_t, int>> keys;
  for (const auto& row : rep.rows)
    if (std::find(keys.begin(), keys.end(), std::make_pair(row.N, row.x0)) == keys.end())
      keys.emplace_back(row.N, row.x0);
  bool all_within = true;
  for (const auto& [N, x0] : keys) {
    std::vector<double> errs;
    for (const auto& row : rep.rows)
      if (row.N == N && row.x0 == x0) errs.push_back(row.rel_error);
    const auto within = std::count_if(errs.begin(), errs.end(), [&](double e) { return e < cfg.simulation.tolerance; });
    std::sort(errs.begin(), errs.end());
    const double median = errs.size() % 2 ? errs[errs.size() / 2]
                                          : 0.5 * (errs[errs.size() / 2 - 1] + errs[errs.size() / 2]);
    groups.push_back({{"N", N},
                      {"x0", x0},
                      {"runs", errs.size()},
                      {"within_tolerance", within},
                      {"median_rel_error", median},
                      {"max_rel_error", errs.back()}});
    all_within = all_within && static_cast<std::size_t>(within) == errs.size();
  }
  auto j = design_json(d);
  j["expected_per_interval"] = rep.expected_per_interval;
  j["tolerance"] = cfg.simulation.tolerance;
  j["groups"] = groups;
  run.dir.write_text("convergence.csv", csv.str());
  run.dir.write_json("simulation.json", j);
  run.summary = {{"expected_per_interval", rep.expected_per_interval},
                 {"runs", rep.rows.size()},
                 {"all_within_tolerance", all_within},
                 {"groups", groups}};
}

std::vector<PricePoint> default_price_grid(PricePoint base) {
  std::vector<PricePoint> grid;
  for (double m : {1.0, 1.2, 0.8})
    for (double s : {1.0, 2.0, 0.5}) grid.push_back({base.mu * m, base.sigma * s});
  return grid;
}

void cmd_sensitivity(Run& run) {
  const auto& cfg = run.cfg;
  const auto& price = cfg.require_price();
  for (std::size_t k = 1; k < price.period_T; ++k)
    if (price.mean[k] != price.mean[0] || price.std[k] != price.std[0])
      throw Error(ErrorKind::invalid_instance, "sensitivity studies need the same price model in every phase");
  const PricePoint base{price.mean[0], price.std[0]};
  json j = json::object();
  run.summary = json::object();

  const auto fixed_grid = cfg.sensitivity.fixed_grid.value_or(default_price_grid(base));
  if (!fixed_grid.empty()) {
    const auto d = resolve_design(run);
    const auto rows = sensitivity_fixed_design(d.policy, d.volume, fixed_grid, base, cfg.require_demand(), d.spec,
                                               cfg.params, cfg.N);
    CsvWriter csv{"mu", "sigma", "volume", "capital", "operating_N", "total", "diff_pct"};
    json out = json::array();
    for (const auto& r : rows) {
      csv.cell(r.mu).cell(r.sigma).cell(r.volume).cell(r.capital).cell(r.operating_N).cell(r.total).cell(r.diff_pct)
          .end_row();
      out.push_back({{"mu", r.mu}, {"sigma", r.sigma}, {"operating_N", r.operating_N}, {"diff_pct", r.diff_pct}});
    }
    run.dir.write_text("sensitivity_fixed.csv", csv.str());
    j["fixed_design"] = design_json(d);
    j["fixed_design"]["rows"] = out;
    run.summary["fixed_design"] = out;
  }

  const auto assumed_grid = cfg.sensitivity.assumed_grid.value_or(default_price_grid(base));
  if (!assumed_grid.empty()) {
    const auto& candidates = cfg.sensitivity.candidates.empty() ? cfg.candidates : cfg.sensitivity.candidates;
    if (candidates.empty()) throw Error(ErrorKind::invalid_instance, "config: sensitivity needs candidates");
    require(validate_cost_params(cfg.params), "cost parameters");
    const auto rows = sensitivity_misassumed_design(assumed_grid, base, candidates, cfg.require_demand(),
                                                    cfg.geometry, cfg.params, cfg.N, cfg.optimize, run.threads);
    run.seeds.push_back(cfg.optimize.spsa.seed);
    CsvWriter csv{"mu", "sigma", "volume", "capital", "operating_N", "total", "diff_pct"};
    json out = json::array();
    for (const auto& r : rows) {
      const auto& x = r.row;
      csv.cell(x.mu).cell(x.sigma).cell(x.volume).cell(x.capital).cell(x.operating_N).cell(x.total).cell(x.diff_pct)
          .end_row();
      out.push_back({{"mu", x.mu},
                     {"sigma", x.sigma},
                     {"volume", x.volume},
                     {"capital", x.capital},
                     {"operating_N", x.operating_N},
                     {"total", x.total},
                     {"diff_pct", x.diff_pct}});
    }
    run.dir.write_text("sensitivity_misassumed.csv", csv.str());
    j["misassumed_design"] = {{"true_price", {{"mu", base.mu}, {"sigma", base.sigma}}}, {"rows", out}};
    run.summary["misassumed_design"] = out;
  }
  run.dir.write_json("sensitivity.json", j);
}

void cmd_surface(Run& run) {
  const auto& cfg = run.cfg;
  const auto& price = cfg.require_price();
  std::vector<double> volumes = cfg.surface.volumes.empty() ? cfg.candidates : cfg.surface.volumes;
  if (volumes.empty() && cfg.volume) volumes.push_back(*cfg.volume);
  if (volumes.empty()) throw Error(ErrorKind::invalid_instance, "config: surface needs volumes or candidates");
  std::vector<double> alphas = cfg.surface.alphas;
  if (alphas.empty()) {
    const double mu = price.mean[0], sigma = price.std[0];
    alphas = make_range(mu - 2.0 * sigma, mu + 2.0 * sigma, sigma / 10.0);
  }
  preflight(cfg, volumes);

  std::vector<std::vector<double>> grid(volumes.size(), std::vector<double>(alphas.size()));
  parallel_for(volumes.size(), run.threads, [&](std::size_t v) {
    const auto spec = cfg.spec_for(volumes[v]);
    for (std::size_t a = 0; a < alphas.size(); ++a)
      grid[v][a] = policy_objective(ThresholdPolicy::constant(spec, alphas[a]), cfg.require_demand(), price, spec,
                                    cfg.params, cfg.optimize.method);
  });

  CsvWriter csv{"volume", "alpha", "capital", "operating_N", "total"};
  double best = INFINITY, best_V = 0.0, best_alpha = 0.0;
  for (std::size_t v = 0; v < volumes.size(); ++v) {
    const double capital = cfg.params.capital_cost(volumes[v]);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const double operating_N = static_cast<double>(cfg.N) * grid[v][a];
      const double total = capital + operating_N;
      csv.cell(volumes[v]).cell(alphas[a]).cell(capital).cell(operating_N).cell(total).end_row();
      if (total < best) {
        best = total;
        best_V = volumes[v];
        best_alpha = alphas[a];
      }
    }
  }
  run.dir.write_text("surface.csv", csv.str());
  const json minimum = {{"volume", best_V}, {"alpha", best_alpha}, {"total", best}};
  run.dir.write_json("surface.json", {{"volumes", volumes}, {"alphas", alphas}, {"minimum", minimum}});
  run.summary = {{"cells", volumes.size() * alphas.size()}, {"minimum", minimum}};
}

void cmd_fit(Run& run) {
  const auto& cfg = run.cfg;
  if (!cfg.fit) throw Error(ErrorKind::invalid_instance, "config: no fit section");
  const auto& f = *cfg.fit;
  if (f.demand_csv.empty() && f.price_csv.empty())
    throw Error(ErrorKind::invalid_instance, "config: fit needs demand_csv or price_csv");
  json doc = json::object();
  if (!f.demand_csv.empty()) {
    const auto series = io::read_series_csv(f.demand_csv, f.interval_seconds);
    const auto demand = quantize_demand_series(series, f.quantum_d, f.period_T);
    doc["demand"] = io::to_json(demand);
    CsvWriter csv{"kappa", "tau", "probability"};
    for (std::size_t k = 0; k < demand.period_T; ++k)
      for (std::size_t t = 0; t < demand.levels(); ++t)
        csv.cell(static_cast<std::uint64_t>(k)).cell(static_cast<std::uint64_t>(t)).cell(demand.probs[k][t]).end_row();
    run.dir.write_text("fit_demand.csv", csv.str());
    run.summary["demand_samples"] = series.size();
    run.summary["demand_levels"] = demand.levels();
  }
  if (!f.price_csv.empty()) {
    const auto series = io::read_series_csv(f.price_csv, f.interval_seconds);
    const auto price = estimate_price_model(series, f.period_T, f.extreme_cutoff);
    doc["price"] = io::to_json(price);
    CsvWriter csv{"kappa", "mean", "std"};
    for (std::size_t k = 0; k < price.period_T; ++k)
      csv.cell(static_cast<std::uint64_t>(k)).cell(price.mean[k]).cell(price.std[k]).end_row();
    run.dir.write_text("fit_price.csv", csv.str());
    run.summary["price_samples"] = series.size();
  }
  run.dir.write_json("fit.json", doc);
}

void apply_overrides(json& doc, const Flags& flags) {
  if (!doc.is_object()) return;
  json& task = doc["task"];
  if (task.is_null()) task = json::object();
  if (flags.seed) task["seed"] = *flags.seed;
  if (flags.volume) task["volume"] = *flags.volume;
  if (flags.iterations) task["spsa"]["iterations"] = *flags.iterations;
  if (flags.restarts) task["spsa"]["restarts"] = *flags.restarts;
  if (flags.candidates) {
    const std::string& s = *flags.candidates;
    auto number = [&](const std::string& t) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(t, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != t.size()) throw Error(ErrorKind::io, "bad --candidates value '" + s + "'");
      return v;
    };
    if (s.find(':') != std::string::npos) {
      std::vector<std::string> parts;
      std::stringstream ss(s);
      for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
      if (parts.size() != 3) throw Error(ErrorKind::io, "--candidates takes from:to:step");
      task["candidates"] = {{"from", number(parts[0])}, {"to", number(parts[1])}, {"step", number(parts[2])}};
    } else {
      json list = json::array();
      std::stringstream ss(s);
      for (std::string p; std::getline(ss, p, ',');) list.push_back(number(p));
      task["candidates"] = list;
    }
  }
}

json error_json(const std::string& subcommand, const std::string& kind, const std::string& message,
                const std::vector<std::string>& failed = {}) {
  json e = {{"subcommand", subcommand}, {"kind", kind}, {"message", message}};
  if (!failed.empty()) e["failed_checks"] = failed;
  return {{"error", e}};
}

}  // namespace

int run_subcommand(const std::string& subcommand, const std::filesystem::path& config, const Flags& flags,
                   std::ostream& out, std::ostream& err) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  OutputDir dir(flags.out);
  try {
    auto doc = io::read_json_file(config);
    apply_overrides(doc, flags);
    const auto cfg = parse_run_config(doc, config.parent_path());
    const unsigned threads = flags.threads ? flags.threads : std::max(1u, std::thread::hardware_concurrency());
    Run run{cfg, threads, dir, json::object(), {}};

    if (subcommand == "validate") cmd_validate(run);
    else if (subcommand == "chain") cmd_chain(run);
    else if (subcommand == "stationary") cmd_stationary(run);
    else if (subcommand == "evaluate") cmd_evaluate(run);
    else if (subcommand == "optimize") cmd_optimize(run);
    else if (subcommand == "codesign") cmd_codesign(run);
    else if (subcommand == "simulate") cmd_simulate(run);
    else if (subcommand == "sensitivity") cmd_sensitivity(run);
    else if (subcommand == "surface") cmd_surface(run);
    else if (subcommand == "fit") cmd_fit(run);
    else throw Error(ErrorKind::io, "unknown subcommand '" + subcommand + "'");

    char hash[32];
    std::snprintf(hash, sizeof hash, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.source.dump())));
    std::sort(run.seeds.begin(), run.seeds.end());
    run.seeds.erase(std::unique(run.seeds.begin(), run.seeds.end()), run.seeds.end());
    const double wall = std::chrono::duration<double>(clock::now() - start).count();
    json manifest = {{"tool", "codesign"},
                     {"version", CODESIGN_VERSION},
                     {"subcommand", subcommand},
                     {"config", config.string()},
                     {"config_hash", hash},
                     {"seeds", run.seeds},
                     {"threads", threads},
                     {"outputs", dir.files()},
                     {"wall_time_seconds", wall}};
    dir.write_json("manifest.json", manifest);

    json summary = {{"subcommand", subcommand}, {"out", dir.path().string()}};
    summary.update(run.summary);
    out << summary.dump(2) << '\n';
    return 0;
  } catch (const CheckFailure& e) {
    dir.rollback();
    out << error_json(subcommand, to_string(e.kind()), e.what(), e.failed).dump(2) << '\n';
    err << "codesign " << subcommand << ": " << e.what() << '\n';
  } catch (const Error& e) {
    dir.rollback();
    out << error_json(subcommand, to_string(e.kind()), e.what()).dump(2) << '\n';
    err << "codesign " << subcommand << ": " << e.what() << '\n';
  } catch (const json::exception& e) {
    dir.rollback();
    out << error_json(subcommand, "io", std::string("config: ") + e.what()).dump(2) << '\n';
    err << "codesign " << subcommand << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    dir.rollback();
    out << error_json(subcommand, "internal", e.what()).dump(2) << '\n';
    err << "codesign " << subcommand << ": " << e.what() << '\n';
  }
  return 1;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Co-design of storage size and price-threshold pumping policies", "codesign"};
  app.set_version_flag("--version", CODESIGN_VERSION);

  Flags flags;
  std::string out_dir = flags.out.string();
  std::uint64_t seed = 0;
  std::string candidates;
  std::size_t iterations = 0, restarts = 0;
  double volume = 0.0;
  bool paper_suite = false;
  std::string configs_dir = CODESIGN_CONFIG_DIR;

  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "Base seed for SPSA and simulation");
  app.add_option("--threads", flags.threads, "Worker threads, 0 for all cores")->capture_default_str();
  auto* cand_opt = app.add_option("--candidates", candidates, "Tank sizes as from:to:step or a,b,c");
  auto* iter_opt = app.add_option("--iterations", iterations, "SPSA iterations per restart");
  auto* rest_opt = app.add_option("--restarts", restarts, "SPSA restarts");
  auto* vol_opt = app.add_option("--volume", volume, "Tank size for single-design subcommands");
  app.add_flag("--paper-suite", paper_suite, "Check the three worked examples against their reference results");
  app.add_option("--configs", configs_dir, "Directory holding example1.json .. example3.json")->capture_default_str();

  std::string subcommand;
  std::string config_path;
  for (const char* name : kSubcommands) {
    auto* sub = app.add_subcommand(name, std::string("Run the ") + name + " task");
    sub->add_option("config", config_path, "Run config JSON")->required();
    sub->fallthrough();
    sub->callback([&subcommand, name] { subcommand = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  flags.out = out_dir;
  if (seed_opt->count()) flags.seed = seed;
  if (cand_opt->count()) flags.candidates = candidates;
  if (iter_opt->count()) flags.iterations = iterations;
  if (rest_opt->count()) flags.restarts = restarts;
  if (vol_opt->count()) flags.volume = volume;

  if (paper_suite) {
    SuiteOptions opts;
    opts.configs = configs_dir;
    opts.threads = flags.threads ? flags.threads : std::max(1u, std::thread::hardware_concurrency());
    opts.on_result = [&](const CriterionResult& r) { out << format_result(r) << std::endl; };
    const auto results = run_paper_suite(opts);
    const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass; });
    out << passed << "/" << results.size() << " criteria passed\n";
    return passed == static_cast<long>(results.size()) ? 0 : 1;
  }
  if (subcommand.empty()) {
    err << app.help();
    return 2;
  }
  return run_subcommand(subcommand, config_path, flags, out, err);
}

}  // namespace codesign::cli
