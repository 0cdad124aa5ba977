#include "run_config.hpp"

#include <cmath>
#include <string>

#include "codesign/error.hpp"
#include "codesign/io.hpp"

namespace codesign::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::io, "config: " + what); }

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::vector<double> number_list(const json& j, const char* what) {
  if (j.is_number()) return {j.get<double>()};
  if (j.is_array()) {
    std::vector<double> v;
    for (const auto& x : j) {
      if (!x.is_number()) bad(std::string(what) + " must hold numbers");
      v.push_back(x.get<double>());
    }
    return v;
  }
  if (j.is_object() && j.contains("from") && j.contains("to")) {
    return make_range(j.at("from").get<double>(), j.at("to").get<double>(), get(j, "step", 1.0));
  }
  bad(std::string(what) + " must be a number, a list or {from, to, step}");
}

std::vector<PricePoint> price_points(const json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be a list of [mu, sigma] pairs");
  std::vector<PricePoint> out;
  for (const auto& p : j) {
    if (p.is_array() && p.size() == 2)
      out.push_back({p[0].get<double>(), p[1].get<double>()});
    else if (p.is_object())
      out.push_back({p.at("mu").get<double>(), p.at("sigma").get<double>()});
    else
      bad(std::string(what) + " entries must be [mu, sigma] or {mu, sigma}");
  }
  return out;
}

GeometryRule geometry_from_json(const json& j) {
  GeometryRule g;
  const auto rule = get<std::string>(j, "rule", "max_demand_level");
  if (rule == "max_demand_level")
    g.kind = GeometryRule::Kind::max_demand_level;
  else if (rule == "explicit_volumes")
    g.kind = GeometryRule::Kind::explicit_volumes;
  else
    bad("unknown geometry rule '" + rule + "'");
  g.delta_x = get(j, "delta_x", 1.0);
  g.zeta = get(j, "zeta", 1);
  g.reserve_volume = get(j, "reserve_volume", 0.0);
  g.headroom_volume = get(j, "headroom_volume", 0.0);
  g.penalty_volume = get(j, "penalty_volume", 0.0);
  g.floor_volume = get(j, "floor_volume", false);
  return g;
}

SpsaConfig spsa_from_json(const json& j) {
  SpsaConfig c;
  c.iterations = get(j, "iterations", c.iterations);
  c.restarts = get(j, "restarts", c.restarts);
  c.a0 = get(j, "a0", c.a0);
  c.c0 = get(j, "c0", c.c0);
  c.A = get(j, "A", c.A);
  c.alpha_exp = get(j, "alpha_exp", c.alpha_exp);
  c.gamma_exp = get(j, "gamma_exp", c.gamma_exp);
  if (j.contains("box")) {
    const auto box = number_list(j.at("box"), "spsa box");
    if (box.size() != 2) bad("spsa box must be [lo, hi]");
    c.box_lo = box[0];
    c.box_hi = box[1];
  }
  c.initial_step = get(j, "initial_step", c.initial_step);
  c.calibration_samples = get(j, "calibration_samples", c.calibration_samples);
  c.restart_step_decay = get(j, "restart_step_decay", c.restart_step_decay);
  return c;
}

}  // namespace

std::vector<double> make_range(double from, double to, double step) {
  if (!(step > 0.0) || !std::isfinite(from) || !std::isfinite(to) || to < from)
    bad("range needs finite from <= to and a positive step");
  const auto count = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
  if (count > 1000000) bad("range has too many points");
  std::vector<double> v;
  v.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    v.push_back(std::round((from + static_cast<double>(k) * step) * 1e9) / 1e9);
  return v;
}

const QuantizedDemandModel& RunConfig::require_demand() const {
  if (!demand) bad("no demand model");
  return *demand;
}

const PriceModel& RunConfig::require_price() const {
  if (!price) bad("no price model");
  return *price;
}

double RunConfig::require_volume() const {
  if (!volume) bad("task.volume is required for this subcommand");
  return *volume;
}

ChainSpec RunConfig::spec_for(double V) const { return geometry.build(V, require_demand()); }

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) bad("document must be a JSON object");
  RunConfig c;
  c.source = doc;
  c.base_dir = base_dir;

  if (doc.contains("demand")) c.demand = io::demand_from_json(doc.at("demand"));
  if (doc.contains("price")) c.price = io::price_from_json(doc.at("price"));
  if (doc.contains("geometry")) c.geometry = geometry_from_json(doc.at("geometry"));
  if (doc.contains("chain_spec")) {
    // A fixed geometry becomes the equivalent explicit rule, so every task
    // goes through the same path.
    const auto spec = io::chain_spec_from_json(doc.at("chain_spec"));
    if (doc.contains("geometry")) bad("give either geometry or chain_spec, not both");
    c.geometry.kind = GeometryRule::Kind::explicit_volumes;
    c.geometry.delta_x = spec.delta_x;
    c.geometry.zeta = spec.zeta;
    c.geometry.reserve_volume = spec.n_p * spec.delta_x;
    c.geometry.headroom_volume = (spec.n - spec.n_s) * spec.delta_x;
    c.geometry.penalty_volume = spec.n_r * spec.delta_x;
    c.volume = spec.n * spec.delta_x;
  }
  if (doc.contains("cost_params")) c.params = io::cost_params_from_json(doc.at("cost_params"));

  const json task = doc.value("task", json::object());
  if (task.contains("volume")) c.volume = task.at("volume").get<double>();
  if (task.contains("candidates")) c.candidates = number_list(task.at("candidates"), "task.candidates");
  c.N = get<std::uint64_t>(task, "N", 0);
  if (task.contains("npv")) {
    const auto& n = task.at("npv");
    c.npv = NpvSettings{get<std::uint64_t>(n, "K", 8760), get(n, "beta", 0.0), get(n, "xi", 0.0)};
  }
  if (task.contains("policy")) c.policy = task.at("policy");

  const auto shape = get<std::string>(task, "policy_shape", "state_dependent");
  if (shape == "state_dependent")
    c.optimize.shape = PolicyShape::state_dependent;
  else if (shape == "scalar")
    c.optimize.shape = PolicyShape::scalar;
  else
    bad("unknown policy_shape '" + shape + "'");
  const auto method = get<std::string>(task, "stationary_method", "numeric");
  if (method == "numeric")
    c.optimize.method = StationaryMethod::numeric;
  else if (method == "closed_form")
    c.optimize.method = StationaryMethod::closed_form_example1;
  else
    bad("unknown stationary_method '" + method + "'");

  c.seed = get<std::uint64_t>(task, "seed", 1);
  c.optimize.spsa = spsa_from_json(task.value("spsa", json::object()));
  c.optimize.spsa.seed = c.seed;

  const json sim = task.value("simulation", json::object());
  if (sim.contains("seeds")) {
    const auto& s = sim.at("seeds");
    if (s.is_number_unsigned()) {
      for (std::uint64_t k = 0; k < s.get<std::uint64_t>(); ++k) c.simulation.seeds.push_back(c.seed + k);
    } else {
      c.simulation.seeds = get<std::vector<std::uint64_t>>(sim, "seeds", {});
    }
  } else {
    for (std::uint64_t k = 0; k < 10; ++k) c.simulation.seeds.push_back(c.seed + k);
  }
  c.simulation.N_grid = get<std::vector<std::uint64_t>>(sim, "N_grid", {});
  if (c.simulation.N_grid.empty()) c.simulation.N_grid.push_back(c.N > 0 ? c.N : 100000);
  c.simulation.x0s = get<std::vector<int>>(sim, "x0", {});
  c.simulation.tolerance = get(sim, "tolerance", 0.01);

  const json sens = task.value("sensitivity", json::object());
  if (sens.contains("fixed_grid")) c.sensitivity.fixed_grid = price_points(sens.at("fixed_grid"), "fixed_grid");
  if (sens.contains("assumed_grid"))
    c.sensitivity.assumed_grid = price_points(sens.at("assumed_grid"), "assumed_grid");
  if (sens.contains("candidates"))
    c.sensitivity.candidates = number_list(sens.at("candidates"), "sensitivity.candidates");

  const json surf = task.value("surface", json::object());
  if (surf.contains("volumes")) c.surface.volumes = number_list(surf.at("volumes"), "surface.volumes");
  if (surf.contains("alphas")) c.surface.alphas = number_list(surf.at("alphas"), "surface.alphas");

  if (doc.contains("fit")) {
    const auto& f = doc.at("fit");
    FitTask t;
    auto resolve = [&](const char* key) -> std::filesystem::path {
      if (!f.contains(key)) return {};
      std::filesystem::path p = f.at(key).get<std::string>();
      return p.is_absolute() ? p : base_dir / p;
    };
    t.demand_csv = resolve("demand_csv");
    t.price_csv = resolve("price_csv");
    t.interval_seconds = get(f, "interval_seconds", 3600.0);
    t.quantum_d = get(f, "quantum_d", 0.0);
    t.period_T = get<std::size_t>(f, "period_T", 1);
    t.extreme_cutoff = get(f, "extreme_cutoff", static_cast<double>(INFINITY));
    c.fit = t;
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto doc = io::read_json_file(path);
  return parse_run_config(doc, path.parent_path());
}

}  // namespace codesign::cli
