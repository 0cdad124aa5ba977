#include "codesign/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "codesign/error.hpp"

namespace codesign::io {

namespace {

template <typename T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::io, std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::io, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const QuantizedDemandModel& d) {
  return {{"quantum_d", d.quantum_d},
          {"levels_m", d.levels()},
          {"period_T", d.period_T},
          {"probs", d.probs}};
}

json to_json(const PriceModel& p) {
  return {{"period_T", p.period_T}, {"mean", p.mean}, {"std", p.std}};
}

json to_json(const ChainSpec& s) {
  return {{"n", s.n},         {"n_p", s.n_p},         {"n_s", s.n_s},          {"n_r", s.n_r},
          {"zeta", s.zeta},   {"delta_x", s.delta_x}, {"period_T", s.period_T}};
}

json to_json(const CostParams& c) {
  json capital;
  if (c.capital_cost.is_table()) {
    json table = json::array();
    for (const auto& [v, cost] : c.capital_cost.points()) table.push_back({v, cost});
    capital["table"] = table;
  } else {
    capital["per_unit"] = c.capital_cost.unit_cost();
  }
  return {{"eps_p", c.eps_p}, {"penalty_w", c.penalty_w}, {"capital_cost", capital}};
}

json to_json(const ThresholdPolicy& p) {
  return {{"n_p", p.n_p()}, {"n_s", p.n_s()}, {"thresholds", p.rows()}};
}

json to_json(const CostBreakdown& c) {
  return {{"enforced", c.enforced},
          {"threshold", c.threshold},
          {"penalty", c.penalty},
          {"per_interval", c.total_per_interval}};
}

QuantizedDemandModel demand_from_json(const json& j) {
  QuantizedDemandModel d;
  d.quantum_d = get<double>(j, "quantum_d");
  d.period_T = get<std::size_t>(j, "period_T");
  d.probs = get<std::vector<std::vector<double>>>(j, "probs");
  if (j.contains("levels_m") && get<std::size_t>(j, "levels_m") != d.levels())
    throw Error(ErrorKind::io, "levels_m does not match the width of probs");
  return d;
}

PriceModel price_from_json(const json& j) {
  PriceModel p;
  p.period_T = get<std::size_t>(j, "period_T");
  // Scalars are shorthand for a time-invariant model.
  if (j.contains("mean") && j.at("mean").is_number()) {
    p.mean.assign(p.period_T, get<double>(j, "mean"));
    p.std.assign(p.period_T, get<double>(j, "std"));
  } else {
    p.mean = get<std::vector<double>>(j, "mean");
    p.std = get<std::vector<double>>(j, "std");
  }
  return p;
}

ChainSpec chain_spec_from_json(const json& j) {
  ChainSpec s;
  s.n = get<int>(j, "n");
  s.n_p = get<int>(j, "n_p");
  s.n_s = get<int>(j, "n_s");
  s.n_r = j.value("n_r", 0);
  s.zeta = get<int>(j, "zeta");
  s.delta_x = get<double>(j, "delta_x");
  s.period_T = get<std::size_t>(j, "period_T");
  return s;
}

CostParams cost_params_from_json(const json& j) {
  CostParams c;
  c.eps_p = get<double>(j, "eps_p");
  c.penalty_w = j.value("penalty_w", 0.0);
  const json& cap = j.at("capital_cost");
  if (cap.is_number()) {
    c.capital_cost = CapitalCost::per_unit(cap.get<double>());
  } else if (cap.contains("per_unit")) {
    c.capital_cost = CapitalCost::per_unit(get<double>(cap, "per_unit"));
  } else if (cap.contains("table")) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : cap.at("table")) pts.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    c.capital_cost = CapitalCost::table(std::move(pts));
  } else {
    throw Error(ErrorKind::io, "capital_cost needs 'per_unit' or 'table'");
  }
  return c;
}

ThresholdPolicy policy_from_json(const json& j, const ChainSpec& spec) {
  if (j.is_number()) return ThresholdPolicy::constant(spec, j.get<double>());
  const json& rows = j.is_object() ? j.at("thresholds") : j;
  try {
    return ThresholdPolicy(spec.n_p, spec.n_s, rows.get<std::vector<std::vector<double>>>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::io, std::string("bad thresholds: ") + e.what());
  }
}

json to_json(const ModelDocument& doc) {
  json j{{"demand", to_json(doc.demand)}, {"price", to_json(doc.price)}};
  if (doc.chain_spec) j["chain_spec"] = to_json(*doc.chain_spec);
  if (doc.cost_params) j["cost_params"] = to_json(*doc.cost_params);
  return j;
}

ModelDocument model_from_json(const json& j) {
  ModelDocument doc;
  doc.demand = demand_from_json(j.at("demand"));
  doc.price = price_from_json(j.at("price"));
  if (j.contains("chain_spec")) doc.chain_spec = chain_spec_from_json(j.at("chain_spec"));
  if (j.contains("cost_params")) doc.cost_params = cost_params_from_json(j.at("cost_params"));
  return doc;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool fixed_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  std::int64_t v = 0;
  if (!parse_int(s.substr(pos, len), v)) return false;
  out = static_cast<int>(v);
  return true;
}

[[noreturn]] void bad_timestamp(std::string_view ts) {
  throw Error(ErrorKind::io, "unrecognized timestamp '" + std::string(ts) + "'");
}

}  // namespace

std::int64_t parse_interval(std::string_view timestamp, double interval_seconds) {
  const auto ts = trim(timestamp);
  if (std::int64_t idx = 0; parse_int(ts, idx)) return idx;
  if (!(interval_seconds > 0.0)) throw Error(ErrorKind::io, "interval length must be positive");

  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!fixed_int(ts, 0, 4, year) || ts.size() < 10 || ts[4] != '-' || ts[7] != '-' ||
      !fixed_int(ts, 5, 2, month) || !fixed_int(ts, 8, 2, day))
    bad_timestamp(ts);
  std::size_t pos = 10;
  if (pos < ts.size() && (ts[pos] == 'T' || ts[pos] == ' ')) {
    if (!fixed_int(ts, pos + 1, 2, hour) || pos + 3 >= ts.size() || ts[pos + 3] != ':' ||
        !fixed_int(ts, pos + 4, 2, minute))
      bad_timestamp(ts);
    pos += 6;
    if (pos < ts.size() && ts[pos] == ':') {
      if (!fixed_int(ts, pos + 1, 2, second)) bad_timestamp(ts);
      pos += 3;
      while (pos < ts.size() && (ts[pos] == '.' || std::isdigit(static_cast<unsigned char>(ts[pos])))) ++pos;
    }
  }
  std::int64_t offset = 0;
  if (pos < ts.size()) {
    if (ts[pos] == 'Z') {
      ++pos;
    } else if (ts[pos] == '+' || ts[pos] == '-') {
      int oh = 0, om = 0;
      if (!fixed_int(ts, pos + 1, 2, oh)) bad_timestamp(ts);
      std::size_t next = pos + 3;
      if (next < ts.size() && ts[next] == ':') ++next;
      if (next < ts.size() && !fixed_int(ts, next, 2, om)) bad_timestamp(ts);
      offset = (ts[pos] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
      pos = ts.size();
    }
  }
  if (pos != ts.size()) bad_timestamp(ts);

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) bad_timestamp(ts);
  const auto days = sys_days{ymd}.time_since_epoch().count();
  const double secs = static_cast<double>(days) * 86400.0 + hour * 3600 + minute * 60 + second - offset;
  return static_cast<std::int64_t>(std::floor(secs / interval_seconds));
}

std::vector<Sample> read_series_csv(std::istream& in, double interval_seconds) {
  std::vector<Sample> out;
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorKind::io, "line " + std::to_string(lineno) + ": expected timestamp,value");
    const auto value_text = std::string(trim(std::string_view(line).substr(comma + 1)));
    Sample s;
    s.interval = parse_interval(std::string_view(line).substr(0, comma), interval_seconds);
    try {
      std::size_t used = 0;
      s.value = std::stod(value_text, &used);
      if (used != value_text.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorKind::io, "line " + std::to_string(lineno) + ": bad value '" + value_text + "'");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<Sample> read_series_csv(const std::filesystem::path& path, double interval_seconds) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return read_series_csv(in, interval_seconds);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::io, path.string() + ": " + e.what());
  }
}

}  // namespace codesign::io
