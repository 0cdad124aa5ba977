#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "codesign/error.hpp"
#include "codesign/io.hpp"
#include "support/instances.hpp"

using namespace codesign;

namespace {

ErrorKind kind_of(const auto& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::invalid_instance;
}

}  // namespace

TEST(Json, ModelDocumentRoundTrip) {
  io::ModelDocument doc;
  doc.demand = fixtures::spread_demand();
  doc.price = PriceModel{2, {20.0, 31.5}, {10.0, 4.25}};
  doc.demand.period_T = 2;
  doc.demand.probs.push_back(doc.demand.probs[0]);
  doc.chain_spec = ChainSpec{96, 11, 84, 3, 20, 0.1, 2};
  doc.cost_params = CostParams{1.5, 100.0, CapitalCost::table({{1.0, 10.0}, {5.0, 30.0}})};
  const auto j = io::to_json(doc);
  const auto back = io::model_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.demand.quantum_d, doc.demand.quantum_d);
  EXPECT_EQ(back.demand.probs, doc.demand.probs);
  EXPECT_EQ(back.price.mean, doc.price.mean);
  EXPECT_EQ(back.price.std, doc.price.std);
  ASSERT_TRUE(back.chain_spec);
  EXPECT_EQ(back.chain_spec->n, 96);
  EXPECT_EQ(back.chain_spec->n_r, 3);
  EXPECT_EQ(back.chain_spec->period_T, 2u);
  ASSERT_TRUE(back.cost_params);
  EXPECT_EQ(back.cost_params->penalty_w, 100.0);
  EXPECT_DOUBLE_EQ(back.cost_params->capital_cost(3.0), 20.0);
  EXPECT_EQ(io::to_json(back), j);
}

TEST(Json, Shorthands) {
  const auto price = io::price_from_json(nlohmann::json::parse(R"({"period_T": 3, "mean": 20, "std": 10})"));
  EXPECT_EQ(price.mean, std::vector<double>(3, 20.0));
  const auto params = io::cost_params_from_json(nlohmann::json::parse(R"({"eps_p": 1, "capital_cost": 10000})"));
  EXPECT_EQ(params.penalty_w, 0.0);
  EXPECT_DOUBLE_EQ(params.capital_cost(9.6), 96000.0);
  const auto spec = io::chain_spec_from_json(
      nlohmann::json::parse(R"({"n": 8, "n_p": 0, "n_s": 7, "zeta": 2, "delta_x": 1, "period_T": 1})"));
  EXPECT_EQ(spec.n_r, 0);
  const auto constant = io::policy_from_json(20.0, spec);
  EXPECT_EQ(constant.flatten(), std::vector<double>(7, 20.0));
  const auto matrix = io::policy_from_json(nlohmann::json::parse("[[1,2,3,4,5,6,7]]"), spec);
  EXPECT_EQ(matrix.at(0, 3), 3.0);
  const auto wrapped = io::policy_from_json(io::to_json(matrix), spec);
  EXPECT_EQ(wrapped.flatten(), matrix.flatten());
}

TEST(Json, Errors) {
  EXPECT_EQ(kind_of([] { io::price_from_json(nlohmann::json::parse(R"({"mean": 20})")); }), ErrorKind::io);
  EXPECT_EQ(kind_of([] {
              io::demand_from_json(
                  nlohmann::json::parse(R"({"quantum_d": 1, "period_T": 1, "levels_m": 3, "probs": [[0, 1]]})"));
            }),
            ErrorKind::io);
  EXPECT_EQ(kind_of([] { io::cost_params_from_json(nlohmann::json::parse(R"({"capital_cost": {"x": 1}})")); }),
            ErrorKind::io);
  EXPECT_EQ(kind_of([] { io::read_json_file("/nonexistent/file.json"); }), ErrorKind::io);
}

TEST(Timestamps, IntegersAreIndices) {
  EXPECT_EQ(io::parse_interval("42", 3600), 42);
  EXPECT_EQ(io::parse_interval(" -3 ", 3600), -3);
}

TEST(Timestamps, IsoForms) {
  EXPECT_EQ(io::parse_interval("2020-01-01T00:00:00Z", 3600), 438288);
  EXPECT_EQ(io::parse_interval("2020-01-01 00:00", 3600), 438288);
  EXPECT_EQ(io::parse_interval("2020-01-01", 3600), 438288);
  EXPECT_EQ(io::parse_interval("2020-01-01T00:00:00Z", 900), 1753152);
  EXPECT_EQ(io::parse_interval("2024-02-29T13:30:00+02:00", 3600), 474779);
  EXPECT_EQ(io::parse_interval("2024-02-29T13:30+0200", 900), 1899118);
  EXPECT_EQ(io::parse_interval("2023-07-04T08:15:42.500-05:30", 3600), 469021);
  EXPECT_EQ(io::parse_interval("2023-07-04T08:15:42.500-05:30", 900), 1876087);
  // Before the epoch rounds down.
  EXPECT_EQ(io::parse_interval("1969-12-31T23:30:00Z", 3600), -1);
}

TEST(Timestamps, Rejected) {
  for (const char* bad : {"2020-13-01T00:00", "2020-02-30", "yesterday", "2020-01-01T25:00", "2020-01-01T00:00X",
                          "2020/01/01"})
    EXPECT_EQ(kind_of([&] { io::parse_interval(bad, 3600); }), ErrorKind::io) << bad;
  EXPECT_EQ(kind_of([] { io::parse_interval("2020-01-01", 0.0); }), ErrorKind::io);
}

TEST(Csv, ReadsSeries) {
  std::istringstream in(
      "timestamp,value\n"
      "2020-01-01T00:00Z,1.5\n"
      "\n"
      "2020-01-01T01:00Z, 2.0\r\n"
      "7,-3e-1\n");
  const auto s = io::read_series_csv(in);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].interval, 438288);
  EXPECT_EQ(s[1].interval, 438289);
  EXPECT_EQ(s[1].value, 2.0);
  EXPECT_EQ(s[2].interval, 7);
  EXPECT_DOUBLE_EQ(s[2].value, -0.3);
}

TEST(Csv, ErrorsNameTheLine) {
  auto message = [](const char* text) {
    std::istringstream in(text);
    try {
      io::read_series_csv(in);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::io);
      return std::string(e.what());
    }
    ADD_FAILURE() << "expected an error";
    return std::string();
  };
  EXPECT_NE(message("t,v\n1,2\n2\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("t,v\n1,abc\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("t,v\n1,2x\n").find("line 2"), std::string::npos);
  EXPECT_EQ(kind_of([] { io::read_series_csv(std::filesystem::path("/nonexistent.csv")); }), ErrorKind::io);
}
