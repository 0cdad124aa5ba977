#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "codesign/chain.hpp"
#include "codesign/error.hpp"
#include "codesign/optimize.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace codesign;

namespace {

ErrorKind kind_of(const auto& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::io;
}

const std::vector<double> kTarget{1.5, -2.0, 0.25, 3.0, -0.75};
const std::vector<double> kWeight{1.0, 2.0, 0.5, 3.0, 1.5};

double quadratic(std::span<const double> x) {
  double f = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) f += kWeight[j] * (x[j] - kTarget[j]) * (x[j] - kTarget[j]);
  return f;
}

SpsaConfig quadratic_config() {
  SpsaConfig c;
  c.iterations = 2000;
  c.restarts = 2;
  c.c0 = 0.1;
  c.A = 200;
  c.box_lo = -10.0;
  c.box_hi = 10.0;
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Spsa, QuadraticConverges) {
  const std::vector<double> x0(5, 0.0);
  const auto r = spsa_minimize(quadratic, x0, quadratic_config());
  ASSERT_EQ(r.x.size(), 5u);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(r.x[j], kTarget[j], 1e-2) << j;
  EXPECT_LT(r.cost, 1e-3);
  EXPECT_TRUE(r.aborted.empty());
}

TEST(Spsa, ProjectionKeepsIteratesInBox) {
  auto config = quadratic_config();
  config.box_lo = -1.0;
  config.box_hi = 1.0;
  bool outside = false;
  const Objective f = [&](std::span<const double> x) {
    for (double v : x) outside |= v < -1.0 || v > 1.0;
    return quadratic(x);
  };
  const std::vector<double> x0(5, 5.0);  // projected onto the box before the first call
  const auto r = spsa_minimize(f, x0, config);
  EXPECT_FALSE(outside);
  // Clipped optimum: targets outside the box sit on its faces. Perturbations
  // clipped at a face bias the gradient, so interior coordinates settle slower.
  EXPECT_NEAR(r.x[0], 1.0, 1e-2);
  EXPECT_NEAR(r.x[1], -1.0, 1e-2);
  EXPECT_NEAR(r.x[2], 0.25, 5e-2);
  EXPECT_NEAR(r.x[3], 1.0, 1e-2);
}

TEST(Spsa, DeterministicForSeed) {
  const std::vector<double> x0(5, 0.0);
  auto config = quadratic_config();
  config.iterations = 300;
  const auto a = spsa_minimize(quadratic, x0, config);
  const auto b = spsa_minimize(quadratic, x0, config);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.evaluations, b.evaluations);
  config.seed = 12;
  const auto c = spsa_minimize(quadratic, x0, config);
  EXPECT_NE(a.x, c.x);
}

TEST(Spsa, TraceIsNonincreasing) {
  const std::vector<double> x0(5, 0.0);
  const auto r = spsa_minimize(quadratic, x0, quadratic_config());
  ASSERT_EQ(r.trace.size(), 4000u);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k], r.trace[k - 1]);
  EXPECT_EQ(r.trace.back(), r.cost);
}

TEST(Spsa, InfeasiblePointsAreRejected) {
  // Anything with x0 > 1 is rejected; the constrained optimum is x0 = 1.
  const Objective f = [](std::span<const double> x) { return x[0] > 1.0 ? INFINITY : quadratic(x); };
  const std::vector<double> x0(5, 0.0);
  const auto r = spsa_minimize(f, x0, quadratic_config());
  // Pairs straddling the boundary are skipped, which slows progress there, so
  // only feasibility and a large improvement are required.
  EXPECT_LE(r.x[0], 1.0);
  EXPECT_NEAR(r.x[0], 1.0, 0.1);
  EXPECT_LT(r.cost, 0.05 * quadratic(x0));
}

TEST(Spsa, NanAbortsOnlyTheCurrentRestart) {
  std::size_t calls = 0;
  const Objective f = [&](std::span<const double> x) {
    return ++calls == 50 ? NAN : quadratic(x);
  };
  const std::vector<double> x0(5, 0.0);
  const auto r = spsa_minimize(f, x0, quadratic_config());
  ASSERT_EQ(r.aborted.size(), 1u);
  EXPECT_NE(r.aborted[0].find("restart 0"), std::string::npos);
  EXPECT_EQ(r.best_restart, 1u);
  EXPECT_LT(r.cost, 1e-2);
}

TEST(Spsa, AllRestartsFailing) {
  const Objective f = [](std::span<const double>) { return INFINITY; };
  const std::vector<double> x0(2, 0.0);
  EXPECT_EQ(kind_of([&] { spsa_minimize(f, x0, quadratic_config()); }), ErrorKind::optimization_failure);
  const Objective g = [](std::span<const double>) { return -INFINITY; };
  EXPECT_EQ(kind_of([&] { spsa_minimize(g, x0, quadratic_config()); }), ErrorKind::optimization_failure);
}

TEST(Spsa, ConfigValidation) {
  auto config = quadratic_config();
  EXPECT_TRUE(validate_spsa(config).ok());
  config.restart_step_decay = 0.0;
  EXPECT_FALSE(validate_spsa(config).ok());
  config = quadratic_config();
  config.box_lo = 11.0;
  EXPECT_FALSE(validate_spsa(config).ok());
  const std::vector<double> x0(5, 0.0);
  EXPECT_EQ(kind_of([&] { spsa_minimize(quadratic, x0, config); }), ErrorKind::invalid_instance);
}

TEST(Spsa, ResolvedDefaults) {
  const auto c = resolve_spsa_defaults({}, PriceModel{2, {20.0, 30.0}, {10.0, 6.0}});
  EXPECT_DOUBLE_EQ(c.c0, 0.8);
  EXPECT_DOUBLE_EQ(c.box_lo, 20.0 - 50.0);
  EXPECT_DOUBLE_EQ(c.box_hi, 30.0 + 50.0);
  EXPECT_DOUBLE_EQ(c.A, 300.0);
  EXPECT_EQ(c.iterations, 3000u);
  EXPECT_EQ(c.restarts, 2u);
}

TEST(CentralDifference, MatchesAnalyticGradient) {
  const std::vector<double> x{0.3, 0.1, -1.0, 2.0, 0.0};
  const auto g = central_difference_gradient(quadratic, x, 1e-4);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(g[j], 2.0 * kWeight[j] * (x[j] - kTarget[j]), 1e-6);
}

TEST(CentralDifference, SpsaEstimateIsUnbiased) {
  // Averaged over many Rademacher directions the simultaneous-perturbation
  // estimate approaches the central-difference gradient.
  const std::vector<double> x{0.3, 0.1, -1.0, 2.0, 0.0};
  const auto g = central_difference_gradient(quadratic, x, 1e-4);
  std::mt19937_64 rng(5);
  std::vector<double> mean(5, 0.0), plus(5), minus(5), delta(5);
  const int samples = 20000;
  const double c = 0.01;
  for (int s = 0; s < samples; ++s) {
    for (auto& d : delta) d = (rng() & 1u) ? 1.0 : -1.0;
    for (std::size_t j = 0; j < 5; ++j) {
      plus[j] = x[j] + c * delta[j];
      minus[j] = x[j] - c * delta[j];
    }
    const double diff = (quadratic(plus) - quadratic(minus)) / (2.0 * c);
    for (std::size_t j = 0; j < 5; ++j) mean[j] += diff / delta[j] / samples;
  }
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(mean[j], g[j], 0.15);
}

TEST(GeometryRuleTest, MaxDemandLevel) {
  const auto spec = fixtures::spread_rule().build(9.6, fixtures::spread_demand());
  EXPECT_EQ(spec.n, 96);
  EXPECT_EQ(spec.n_p, 11);
  EXPECT_EQ(spec.n_s, 84);
  EXPECT_EQ(spec.zeta, 20);
  EXPECT_EQ(spec.n_r, 0);
  EXPECT_DOUBLE_EQ(spec.delta_x, 0.1);
  const auto unit = fixtures::unit_rule().build(8.0, fixtures::unit_demand());
  EXPECT_EQ(unit.n_p, 0);
  EXPECT_EQ(unit.n_s, 7);
}

TEST(GeometryRuleTest, ExplicitVolumes) {
  GeometryRule rule;
  rule.kind = GeometryRule::Kind::explicit_volumes;
  rule.delta_x = 0.5;
  rule.zeta = 3;
  rule.reserve_volume = 1.5;
  rule.headroom_volume = 2.0;
  rule.penalty_volume = 1.0;
  const auto spec = rule.build(10.0, fixtures::unit_demand());
  EXPECT_EQ(spec.n, 20);
  EXPECT_EQ(spec.n_p, 3);
  EXPECT_EQ(spec.n_s, 16);
  EXPECT_EQ(spec.n_r, 2);
}

TEST(GeometryRuleTest, OffGridVolume) {
  EXPECT_EQ(kind_of([] { fixtures::spread_rule().build(9.65, fixtures::spread_demand()); }),
            ErrorKind::geometry_mismatch);
  GeometryRule bad = fixtures::unit_rule();
  bad.delta_x = 0.0;
  EXPECT_EQ(kind_of([&] { bad.build(8.0, fixtures::unit_demand()); }), ErrorKind::invalid_instance);
}

TEST(PolicyObjective, ReducibleIsInfinite) {
  const auto spec = fixtures::unit_spec(8);
  EXPECT_EQ(policy_objective(ThresholdPolicy::constant(spec, -INFINITY), fixtures::unit_demand(),
                             fixtures::price(), spec, fixtures::params(), StationaryMethod::numeric),
            INFINITY);
}

TEST(PolicyObjective, ClosedFormAgreesWithNumeric) {
  const auto spec = fixtures::unit_spec(8);
  for (double alpha : {12.0, 17.5, 20.0, 26.0}) {
    const auto p = ThresholdPolicy::constant(spec, alpha);
    EXPECT_NEAR(policy_objective(p, fixtures::unit_demand(), fixtures::price(), spec, fixtures::params(),
                                 StationaryMethod::closed_form_example1),
                policy_objective(p, fixtures::unit_demand(), fixtures::price(), spec, fixtures::params(),
                                 StationaryMethod::numeric),
                1e-9);
  }
  std::vector<double> rows(7, 20.0);
  rows[3] = 21.0;
  EXPECT_EQ(kind_of([&] {
              policy_objective(ThresholdPolicy(0, 7, {rows}), fixtures::unit_demand(), fixtures::price(), spec,
                               fixtures::params(), StationaryMethod::closed_form_example1);
            }),
            ErrorKind::geometry_mismatch);
}

TEST(OptimizeTank, ScalarUnitDemandFindsMeanPrice) {
  OptimizeOptions opts;
  opts.shape = PolicyShape::scalar;
  opts.method = StationaryMethod::closed_form_example1;
  opts.spsa.iterations = 1500;
  const auto r = optimize_policy_for_tank(8.0, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                          fixtures::params(), opts);
  EXPECT_NEAR(r.spsa.x[0], 20.0, 0.2);
  EXPECT_NEAR(r.operating.total_per_interval * fixtures::kHorizon, 1140421.48, 5.0);
}

TEST(OptimizeTank, StateDependentMatchesPolicyIteration) {
  const auto spec = fixtures::unit_spec(8);
  const auto exact =
      oracle::policy_iteration(fixtures::unit_demand(), fixtures::price(), spec, fixtures::params());
  // Optimal thresholds fall as the tank fills.
  for (std::size_t j = 1; j < exact.thresholds[0].size(); ++j)
    EXPECT_LE(exact.thresholds[0][j], exact.thresholds[0][j - 1] + 1e-9);
  const auto r = optimize_policy_for_tank(8.0, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                          fixtures::params(), {});
  EXPECT_GE(r.operating.total_per_interval, exact.gain - 1e-9);
  EXPECT_LT((r.operating.total_per_interval - exact.gain) * fixtures::kHorizon, 20.0);
  EXPECT_NEAR(exact.gain * fixtures::kHorizon, 1105557.5, 0.5);
}

TEST(OptimizeTank, SpreadDemandNearExactOptimum) {
  const auto rule = fixtures::spread_rule();
  const auto spec = rule.build(9.6, fixtures::spread_demand());
  const auto exact =
      oracle::policy_iteration(fixtures::spread_demand(), fixtures::price(), spec, fixtures::params());
  EXPECT_NEAR(exact.gain * fixtures::kHorizon, 1105096.46, 0.05);
  const auto r =
      optimize_policy_for_tank(9.6, fixtures::spread_demand(), fixtures::price(), rule, fixtures::params(), {});
  const double gap = (r.operating.total_per_interval - exact.gain) * fixtures::kHorizon;
  EXPECT_GE(gap, -1e-6);
  EXPECT_LT(gap, 1.0);
}

TEST(OptimizeTank, RejectsInvalidInputs) {
  auto params = fixtures::params();
  params.eps_p = 0.0;
  EXPECT_EQ(kind_of([&] {
              optimize_policy_for_tank(8.0, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                       params, {});
            }),
            ErrorKind::invalid_instance);
}

namespace {

OptimizeOptions quick_options() {
  OptimizeOptions o;
  o.spsa.iterations = 400;
  o.spsa.restarts = 1;
  return o;
}

}  // namespace

TEST(Sweep, BestDominatesEveryCandidate) {
  const std::vector<double> V{4, 6, 8, 10, 12};
  const auto r = codesign_sweep(V, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                fixtures::params(), fixtures::kHorizon, quick_options());
  ASSERT_EQ(r.per_candidate.size(), V.size());
  for (const auto& c : r.per_candidate) {
    ASSERT_TRUE(c.ok) << c.error;
    EXPECT_LE(r.J_star, c.total);
    EXPECT_DOUBLE_EQ(c.total, c.capital + c.operating_N);
  }
  EXPECT_EQ(r.best_V, r.per_candidate[r.best_index].volume);
  EXPECT_EQ(r.best_spec.n, static_cast<int>(r.best_V));
}

TEST(Sweep, SingleCandidate) {
  const std::vector<double> V{8};
  const auto r = codesign_sweep(V, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                fixtures::params(), fixtures::kHorizon, quick_options());
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_EQ(r.best_V, 8.0);
}

TEST(Sweep, TiesGoToSmallerTank) {
  // No horizon and free capital make every candidate cost zero.
  const std::vector<double> V{12, 6, 9};
  const auto r = codesign_sweep(V, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                fixtures::params(0.0), 0, quick_options());
  EXPECT_EQ(r.best_V, 6.0);
  EXPECT_EQ(r.best_index, 1u);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  const std::vector<double> V{5, 7, 8, 9, 11};
  const auto one = codesign_sweep(V, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                  fixtures::params(), fixtures::kHorizon, quick_options(), 1);
  const auto three = codesign_sweep(V, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                    fixtures::params(), fixtures::kHorizon, quick_options(), 3);
  ASSERT_EQ(one.per_candidate.size(), three.per_candidate.size());
  for (std::size_t k = 0; k < V.size(); ++k) {
    EXPECT_EQ(one.per_candidate[k].total, three.per_candidate[k].total);
    EXPECT_EQ(one.per_candidate[k].policy.flatten(), three.per_candidate[k].policy.flatten());
  }
  EXPECT_EQ(one.best_index, three.best_index);
}

TEST(Sweep, CandidateResultIndependentOfGrid) {
  const std::vector<double> a{6, 8};
  const std::vector<double> b{8, 10, 12};
  const auto ra = codesign_sweep(a, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                 fixtures::params(), fixtures::kHorizon, quick_options());
  const auto rb = codesign_sweep(b, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                 fixtures::params(), fixtures::kHorizon, quick_options());
  EXPECT_EQ(ra.per_candidate[1].total, rb.per_candidate[0].total);
}

TEST(Sweep, FailingCandidatesAreReported) {
  // V = 1 leaves an empty band under the unit geometry.
  const std::vector<double> V{1, 8};
  const auto r = codesign_sweep(V, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                                fixtures::params(), fixtures::kHorizon, quick_options());
  EXPECT_FALSE(r.per_candidate[0].ok);
  EXPECT_FALSE(r.per_candidate[0].error.empty());
  EXPECT_EQ(r.best_V, 8.0);
  const std::vector<double> bad{1, 1.5};
  EXPECT_EQ(kind_of([&] {
              codesign_sweep(bad, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                             fixtures::params(), fixtures::kHorizon, quick_options());
            }),
            ErrorKind::optimization_failure);
  EXPECT_EQ(kind_of([&] {
              codesign_sweep({}, fixtures::unit_demand(), fixtures::price(), fixtures::unit_rule(),
                             fixtures::params(), fixtures::kHorizon, quick_options());
            }),
            ErrorKind::invalid_instance);
}

TEST(ParallelFor, RunsEveryIndexOnce) {
  std::vector<int> hits(37, 0);
  parallel_for(hits.size(), 4, [&](std::size_t k) { ++hits[k]; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(GeometryRuleTest, FloorVolume) {
  GeometryRule rule = fixtures::spread_rule();
  rule.delta_x = 0.1548;
  rule.floor_volume = true;
  // 3 / 0.1548 = 19.38 and 10 / 0.1548 = 64.6
  EXPECT_EQ(rule.build(3.0, fixtures::spread_demand()).n, 19);
  EXPECT_EQ(rule.build(10.0, fixtures::spread_demand()).n, 64);
  EXPECT_EQ(rule.build(0.1548 * 30, fixtures::spread_demand()).n, 30);
}
