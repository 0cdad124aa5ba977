#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "codesign/chain.hpp"
#include "codesign/error.hpp"
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

std::vector<std::vector<double>> dense(const TransitionMatrix& P) {
  std::vector<std::vector<double>> out(P.size(), std::vector<double>(P.size(), 0.0));
  for (const auto& t : P.transitions())
    out[flat_index(t.from, P.n())][flat_index(t.to, P.n())] = t.prob;
  return out;
}

TransitionMatrix example1_chain(int V, double alpha) {
  const auto spec = fixtures::unit_spec(V);
  return build_chain(fixtures::unit_demand(), fixtures::price(), spec,
                     ThresholdPolicy::constant(spec, alpha));
}

}  // namespace

TEST(FlatIndex, PhaseMajor) {
  EXPECT_EQ(flat_index({3, 2}, 4), 13u);
  const auto s = state_of(13, 4);
  EXPECT_EQ(s.i, 3);
  EXPECT_EQ(s.kappa, 2u);
}

TEST(BuildChain, HandEnumeratedFiveStates) {
  // n=4, demand 0 or 1 quanta with equal odds, pump adds 2, enforced pumping
  // at i<=1, threshold band {2} with alpha at the mean (pump with odds 1/2).
  const QuantizedDemandModel d{1.0, 1, {{0.5, 0.5}}};
  const ChainSpec spec{4, 1, 2, 0, 2, 1.0, 1};
  const auto P = build_chain(d, fixtures::price(), spec, ThresholdPolicy::constant(spec, 20.0));
  const std::vector<std::vector<double>> expected{
      {0.00, 0.50, 0.50, 0.00, 0.00},  // enforced: 0+2-0 = 2, 0+2-1 = 1
      {0.00, 0.00, 0.50, 0.50, 0.00},  // enforced: 3, 2
      {0.00, 0.25, 0.25, 0.25, 0.25},  // band: pump to 4 or 3, idle at 2 or 1
      {0.00, 0.00, 0.50, 0.50, 0.00},  // above band: 3 or 2
      {0.00, 0.00, 0.00, 0.50, 0.50},
  };
  EXPECT_EQ(dense(P), expected);
  EXPECT_FALSE(check_irreducible(P));  // nothing leads back to empty
}

TEST(BuildChain, UnitDemandBandRowsHaveTwoEntries) {
  const double alpha = 17.0;
  const auto P = example1_chain(8, alpha);
  const double p = fixtures::price().cdf(0, alpha);
  for (int i = 1; i <= 7; ++i) {
    int nonzeros = 0;
    for (const auto& t : P.transitions())
      if (t.from.i == i) ++nonzeros;
    EXPECT_EQ(nonzeros, 2);
    EXPECT_DOUBLE_EQ(P.prob({i, 0}, {i + 1, 0}), p);
    EXPECT_DOUBLE_EQ(P.prob({i, 0}, {i - 1, 0}), 1.0 - p);
  }
  EXPECT_DOUBLE_EQ(P.prob({0, 0}, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(P.prob({8, 0}, {7, 0}), 1.0);
}

TEST(BuildChain, NeverPumpBandOnlyMovesDown) {
  const auto d = fixtures::spread_demand();
  const ChainSpec spec{40, 11, 28, 0, 20, 0.1, 1};
  const auto P = build_chain(d, fixtures::price(), spec, ThresholdPolicy::constant(spec, -INFINITY));
  for (const auto& t : P.transitions())
    if (t.from.i > spec.n_p && t.from.i <= spec.n_s) {
      EXPECT_LE(t.to.i, t.from.i);
      EXPECT_DOUBLE_EQ(t.prob, 0.2);
    }
}

TEST(BuildChain, RejectsMismatchedPolicy) {
  const auto spec = fixtures::unit_spec(8);
  const auto other = fixtures::unit_spec(9);
  EXPECT_EQ(kind_of([&] {
              build_chain(fixtures::unit_demand(), fixtures::price(), spec,
                          ThresholdPolicy::constant(other, 20.0));
            }),
            ErrorKind::dimension_mismatch);
  auto bad = spec;
  bad.n_s = 8;
  EXPECT_EQ(kind_of([&] {
              build_chain(fixtures::unit_demand(), fixtures::price(), bad,
                          ThresholdPolicy::constant(spec, 20.0));
            }),
            ErrorKind::invalid_instance);
}

TEST(BuildChainProperty, RowsStochasticAndBlockCyclic) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = fixtures::random_instance(rng, 4, 5, 2);
    const auto P = build_chain(inst.demand, inst.price, inst.spec, inst.policy);
    for (double s : P.row_sums()) EXPECT_NEAR(s, 1.0, 1e-12);
    for (const auto& t : P.transitions()) {
      EXPECT_GT(t.prob, 0.0);
      EXPECT_LE(t.prob, 1.0);
      EXPECT_EQ(t.to.kappa, (t.from.kappa + 1) % inst.spec.period_T);
      EXPECT_GE(t.to.i, 0);
      EXPECT_LE(t.to.i, inst.spec.n);
    }
  }
}

TEST(BuildChainProperty, MatchesOutcomeEnumeration) {
  std::mt19937_64 rng(202);
  int small = 0;
  for (int trial = 0; trial < 2000 && small < 150; ++trial) {
    const auto inst = fixtures::random_instance(rng, 3, 3);
    if (inst.spec.n > 6) continue;
    ++small;
    const auto P = dense(build_chain(inst.demand, inst.price, inst.spec, inst.policy));
    const auto Q = oracle::enumerate_transitions(inst.demand, inst.price, inst.spec, inst.policy);
    for (std::size_t r = 0; r < P.size(); ++r)
      for (std::size_t c = 0; c < P.size(); ++c) EXPECT_NEAR(P[r][c], Q[r][c], 1e-15);
  }
  EXPECT_GE(small, 100);
}

TEST(CheckIrreducible, UnitDemandChainIsIrreducible) {
  EXPECT_TRUE(check_irreducible(example1_chain(8, 20.0)));
}

TEST(CheckIrreducible, UnreachableTopStates) {
  // Never pump in the band; the enforced pump from empty lands at 3, so the
  // full state 4 is never entered.
  const ChainSpec spec{4, 0, 1, 0, 4, 1.0, 1};
  const auto P = build_chain(fixtures::unit_demand(), fixtures::price(), spec,
                             ThresholdPolicy::constant(spec, -INFINITY));
  EXPECT_FALSE(check_irreducible(P));
  EXPECT_EQ(kind_of([&] { stationary(P); }), ErrorKind::not_irreducible);
}

TEST(CheckIrreducible, ZeroEntriesAreNotEdges) {
  TransitionMatrix::Sparse M(2, 2);
  M.insert(0, 1) = 1.0;
  M.insert(1, 0) = 0.0;
  M.insert(1, 1) = 1.0;
  EXPECT_FALSE(check_irreducible(TransitionMatrix(1, 1, M)));
}

TEST(Stationary, UniformPumpOddsGiveOneOverTwoV) {
  const auto pi = stationary(example1_chain(8, 20.0));
  EXPECT_NEAR(pi.at({0, 0}), 0.0625, 1e-12);
  EXPECT_LE(pi.residual, 1e-10);
}

TEST(Stationary, MatchesClosedFormBelowMean) {
  const auto price = fixtures::price();
  EXPECT_NEAR(price.cdf(0, 18.0), 0.42074, 1e-5);
  const auto pi = stationary(example1_chain(8, 18.0));
  EXPECT_NEAR(pi.at({0, 0}), analytic_pi0_example1(18.0, 8, price), 1e-9);
}

TEST(Stationary, TwoPhaseCycleIsUniform) {
  TransitionMatrix::Sparse M(2, 2);
  M.insert(0, 1) = 1.0;
  M.insert(1, 0) = 1.0;
  const auto pi = stationary(TransitionMatrix(0, 2, M));
  EXPECT_NEAR(pi.pi[0], 0.5, 1e-15);
  EXPECT_NEAR(pi.pi[1], 0.5, 1e-15);
}

TEST(StationaryProperty, AgreesWithReferenceElimination) {
  std::mt19937_64 rng(303);
  int solved = 0;
  for (int trial = 0; trial < 300 && solved < 60; ++trial) {
    const auto inst = fixtures::random_instance(rng, 3, 4);
    const auto P = build_chain(inst.demand, inst.price, inst.spec, inst.policy);
    if (!check_irreducible(P)) continue;
    ++solved;
    const auto ref = oracle::stationary_gauss(dense(P));
    for (auto method : {SolveMethod::dense, SolveMethod::sparse}) {
      const auto pi = stationary(P, method);
      double sum = 0.0;
      for (std::size_t k = 0; k < pi.pi.size(); ++k) {
        EXPECT_NEAR(pi.pi[k], ref[k], 1e-12);
        EXPECT_GE(pi.pi[k], 0.0);
        sum += pi.pi[k];
      }
      EXPECT_NEAR(sum, 1.0, 1e-14);
      EXPECT_LE(pi.residual, 1e-10);
    }
  }
  EXPECT_GE(solved, 30);
}

TEST(StationaryProperty, PeriodicDailyChainSolves) {
  // 24 phases with a daily price and demand swing; the chain has period 24,
  // so every phase carries exactly 1/24 of the mass.
  const std::size_t T = 24;
  QuantizedDemandModel d{1.0, T, {}};
  PriceModel p;
  p.period_T = T;
  for (std::size_t k = 0; k < T; ++k) {
    const double w = std::sin(2.0 * M_PI * static_cast<double>(k) / T);
    d.probs.push_back({0.1, 0.4 + 0.2 * w, 0.4 - 0.2 * w, 0.1});
    p.mean.push_back(50.0 + 20.0 * w);
    p.std.push_back(15.0);
  }
  const ChainSpec spec{29, 2, 24, 1, 5, 1.0, T};
  std::vector<std::vector<double>> rows(T);
  for (std::size_t k = 0; k < T; ++k)
    for (int i = spec.n_p + 1; i <= spec.n_s; ++i) rows[k].push_back(p.mean[k] + 10.0 - 0.5 * i);
  const auto P = build_chain(d, p, spec, ThresholdPolicy(spec.n_p, spec.n_s, rows));
  ASSERT_TRUE(check_irreducible(P));
  const auto dense_pi = stationary(P, SolveMethod::dense);
  const auto sparse_pi = stationary(P, SolveMethod::sparse);
  EXPECT_LE(dense_pi.residual, 1e-10);
  EXPECT_LE(sparse_pi.residual, 1e-10);
  for (std::size_t k = 0; k < T; ++k) {
    double phase_mass = 0.0;
    for (int i = 0; i <= spec.n; ++i) phase_mass += dense_pi.at({i, k});
    EXPECT_NEAR(phase_mass, 1.0 / T, 1e-12);
  }
  for (std::size_t s = 0; s < P.size(); ++s) EXPECT_NEAR(dense_pi.pi[s], sparse_pi.pi[s], 1e-12);
}

TEST(AnalyticPi0, MatchesNumericSolveOverGrid) {
  const auto price = fixtures::price();
  for (int V = 4; V <= 12; ++V)
    for (int alpha = 12; alpha <= 28; ++alpha) {
      const auto pi = stationary(example1_chain(V, alpha));
      EXPECT_NEAR(analytic_pi0_example1(alpha, V, price), pi.at({0, 0}), 1e-9)
          << "V=" << V << " alpha=" << alpha;
      const auto full = analytic_stationary_example1(alpha, V, price);
      for (int i = 0; i <= V; ++i) EXPECT_NEAR(full.pi[static_cast<std::size_t>(i)], pi.at({i, 0}), 1e-9);
    }
}

TEST(AnalyticPi0, SymmetricCase) {
  const auto price = fixtures::price();
  EXPECT_DOUBLE_EQ(analytic_pi0_example1(20.0, 8, price), 0.0625);
  EXPECT_DOUBLE_EQ(analytic_pi0_example1(20.0, 4, price), 0.125);
  EXPECT_NEAR(analytic_pi0_example1(25.0, 8, price), stationary(example1_chain(8, 25.0)).at({0, 0}), 1e-9);
}

TEST(AnalyticPi0, Errors) {
  const auto price = fixtures::price();
  EXPECT_EQ(kind_of([&] { analytic_pi0_example1(20.0, 8, PriceModel::constant(2, 20, 10)); }),
            ErrorKind::geometry_mismatch);
  EXPECT_EQ(kind_of([&] { analytic_pi0_example1(20.0, 1, price); }), ErrorKind::geometry_mismatch);
  EXPECT_EQ(kind_of([&] { analytic_pi0_example1(-INFINITY, 8, price); }), ErrorKind::not_irreducible);
}

TEST(VisitFrequencies, ExactAndPerturbed) {
  StationaryDistribution pi{2, 1, {0.25, 0.5, 0.25}, 0.0};
  const std::vector<std::uint64_t> exact{100, 200, 100};
  EXPECT_EQ(visit_frequencies_match(pi, exact, 400), 0.0);
  const std::vector<std::uint64_t> off{102, 198, 100};
  EXPECT_NEAR(visit_frequencies_match(pi, off, 400), 2.0 / 400.0, 1e-15);
  const std::vector<std::uint64_t> short_counts{1, 2};
  EXPECT_EQ(kind_of([&] { visit_frequencies_match(pi, short_counts, 3); }), ErrorKind::dimension_mismatch);
  EXPECT_EQ(kind_of([&] { visit_frequencies_match(pi, exact, 401); }), ErrorKind::dimension_mismatch);
}
