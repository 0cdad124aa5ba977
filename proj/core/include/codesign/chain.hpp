#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "codesign/model.hpp"

namespace codesign {

/// Markov-chain state: volume index `i` in `0..n`, phase `kappa` in `0..T-1`.
struct ChainState {
  int i = 0;
  std::size_t kappa = 0;
};

/// Phase-major flattening: all volumes of phase 0, then phase 1, ...
inline std::size_t flat_index(const ChainState& s, int n) {
  return s.kappa * static_cast<std::size_t>(n + 1) + static_cast<std::size_t>(s.i);
}

inline ChainState state_of(std::size_t flat, int n) {
  const auto width = static_cast<std::size_t>(n + 1);
  return {static_cast<int>(flat % width), flat / width};
}

struct Transition {
  ChainState from;
  ChainState to;
  double prob = 0.0;
};

/// Row-stochastic transition matrix over the flat state space. Only strictly
/// positive probabilities are stored.
class TransitionMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

  TransitionMatrix(int n, std::size_t period_T, Sparse matrix);

  int n() const { return n_; }
  std::size_t period() const { return period_T_; }
  std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Sparse& matrix() const { return matrix_; }

  double prob(const ChainState& from, const ChainState& to) const;
  std::vector<double> row_sums() const;
  std::vector<Transition> transitions() const;

 private:
  int n_;
  std::size_t period_T_;
  Sparse matrix_;
};

struct StationaryDistribution {
  int n = 0;
  std::size_t period_T = 1;
  std::vector<double> pi;
  /// Infinity norm of P^T pi - pi at solve time.
  double residual = 0.0;

  double at(const ChainState& s) const { return pi[flat_index(s, n)]; }
};

/// Assembles the transition matrix of the closed-loop volume evolution under
/// the threshold policy. Mass landing on the same target from different
/// demand levels (or from the clamp at empty) is accumulated.
TransitionMatrix build_chain(const QuantizedDemandModel& demand, const PriceModel& price,
                             const ChainSpec& spec, const ThresholdPolicy& policy);

/// True iff the graph of strictly positive transitions is strongly connected.
bool check_irreducible(const TransitionMatrix& P);

enum class SolveMethod { automatic, dense, sparse };

/// Chains up to this many states are solved with a dense LU by default;
/// larger ones with a sparse LU.
inline constexpr std::size_t kDenseSolveLimit = 128;

/// Solves P^T pi = pi, sum(pi) = 1 directly (the chain is periodic for T > 1,
/// so power iteration is not used). Throws `not_irreducible` for reducible
/// chains and `solver_failure` if the residual exceeds 1e-10.
StationaryDistribution stationary(const TransitionMatrix& P,
                                  SolveMethod method = SolveMethod::automatic);

/// Closed-form probability of the empty state for the single-phase,
/// unit-constant-demand, pump-twice-demand geometry (n_p = 0, n_s = V - 1)
/// under a state-independent threshold.
double analytic_pi0_example1(double alpha, int V, const PriceModel& price);

/// Full stationary vector for the same geometry, built from the closed-form
/// empty-state probability and the birth-death balance relations.
StationaryDistribution analytic_stationary_example1(double alpha, int V, const PriceModel& price);

/// max over states of |counts/N - pi|.
double visit_frequencies_match(const StationaryDistribution& pi,
                               std::span<const std::uint64_t> counts, std::uint64_t N);

}  // namespace codesign
