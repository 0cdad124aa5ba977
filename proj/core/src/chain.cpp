#include "codesign/chain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "codesign/error.hpp"
#include "codesign/gaussian.hpp"

namespace codesign {

namespace {

constexpr double kResidualTol = 1e-10;

using Triplet = Eigen::Triplet<double, std::int64_t>;

}  // namespace

TransitionMatrix::TransitionMatrix(int n, std::size_t period_T, Sparse matrix)
    : n_(n), period_T_(period_T), matrix_(std::move(matrix)) {
  matrix_.prune([](std::int64_t, std::int64_t, double v) { return v > 0.0; });
  matrix_.makeCompressed();
}

double TransitionMatrix::prob(const ChainState& from, const ChainState& to) const {
  return matrix_.coeff(static_cast<std::int64_t>(flat_index(from, n_)),
                       static_cast<std::int64_t>(flat_index(to, n_)));
}

std::vector<double> TransitionMatrix::row_sums() const {
  std::vector<double> sums(size(), 0.0);
  for (std::int64_t r = 0; r < matrix_.outerSize(); ++r)
    for (Sparse::InnerIterator it(matrix_, r); it; ++it) sums[static_cast<std::size_t>(r)] += it.value();
  return sums;
}

std::vector<Transition> TransitionMatrix::transitions() const {
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(matrix_.nonZeros()));
  for (std::int64_t r = 0; r < matrix_.outerSize(); ++r)
    for (Sparse::InnerIterator it(matrix_, r); it; ++it)
      out.push_back({state_of(static_cast<std::size_t>(r), n_),
                     state_of(static_cast<std::size_t>(it.col()), n_), it.value()});
  return out;
}

TransitionMatrix build_chain(const QuantizedDemandModel& demand, const PriceModel& price,
                             const ChainSpec& spec, const ThresholdPolicy& policy) {
  require_valid(demand, price, spec);
  if (const auto pr = validate_policy(policy, spec); !pr.ok())
    throw Error(ErrorKind::dimension_mismatch, pr.summary());

  const int n = spec.n;
  const std::size_t T = spec.period_T;
  const auto m = static_cast<int>(demand.levels());
  const auto width = static_cast<std::size_t>(n + 1);

  std::vector<Triplet> triplets;
  triplets.reserve(spec.num_states() * static_cast<std::size_t>(2 * m));
  std::vector<double> row(width, 0.0);

  for (std::size_t kappa = 0; kappa < T; ++kappa) {
    const std::size_t next = (kappa + 1) % T;
    const auto& a = demand.probs[kappa];
    for (int i = 0; i <= n; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      if (i > spec.n_s) {
        for (int tau = 0; tau < m; ++tau)
          if (a[tau] > 0.0) row[i - tau] += a[tau];
      } else if (i > spec.n_p) {
        const double alpha = policy.at(kappa, i);
        const double pump = gaussian::cdf(alpha, price.mean[kappa], price.std[kappa]);
        const double idle = gaussian::sf(alpha, price.mean[kappa], price.std[kappa]);
        for (int tau = 0; tau < m; ++tau) {
          if (!(a[tau] > 0.0)) continue;
          if (pump > 0.0) row[i + spec.zeta - tau] += pump * a[tau];
          if (idle > 0.0) row[i - tau] += idle * a[tau];
        }
      } else {
        for (int tau = 0; tau < m; ++tau)
          if (a[tau] > 0.0) row[std::max(0, i + spec.zeta - tau)] += a[tau];
      }

      const auto from = static_cast<std::int64_t>(kappa * width + static_cast<std::size_t>(i));
      for (std::size_t j = 0; j < width; ++j)
        if (row[j] > 0.0)
          triplets.emplace_back(from, static_cast<std::int64_t>(next * width + j), row[j]);
    }
  }

  const auto size = static_cast<std::int64_t>(spec.num_states());
  TransitionMatrix::Sparse P(size, size);
  P.setFromTriplets(triplets.begin(), triplets.end());
  return TransitionMatrix(n, T, std::move(P));
}

bool check_irreducible(const TransitionMatrix& P) {
  const std::size_t size = P.size();
  if (size == 0) return false;
  // Only strictly positive entries are stored, so the sparsity pattern is the
  // transition graph. Column-major storage of the same pattern gives the
  // reverse graph.
  const auto& forward = P.matrix();
  const Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t> reverse = forward;

  // Strongly connected iff every state is reachable from state 0 in both the
  // graph and its reverse.
  std::vector<std::int64_t> stack;
  std::vector<char> seen;
  auto reaches_all = [&](const auto& adj) {
    seen.assign(size, 0);
    stack.assign(1, 0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const std::int64_t u = stack.back();
      stack.pop_back();
      for (typename std::decay_t<decltype(adj)>::InnerIterator it(adj, u); it; ++it) {
        const auto v = static_cast<std::size_t>(it.index());
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(it.index());
        }
      }
    }
    return count == size;
  };
  return reaches_all(forward) && reaches_all(reverse);
}

namespace {

double balance_residual(const TransitionMatrix::Sparse& P, const Eigen::VectorXd& pi) {
  const Eigen::VectorXd r = P.transpose() * pi - pi;
  return r.lpNorm<Eigen::Infinity>();
}

// Balance equations P^T pi - pi = 0 with the last one replaced by sum(pi) = 1.
Eigen::VectorXd solve_dense(const TransitionMatrix::Sparse& P) {
  const auto size = P.rows();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(size, size);
  for (std::int64_t r = 0; r < P.outerSize(); ++r)
    for (TransitionMatrix::Sparse::InnerIterator it(P, r); it; ++it) A(it.col(), r) += it.value();
  A.diagonal().array() -= 1.0;
  A.row(size - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(size);
  b(size - 1) = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd pi = lu.solve(b);
  if (balance_residual(P, pi) > kResidualTol) pi += lu.solve(b - A * pi);
  return pi;
}

Eigen::VectorXd solve_sparse(const TransitionMatrix::Sparse& P) {
  const auto size = P.rows();
  const auto last = size - 1;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(P.nonZeros() + 2 * size));
  for (std::int64_t r = 0; r < P.outerSize(); ++r)
    for (TransitionMatrix::Sparse::InnerIterator it(P, r); it; ++it)
      if (it.col() != last) t.emplace_back(it.col(), r, it.value());
  for (std::int64_t k = 0; k < last; ++k) t.emplace_back(k, k, -1.0);
  // Pinning pi[last] = 1 instead of a dense normalization row keeps the
  // factorization sparse; any n-1 balance rows of an irreducible chain are
  // independent, and the caller normalizes.
  t.emplace_back(last, last, 1.0);

  Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t> A(size, size);
  A.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<decltype(A), Eigen::COLAMDOrdering<std::int64_t>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorKind::solver_failure, "sparse LU factorization failed: " + lu.lastErrorMessage());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(size);
  b(last) = 1.0;
  Eigen::VectorXd pi = lu.solve(b);
  // Unnormalized here, so refine unconditionally rather than test the residual.
  pi += lu.solve(b - A * pi);
  return pi;
}

}  // namespace

StationaryDistribution stationary(const TransitionMatrix& P, SolveMethod method) {
  if (!check_irreducible(P))
    throw Error(ErrorKind::not_irreducible,
                "stationary distribution not unique: the chain is reducible");

  if (method == SolveMethod::automatic)
    method = P.size() <= kDenseSolveLimit ? SolveMethod::dense : SolveMethod::sparse;
  Eigen::VectorXd pi =
      method == SolveMethod::dense ? solve_dense(P.matrix()) : solve_sparse(P.matrix());

  for (Eigen::Index k = 0; k < pi.size(); ++k) {
    if (!std::isfinite(pi(k)) || pi(k) < -1e-12) {
      std::ostringstream os;
      os << "stationary solve produced invalid probability " << pi(k) << " at state " << k;
      throw Error(ErrorKind::solver_failure, os.str());
    }
    if (pi(k) < 0.0) pi(k) = 0.0;
  }
  pi /= pi.sum();

  const double residual = balance_residual(P.matrix(), pi);
  if (residual > kResidualTol) {
    std::ostringstream os;
    os << "stationary solve residual " << residual << " exceeds " << kResidualTol;
    throw Error(ErrorKind::solver_failure, os.str());
  }

  StationaryDistribution out;
  out.n = P.n();
  out.period_T = P.period();
  out.pi.assign(pi.data(), pi.data() + pi.size());
  out.residual = residual;
  return out;
}

namespace {

double pump_probability_example1(double alpha, int V, const PriceModel& price) {
  if (price.period_T != 1 || price.mean.size() != 1 || price.std.size() != 1)
    throw Error(ErrorKind::geometry_mismatch, "closed form needs a single-phase price model");
  if (V < 2) throw Error(ErrorKind::geometry_mismatch, "closed form needs V >= 2");
  const double p = price.cdf(0, alpha);
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorKind::not_irreducible,
                "pumping probability must lie strictly inside (0, 1) for a unique distribution");
  return p;
}

}  // namespace

double analytic_pi0_example1(double alpha, int V, const PriceModel& price) {
  const double p = pump_probability_example1(alpha, V, price);
  const double skew = 1.0 - 2.0 * p;
  if (std::abs(skew) < 1e-12) return 1.0 / (2.0 * V);
  const double q_pow = std::pow(1.0 - p, V - 1);
  const double p_pow = std::pow(p, V);
  const double num = p * skew * q_pow;
  return num / (num + p_pow * skew + p * q_pow - p_pow);
}

StationaryDistribution analytic_stationary_example1(double alpha, int V, const PriceModel& price) {
  const double p = pump_probability_example1(alpha, V, price);
  StationaryDistribution out;
  out.n = V;
  out.period_T = 1;
  out.pi.assign(static_cast<std::size_t>(V + 1), 0.0);
  auto& pi = out.pi;
  // Birth-death chain: flows across each cut balance.
  pi[0] = analytic_pi0_example1(alpha, V, price);
  pi[1] = pi[0] / (1.0 - p);
  for (int i = 1; i + 1 <= V - 1; ++i) pi[i + 1] = pi[i] * p / (1.0 - p);
  pi[V] = p * pi[V - 1];
  return out;
}

double visit_frequencies_match(const StationaryDistribution& pi,
                               std::span<const std::uint64_t> counts, std::uint64_t N) {
  if (counts.size() != pi.pi.size())
    throw Error(ErrorKind::dimension_mismatch, "visit counts and stationary vector differ in length");
  if (N == 0) throw Error(ErrorKind::dimension_mismatch, "visit counts cover zero steps");
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total != N) throw Error(ErrorKind::dimension_mismatch, "visit counts do not sum to N");
  double worst = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    worst = std::max(worst, std::abs(static_cast<double>(counts[k]) / static_cast<double>(N) - pi.pi[k]));
  return worst;
}

}  // namespace codesign
