#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aepg/core.hpp"
#include "aepg/errors.hpp"
#include "aepg/problems.hpp"
#include "aepg/rng.hpp"

namespace aepg {

// Gradient-evaluation accounting. One full gradient is charged as N
// component evaluations; a variance-reduction step is charged b evaluations
// (each sampled index is visited once, yielding the gradient difference at
// the two query points).
struct GradientCost {
  std::uint64_t full_evals = 0;
  std::uint64_t component_evals = 0;

  std::uint64_t total_component_equivalents(std::uint64_t n) const {
    return component_evals + n * full_evals;
  }
};

// (1/|idx|) sum_{i in idx} grad f_i(x); repeated indices count with
// multiplicity (sampling is with replacement).
inline DenseVector minibatch_gradient(const FiniteSumProblem& p,
                                      std::span<const Index> idx,
                                      const DenseVector& x) {
  if (idx.empty()) throw DomainError("minibatch_gradient: empty index set");
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(p.dimension());
  for (const Index i : idx) acc += p.component_gradient(i, x).array();
  return DenseVector(Eigen::ArrayXd(acc / static_cast<double>(idx.size())));
}

// Recursive path-integrated gradient estimator:
//   g^t = grad f(y^t)                                        if t mod q == 0
//   g^t = g^{t-1} + grad f(y^t; I) - grad f(y^{t-1}; I)      otherwise,
// with I of size b drawn uniformly with replacement from its own seeded
// stream ("spider" domain). At every epoch boundary the emitted estimate is
// the exact full gradient. One estimator per run; not thread-shared.
class SpiderEstimator {
 public:
  SpiderEstimator(Index q, Index b, std::uint64_t seed,
                  bool force_full_batch = false)
      : q_(q), b_(b), rng_(domain_rng(seed, "spider")),
        force_full_batch_(force_full_batch) {
    if (q_ < 1) throw DomainError("SpiderEstimator: q must be >= 1");
    if (b_ < 1) throw DomainError("SpiderEstimator: b must be >= 1");
  }

  DenseVector estimate(const FiniteSumProblem& p, const DenseVector& y_t) {
    if (y_t.size() != p.dimension())
      throw DimensionError("SpiderEstimator: query dimension mismatch");
    const Index n = p.component_count();
    if (b_ > n) throw DomainError("SpiderEstimator: b exceeds component count");

    DenseVector g;
    if (t_ % static_cast<std::uint64_t>(q_) == 0) {
      g = p.full_gradient(y_t);
      cost_.full_evals += 1;
    } else if (force_full_batch_) {
      // debug mode: I = {1..N}, each index once; differences telescope
      std::vector<Index> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), Index{0});
      g = correction(p, idx, y_t);
      cost_.component_evals += static_cast<std::uint64_t>(n);
    } else {
      std::vector<Index> idx(static_cast<std::size_t>(b_));
      for (auto& i : idx)
        i = static_cast<Index>(rng_.uniform_index(static_cast<std::uint64_t>(n)));
      g = correction(p, idx, y_t);
      cost_.component_evals += static_cast<std::uint64_t>(b_);
    }

    g_prev_ = g;
    y_prev_ = y_t;
    ++t_;
    return g;
  }

  std::uint64_t iteration() const { return t_; }
  const GradientCost& cost() const { return cost_; }
  Index epoch_length() const { return q_; }
  Index batch_size() const { return b_; }

 private:
  DenseVector correction(const FiniteSumProblem& p, std::span<const Index> idx,
                         const DenseVector& y_t) const {
    const DenseVector at_curr = minibatch_gradient(p, idx, y_t);
    const DenseVector at_prev = minibatch_gradient(p, idx, y_prev_);
    return DenseVector(Eigen::ArrayXd(g_prev_.array() + at_curr.array() -
                                      at_prev.array()));
  }

  Index q_, b_;
  Rng rng_;
  bool force_full_batch_;
  DenseVector g_prev_;
  DenseVector y_prev_;
  std::uint64_t t_ = 0;
  GradientCost cost_;
};

}  // namespace aepg
