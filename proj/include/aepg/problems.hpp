#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aepg/core.hpp"
#include "aepg/dataset_io.hpp"
#include "aepg/errors.hpp"
#include "aepg/prox.hpp"
#include "aepg/rng.hpp"

namespace aepg {

// Composite finite-sum problem  F(x) = (1/N) sum_i f_i(x) + h(x).
// Instances are immutable after construction; gradient evaluation is pure.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual Index dimension() const = 0;
  virtual Index component_count() const = 0;
  virtual double objective_smooth(const DenseVector& x) const = 0;
  virtual DenseVector component_gradient(Index i, const DenseVector& x) const = 0;
  virtual const ProxOperator& prox() const = 0;
  virtual std::string descriptor() const = 0;
  virtual std::uint64_t content_hash() const = 0;

  virtual DenseVector full_gradient(const DenseVector& x) const {
    const Index n = component_count();
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(dimension());
    for (Index i = 0; i < n; ++i) acc += component_gradient(i, x).array();
    return DenseVector(Eigen::ArrayXd(acc / static_cast<double>(n)));
  }

  // F(x) = f(x) + h(x); nullopt when x is infeasible for the indicator part.
  std::optional<double> objective(const DenseVector& x) const {
    const auto hx = prox().evaluate(x);
    if (!hx) return std::nullopt;
    return objective_smooth(x) + *hx;
  }
};

namespace detail {
inline std::uint64_t fnv1a_bytes(const void* data, std::size_t len,
                                 std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename Derived>
std::uint64_t hash_matrix(const Eigen::MatrixBase<Derived>& m,
                          std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      h = fnv1a_bytes(&v, sizeof(v), h);
    }
  return h;
}
}  // namespace detail

// Data matrix normalized to unit Frobenius norm, with provenance.
class DatasetMatrix {
 public:
  DatasetMatrix(RowMatrix raw, std::string provenance)
      : matrix_(std::move(raw)), provenance_(std::move(provenance)) {
    const double fro = matrix_.norm();
    if (fro == 0.0) throw DomainError("DatasetMatrix: zero matrix");
    matrix_ /= fro;
  }

  const RowMatrix& matrix() const { return matrix_; }
  Eigen::Index rows() const { return matrix_.rows(); }
  Eigen::Index cols() const { return matrix_.cols(); }
  const std::string& provenance() const { return provenance_; }
  double frobenius_norm() const { return matrix_.norm(); }

 private:
  RowMatrix matrix_;
  std::string provenance_;
};

// i.i.d. standard-normal entries from the seeded "dataset" stream (filled
// row by row), then Frobenius-normalized.
inline DatasetMatrix gen_synthetic_matrix(Eigen::Index rows, Eigen::Index cols,
                                          std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw DimensionError("gen_synthetic_matrix: rows and cols must be >= 1");
  Rng rng = domain_rng(seed, "dataset");
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return DatasetMatrix(std::move(m),
                       "randn-" + std::to_string(rows) + "-" +
                           std::to_string(cols) + "-seed" + std::to_string(seed));
}

// Sparse phase retrieval:  f_i(x) = (<x, A_i>^2 - y_i)^2  with a capped-l1
// plus box penalty. Rows of A are the measurement vectors.
class PhaseRetrievalInstance : public FiniteSumProblem {
 public:
  PhaseRetrievalInstance(RowMatrix a, Eigen::VectorXd y, double lambda,
                         double tau, double radius, std::string provenance,
                         Eigen::VectorXd ground_truth = {})
      : a_(std::move(a)),
        y_(std::move(y)),
        prox_(ProxOperator::capped_l1(lambda, tau, radius)),
        lambda_(lambda),
        tau_(tau),
        radius_(radius),
        provenance_(std::move(provenance)),
        ground_truth_(std::move(ground_truth)) {
    if (a_.rows() != y_.size())
      throw DimensionError("PhaseRetrievalInstance: rows(A) != len(y)");
  }

  Index dimension() const override { return a_.cols(); }
  Index component_count() const override { return a_.rows(); }

  double objective_smooth(const DenseVector& x) const override {
    const Eigen::VectorXd xv = x.array().matrix();
    const Eigen::VectorXd z = a_ * xv;
    return (z.array().square() - y_.array()).square().sum() /
           static_cast<double>(a_.rows());
  }

  DenseVector component_gradient(Index i, const DenseVector& x) const override {
    if (i < 0 || i >= a_.rows())
      throw DomainError("component_gradient: index out of range");
    const double z = a_.row(i).dot(x.array().matrix());
    const double w = 4.0 * (z * z - y_[i]) * z;
    return DenseVector(Eigen::ArrayXd(w * a_.row(i).transpose().array()));
  }

  DenseVector full_gradient(const DenseVector& x) const override {
    const Eigen::VectorXd xv = x.array().matrix();
    const Eigen::VectorXd z = a_ * xv;
    const Eigen::VectorXd w =
        (4.0 / static_cast<double>(a_.rows())) *
        ((z.array().square() - y_.array()) * z.array()).matrix();
    return DenseVector(Eigen::ArrayXd((a_.transpose() * w).array()));
  }

  const ProxOperator& prox() const override { return prox_; }

  std::string descriptor() const override {
    std::ostringstream os;
    os << "phase_retrieval(N=" << a_.rows() << ",n=" << a_.cols()
       << ",lambda=" << lambda_ << ",tau=" << tau_ << ",r=" << radius_ << ","
       << provenance_ << ")";
    return os.str();
  }

  std::uint64_t content_hash() const override {
    std::uint64_t h = detail::hash_matrix(a_);
    h = detail::hash_matrix(y_, h);
    h = detail::fnv1a_bytes(&lambda_, sizeof(lambda_), h);
    h = detail::fnv1a_bytes(&tau_, sizeof(tau_), h);
    h = detail::fnv1a_bytes(&radius_, sizeof(radius_), h);
    return h;
  }

  const RowMatrix& measurements() const { return a_; }
  const Eigen::VectorXd& observations() const { return y_; }
  const Eigen::VectorXd& ground_truth() const { return ground_truth_; }

 private:
  RowMatrix a_;
  Eigen::VectorXd y_;
  ProxOperator prox_;
  double lambda_, tau_, radius_;
  std::string provenance_;
  Eigen::VectorXd ground_truth_;
};

struct PhaseRetrievalParams {
  double sparsity = 0.1;    // fraction of nonzero signal entries
  double noise = 0.001;     // relative noise level on the observations
  double lambda = 0.01;
  double tau = 0.1;
  double radius = 10.0;
  std::uint64_t seed = 0;
};

// Builds the observation model: a sparse ground truth with floor(sparsity*n)
// support entries drawn standard normal, u = (Ax*) o (Ax*), and
// y = u + noise * ||u|| * randn(N).
inline PhaseRetrievalInstance gen_phase_retrieval(const DatasetMatrix& data,
                                                  const PhaseRetrievalParams& p) {
  const RowMatrix& a = data.matrix();
  const Eigen::Index n = a.cols();
  const Eigen::Index support =
      static_cast<Eigen::Index>(std::floor(p.sparsity * static_cast<double>(n)));

  Rng rng = domain_rng(p.seed, "signal");
  Eigen::VectorXd x_star = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < support; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           rng.uniform_index(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    x_star[idx[static_cast<std::size_t>(i)]] = rng.normal();
  }

  const Eigen::VectorXd ax = a * x_star;
  const Eigen::VectorXd u = ax.array().square();
  Eigen::VectorXd y = u;
  if (p.noise != 0.0) {
    const double scale = p.noise * u.norm();
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += scale * rng.normal();
  }
  return PhaseRetrievalInstance(a, std::move(y), p.lambda, p.tau, p.radius,
                                data.provenance(), std::move(x_star));
}

// Linear eigenvalue problem  min tr(V^T C V) + tr(C)  s.t.  V^T V = I,
// with C = -D^T D. Exposed as a one-component finite sum over vec(V)
// (column-major), so the same engine drives both experiments.
class EigenvalueInstance : public FiniteSumProblem {
 public:
  EigenvalueInstance(Eigen::MatrixXd c, Index rank, std::string provenance)
      : c_(std::move(c)),
        rank_(rank),
        prox_(ProxOperator::stiefel(c_.rows(), rank)),
        provenance_(std::move(provenance)) {
    if (c_.rows() != c_.cols())
      throw DimensionError("EigenvalueInstance: C must be square");
    if (rank_ < 1 || rank_ > c_.rows())
      throw DimensionError("EigenvalueInstance: need 1 <= rank <= dim");
  }

  Index dimension() const override { return c_.rows() * rank_; }
  Index component_count() const override { return 1; }

  double objective_smooth(const DenseVector& x) const override {
    const auto v = as_matrix(x);
    return (v.transpose() * c_ * v).trace() + c_.trace();
  }

  DenseVector component_gradient(Index i, const DenseVector& x) const override {
    if (i != 0) throw DomainError("component_gradient: index out of range");
    return full_gradient(x);
  }

  DenseVector full_gradient(const DenseVector& x) const override {
    const auto v = as_matrix(x);
    Eigen::MatrixXd g = 2.0 * (c_ * v);
    return DenseVector(Eigen::ArrayXd(
        Eigen::Map<const Eigen::ArrayXd>(g.data(), g.size())));
  }

  const ProxOperator& prox() const override { return prox_; }

  std::string descriptor() const override {
    std::ostringstream os;
    os << "eigenvalue(d=" << c_.rows() << ",rank=" << rank_ << "," << provenance_
       << ")";
    return os.str();
  }

  std::uint64_t content_hash() const override {
    std::uint64_t h = detail::hash_matrix(c_);
    const std::uint64_t r = static_cast<std::uint64_t>(rank_);
    return detail::fnv1a_bytes(&r, sizeof(r), h);
  }

  const Eigen::MatrixXd& quadratic_matrix() const { return c_; }
  Index rank() const { return rank_; }

 private:
  Eigen::Map<const Eigen::MatrixXd> as_matrix(const DenseVector& x) const {
    if (x.size() != dimension())
      throw DimensionError("EigenvalueInstance: bad vec(V) length");
    return Eigen::Map<const Eigen::MatrixXd>(x.array().data(), c_.rows(), rank_);
  }

  Eigen::MatrixXd c_;
  Index rank_;
  ProxOperator prox_;
  std::string provenance_;
};

inline EigenvalueInstance build_eigenvalue(const DatasetMatrix& data, Index rank) {
  if (rank < 1 || rank > data.cols())
    throw DimensionError("build_eigenvalue: need 1 <= rank <= cols");
  Eigen::MatrixXd c = -(data.matrix().transpose() * data.matrix());
  return EigenvalueInstance(std::move(c), rank, data.provenance());
}

// Central finite differences of the smooth objective against the analytic
// full gradient; returns the max over coordinates of
// |fd_j - g_j| / max(1, |g_j|).
inline double gradient_check(const FiniteSumProblem& p, const DenseVector& x,
                             double eps = 1e-5) {
  const DenseVector g = p.full_gradient(x);
  double worst = 0.0;
  Eigen::ArrayXd xs = x.array();
  for (Index j = 0; j < x.size(); ++j) {
    const double orig = xs[j];
    xs[j] = orig + eps;
    const double fp = p.objective_smooth(DenseVector(Eigen::ArrayXd(xs)));
    xs[j] = orig - eps;
    const double fm = p.objective_smooth(DenseVector(Eigen::ArrayXd(xs)));
    xs[j] = orig;
    const double fd = (fp - fm) / (2.0 * eps);
    const double rel = std::fabs(fd - g[j]) / std::max(1.0, std::fabs(g[j]));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace aepg
