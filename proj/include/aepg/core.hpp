#pragma once

#include <Eigen/Core>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>

#include "aepg/errors.hpp"

namespace aepg {

using Index = Eigen::Index;

// Dense real vector in the library's element-wise calculus. Immutable after
// construction; constructors reject NaN/Inf so downstream invariants are
// meaningful. All operations are pure and safe to share across threads.
class DenseVector {
 public:
  DenseVector() = default;

  explicit DenseVector(Eigen::ArrayXd values) : values_(std::move(values)) {
    if (!values_.isFinite().all())
      throw DomainError("DenseVector: non-finite entry");
  }

  DenseVector(std::initializer_list<double> values)
      : DenseVector(Eigen::ArrayXd(
            Eigen::Map<const Eigen::ArrayXd>(values.begin(),
                                             static_cast<Index>(values.size())))) {}

  static DenseVector zeros(Index n) {
    return DenseVector(Eigen::ArrayXd::Zero(n));
  }

  static DenseVector constant(Index n, double c) {
    return DenseVector(Eigen::ArrayXd::Constant(n, c));
  }

  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  const Eigen::ArrayXd& array() const { return values_; }

  double squared_norm() const { return values_.square().sum(); }
  double norm() const { return std::sqrt(squared_norm()); }
  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }

  bool operator==(const DenseVector& other) const {
    return values_.size() == other.values_.size() &&
           (values_ == other.values_).all();
  }

 private:
  Eigen::ArrayXd values_;
};

namespace detail {
inline void require_same_length(const DenseVector& a, const DenseVector& b,
                                const char* op) {
  if (a.size() != b.size())
    throw DimensionError(std::string(op) + ": length mismatch (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
}
}  // namespace detail

inline DenseVector add(const DenseVector& a, const DenseVector& b) {
  detail::require_same_length(a, b, "add");
  return DenseVector(a.array() + b.array());
}

inline DenseVector sub(const DenseVector& a, const DenseVector& b) {
  detail::require_same_length(a, b, "sub");
  return DenseVector(a.array() - b.array());
}

inline DenseVector mul(const DenseVector& a, const DenseVector& b) {
  detail::require_same_length(a, b, "mul");
  return DenseVector(a.array() * b.array());
}

inline DenseVector div(const DenseVector& a, const DenseVector& b) {
  detail::require_same_length(a, b, "div");
  if ((b.array() == 0.0).any()) throw DomainError("div: zero entry in divisor");
  return DenseVector(a.array() / b.array());
}

inline DenseVector scale(double c, const DenseVector& a) {
  return DenseVector(c * a.array());
}

enum class ElementwiseOp { Add, Sub, Mul, Div };

inline DenseVector elementwise(ElementwiseOp op, const DenseVector& a,
                               const DenseVector& b) {
  switch (op) {
    case ElementwiseOp::Add: return add(a, b);
    case ElementwiseOp::Sub: return sub(a, b);
    case ElementwiseOp::Mul: return mul(a, b);
    case ElementwiseOp::Div: return div(a, b);
  }
  throw DomainError("elementwise: unknown op");
}

// Strictly positive vector acting as a diagonal metric / inverse stepsize.
class WeightVector {
 public:
  explicit WeightVector(DenseVector values) : values_(std::move(values)) {
    if (values_.size() == 0) throw DomainError("WeightVector: empty");
    if (values_.min() <= 0.0)
      throw DomainError("WeightVector: non-positive entry");
  }

  static WeightVector uniform(Index n, double value) {
    return WeightVector(DenseVector::constant(n, value));
  }

  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  const DenseVector& values() const { return values_; }
  const Eigen::ArrayXd& array() const { return values_.array(); }
  double min() const { return values_.min(); }
  double max() const { return values_.max(); }
  bool is_uniform() const {
    return (values_.array() == values_.array()[0]).all();
  }

 private:
  DenseVector values_;
};

// Squared generalized norm  sum_i x_i^2 v_i.
inline double weighted_norm_sq(const DenseVector& x, const WeightVector& v) {
  detail::require_same_length(x, v.values(), "weighted_norm_sq");
  return (x.array().square() * v.array()).sum();
}

inline double weighted_norm(const DenseVector& x, const WeightVector& v) {
  return std::sqrt(weighted_norm_sq(x, v));
}

// min_i a_i / b_i, the scalar used by the extrapolation recursion.
inline double min_ratio(const WeightVector& a, const WeightVector& b) {
  detail::require_same_length(a.values(), b.values(), "min_ratio");
  return (a.array() / b.array()).minCoeff();
}

}  // namespace aepg
