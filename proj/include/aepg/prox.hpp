#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include "aepg/core.hpp"
#include "aepg/errors.hpp"

namespace aepg {

// Generalized proximal operator family:
//   prox_h(a; v) = argmin_x h(x) + 1/2 ||x - a||_v^2.
// Every member here admits an exact evaluation. Values are immutable and
// prox/evaluate are pure.

struct ZeroFunction {};

struct BoxIndicator {
  double radius;  // feasible set { x : |x_i| <= radius }
};

struct L1Penalty {
  double lambda;
  std::optional<double> box_radius;  // optional bound constraint
};

struct CappedL1 {
  double lambda;  // penalty weight
  double tau;     // cap threshold: penalty is lambda * max(|x|, tau) per entry
  double radius;  // box radius
};

struct StiefelIndicator {
  Index dim;   // rows d
  Index rank;  // columns, rank <= dim
};

namespace detail {
inline double clip(double x, double r) { return std::max(-r, std::min(r, x)); }
}  // namespace detail

// One-dimensional capped-l1 prox:
//   argmin_x q(x) = c/2 (x - a)^2 + lambda * max(|x|, tau),  |x| <= r.
// q is piecewise quadratic with kinks at +-tau, so the minimizer is among the
// box corners, the per-piece stationary points and the kinks. All candidates
// are scored unconditionally at the true q; ties break toward smaller |x|,
// then toward the larger value, so the output is deterministic.
inline double prox_capped_l1_scalar(double a, double c, double lambda,
                                    double tau, double r) {
  if (c <= 0.0) throw DomainError("prox_capped_l1_scalar: c must be positive");
  if (tau <= 0.0) throw DomainError("prox_capped_l1_scalar: tau must be positive");
  if (r <= 0.0) throw DomainError("prox_capped_l1_scalar: r must be positive");
  if (lambda < 0.0)
    throw DomainError("prox_capped_l1_scalar: lambda must be nonnegative");

  const auto q = [&](double x) {
    return 0.5 * c * (x - a) * (x - a) + lambda * std::max(std::fabs(x), tau);
  };

  const double candidates[] = {0.0,
                               -r,
                               r,
                               detail::clip(a - lambda / c, r),
                               detail::clip(a, r),
                               detail::clip(a + lambda / c, r),
                               detail::clip(-tau, r),
                               detail::clip(tau, r)};

  double best_x = candidates[0];
  double best_q = q(best_x);
  for (double x : candidates) {
    const double qx = q(x);
    if (qx < best_q ||
        (qx == best_q && (std::fabs(x) < std::fabs(best_x) ||
                          (std::fabs(x) == std::fabs(best_x) && x > best_x)))) {
      best_q = qx;
      best_x = x;
    }
  }
  return best_x;
}

// Projection of vec(M) onto { V : V^T V = I } via the polar factor of the
// thin SVD, M = U diag(s) V^T -> X = U V^T. Column-major reshape. The result
// does not depend on the (uniform) metric. Rank-deficient inputs still yield
// an orthonormal factor from the SVD basis.
inline DenseVector prox_stiefel(const DenseVector& a, Index dim, Index rank) {
  if (dim < rank || rank < 1)
    throw DimensionError("prox_stiefel: need dim >= rank >= 1");
  if (a.size() != dim * rank)
    throw DimensionError("prox_stiefel: input length " +
                         std::to_string(a.size()) + " != dim*rank");
  Eigen::Map<const Eigen::MatrixXd> m(a.array().data(), dim, rank);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::MatrixXd x = svd.matrixU() * svd.matrixV().transpose();
  return DenseVector(Eigen::ArrayXd(
      Eigen::Map<const Eigen::ArrayXd>(x.data(), dim * rank)));
}

class ProxOperator {
 public:
  using Kind =
      std::variant<ZeroFunction, BoxIndicator, L1Penalty, CappedL1, StiefelIndicator>;

  static ProxOperator zero() { return ProxOperator(ZeroFunction{}); }

  static ProxOperator box(double radius) {
    if (radius <= 0.0) throw DomainError("BoxIndicator: radius must be positive");
    return ProxOperator(BoxIndicator{radius});
  }

  static ProxOperator l1(double lambda,
                         std::optional<double> box_radius = std::nullopt) {
    if (lambda < 0.0) throw DomainError("L1Penalty: lambda must be nonnegative");
    if (box_radius && *box_radius <= 0.0)
      throw DomainError("L1Penalty: box radius must be positive");
    return ProxOperator(L1Penalty{lambda, box_radius});
  }

  static ProxOperator capped_l1(double lambda, double tau, double radius) {
    if (lambda < 0.0) throw DomainError("CappedL1: lambda must be nonnegative");
    if (tau <= 0.0) throw DomainError("CappedL1: tau must be positive");
    if (radius <= 0.0) throw DomainError("CappedL1: radius must be positive");
    return ProxOperator(CappedL1{lambda, tau, radius});
  }

  static ProxOperator stiefel(Index dim, Index rank) {
    if (dim < rank || rank < 1)
      throw DimensionError("StiefelIndicator: need dim >= rank >= 1");
    return ProxOperator(StiefelIndicator{dim, rank});
  }

  const Kind& kind() const { return kind_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&kind_);
  }

  // Whether dom(h) is bounded (realizes the compactness assumption).
  bool bounds_iterates() const {
    return std::visit(
        [](const auto& k) -> bool {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, BoxIndicator> ||
                        std::is_same_v<T, CappedL1> ||
                        std::is_same_v<T, StiefelIndicator>) {
            return true;
          } else if constexpr (std::is_same_v<T, L1Penalty>) {
            return k.box_radius.has_value();
          } else {
            return false;
          }
        },
        kind_);
  }

  DenseVector prox(const DenseVector& a, const WeightVector& v) const {
    detail::require_same_length(a, v.values(), "prox");
    return std::visit(
        [&](const auto& k) -> DenseVector { return prox_impl(k, a, v); }, kind_);
  }

  // h(x); std::nullopt marks an infeasible point (never a float Inf).
  std::optional<double> evaluate(const DenseVector& x) const {
    return std::visit(
        [&](const auto& k) -> std::optional<double> { return eval_impl(k, x); },
        kind_);
  }

  // A subgradient of the penalty (non-indicator) part at x, as used by the
  // subgradient-projection baseline. Indicators contribute nothing here.
  DenseVector penalty_subgradient(const DenseVector& x) const {
    if (const auto* l1 = get_if<L1Penalty>()) {
      return DenseVector(Eigen::ArrayXd(l1->lambda * x.array().sign()));
    }
    if (const auto* cl1 = get_if<CappedL1>()) {
      Eigen::ArrayXd g =
          cl1->lambda * x.array().sign() *
          (x.array().abs() >= cl1->tau).cast<double>();
      return DenseVector(std::move(g));
    }
    return DenseVector::zeros(x.size());
  }

  // Projection onto the indicator part of dom(h) (identity when unbounded).
  DenseVector project_feasible(const DenseVector& a) const {
    if (const auto* b = get_if<BoxIndicator>())
      return DenseVector(Eigen::ArrayXd(a.array().max(-b->radius).min(b->radius)));
    if (const auto* l1 = get_if<L1Penalty>()) {
      if (l1->box_radius)
        return DenseVector(
            Eigen::ArrayXd(a.array().max(-*l1->box_radius).min(*l1->box_radius)));
      return a;
    }
    if (const auto* c = get_if<CappedL1>())
      return DenseVector(Eigen::ArrayXd(a.array().max(-c->radius).min(c->radius)));
    if (const auto* s = get_if<StiefelIndicator>())
      return prox_stiefel(a, s->dim, s->rank);
    return a;
  }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, ZeroFunction>) return "zero";
          if constexpr (std::is_same_v<T, BoxIndicator>) return "box";
          if constexpr (std::is_same_v<T, L1Penalty>) return "l1";
          if constexpr (std::is_same_v<T, CappedL1>) return "capped_l1";
          if constexpr (std::is_same_v<T, StiefelIndicator>) return "stiefel";
        },
        kind_);
  }

  // Feasibility tolerance for the orthogonality indicator; the projection
  // itself is accurate to ~1e-14.
  static constexpr double kStiefelFeasTol = 1e-8;

 private:
  explicit ProxOperator(Kind kind) : kind_(std::move(kind)) {}

  static DenseVector prox_impl(const ZeroFunction&, const DenseVector& a,
                               const WeightVector&) {
    return a;
  }

  static DenseVector prox_impl(const BoxIndicator& k, const DenseVector& a,
                               const WeightVector&) {
    return DenseVector(Eigen::ArrayXd(a.array().max(-k.radius).min(k.radius)));
  }

  static DenseVector prox_impl(const L1Penalty& k, const DenseVector& a,
                               const WeightVector& v) {
    Eigen::ArrayXd thresh = k.lambda / v.array();
    Eigen::ArrayXd soft =
        a.array().sign() * (a.array().abs() - thresh).max(0.0);
    if (k.box_radius) soft = soft.max(-*k.box_radius).min(*k.box_radius);
    return DenseVector(std::move(soft));
  }

  static DenseVector prox_impl(const CappedL1& k, const DenseVector& a,
                               const WeightVector& v) {
    Eigen::ArrayXd out(a.size());
    for (Index i = 0; i < a.size(); ++i)
      out[i] = prox_capped_l1_scalar(a[i], v[i], k.lambda, k.tau, k.radius);
    return DenseVector(std::move(out));
  }

  static DenseVector prox_impl(const StiefelIndicator& k, const DenseVector& a,
                               const WeightVector& v) {
    if (!v.is_uniform())
      throw UnsupportedMetricError(
          "stiefel prox: non-uniform metric has no closed form (run with beta=0)");
    return prox_stiefel(a, k.dim, k.rank);
  }

  static std::optional<double> eval_impl(const ZeroFunction&, const DenseVector&) {
    return 0.0;
  }

  static std::optional<double> eval_impl(const BoxIndicator& k,
                                         const DenseVector& x) {
    if ((x.array().abs() > k.radius).any()) return std::nullopt;
    return 0.0;
  }

  static std::optional<double> eval_impl(const L1Penalty& k, const DenseVector& x) {
    if (k.box_radius && (x.array().abs() > *k.box_radius).any())
      return std::nullopt;
    return k.lambda * x.array().abs().sum();
  }

  static std::optional<double> eval_impl(const CappedL1& k, const DenseVector& x) {
    if ((x.array().abs() > k.radius).any()) return std::nullopt;
    return k.lambda * x.array().abs().max(k.tau).sum();
  }

  static std::optional<double> eval_impl(const StiefelIndicator& k,
                                         const DenseVector& x) {
    if (x.size() != k.dim * k.rank) return std::nullopt;
    Eigen::Map<const Eigen::MatrixXd> m(x.array().data(), k.dim, k.rank);
    Eigen::MatrixXd gram = m.transpose() * m;
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > kStiefelFeasTol) return std::nullopt;
    return 0.0;
  }

  Kind kind_;
};

}  // namespace aepg
