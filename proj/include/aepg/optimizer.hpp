#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aepg/core.hpp"
#include "aepg/errors.hpp"
#include "aepg/problems.hpp"
#include "aepg/spider.hpp"
#include "aepg/trace.hpp"

namespace aepg {

enum class GradientMode { FullBatch, Spider };

// Parameters of the adaptive extrapolated proximal gradient loop.
struct AepgConfig {
  double v_floor = 0.05;  // initial stepsize factor, > 0
  double alpha = 0.01;    // global rate multiplier, > 0
  double beta = 1.0;      // coordinate-wise multiplier, >= 0
  double theta = 0.0;     // extrapolation parameter, in [0, 1)
  GradientMode mode = GradientMode::FullBatch;
  Index spider_q = 1;  // epoch length (Spider mode)
  Index spider_b = 1;  // minibatch size (Spider mode)
  std::uint64_t max_iterations = 1000;
  std::optional<double> time_budget_s;
  std::uint64_t seed = 0;
  bool spider_full_batch_debug = false;

  void validate() const {
    if (v_floor <= 0.0) throw ConfigError("v_floor must be positive");
    if (alpha <= 0.0) throw ConfigError("alpha must be positive");
    if (beta < 0.0) throw ConfigError("beta must be nonnegative");
    if (!(theta >= 0.0 && theta < 1.0))
      throw ConfigError("theta must lie in [0, 1)");
    if (mode == GradientMode::Spider && (spider_q < 1 || spider_b < 1))
      throw ConfigError("spider q and b must be >= 1");
    if (time_budget_s && *time_budget_s < 0.0)
      throw ConfigError("time budget must be nonnegative");
  }
};

// Loop state; symbols follow the update rules:
//   x^{t+1} in prox_h(y^t - g^t / v^t; v^t),     d^t = x^{t+1} - x^t
//   r^t = v^t o d^t,  s^t = alpha ||r^t||^2 1 + beta r^t o r^t
//   v^{t+1} = sqrt(v^t o v^t + s^t)
//   sigma^t = theta (1 - sigma^{t-1}) min(v^t / v^{t+1})
//   y^{t+1} = x^{t+1} + sigma^t d^t
struct OptimizerState {
  DenseVector x_curr;   // x^{t+1}
  DenseVector x_prev;   // x^t
  DenseVector x_prev2;  // x^{t-1}
  DenseVector y;        // y^t
  WeightVector v;       // v^t
  double sigma_prev;    // sigma^{t-1}
  DenseVector g;        // gradient estimate used by the last step
  DenseVector d;        // d^t
  DenseVector r;        // r^t
  double r_accum = 0.0;  // R_t = sum_{i<=t} ||r^i||^2
  std::uint64_t t = 0;
  // query point and metric of the last completed step (the residual needs
  // them after v and y have advanced)
  DenseVector y_step;
  WeightVector v_step;

  static OptimizerState initial(DenseVector x0, const AepgConfig& cfg) {
    const Index n = x0.size();
    const WeightVector v0 = WeightVector::uniform(n, cfg.v_floor);
    OptimizerState s{x0,
                     x0,
                     x0,
                     x0,
                     v0,
                     cfg.theta,
                     DenseVector::zeros(n),
                     DenseVector::zeros(n),
                     DenseVector::zeros(n),
                     0.0,
                     0,
                     x0,
                     v0};
    return s;
  }
};

// Per-step snapshot retained in audit mode; enough to re-derive every
// invariant from the cumulative form.
struct StateSnapshot {
  DenseVector r;       // r^t
  DenseVector v_next;  // v^{t+1}
  double sigma;        // sigma^t
  double d_sq;         // ||d^t||^2
};

struct StateLog {
  double v_floor = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double theta = 0.0;
  Index dimension = 0;
  std::vector<StateSnapshot> steps;
};

namespace detail {

inline std::string dump_state(const OptimizerState& s, const char* where) {
  std::ostringstream os;
  os << "numeric abort at t=" << s.t << " (" << where << ")\n"
     << "  |x^t|=" << s.x_prev.norm() << " |y^t|=" << s.y.norm()
     << " |g^t|=" << (s.g.size() ? s.g.norm() : 0.0)
     << " min(v)=" << s.v.min() << " max(v)=" << s.v.max()
     << " sigma_prev=" << s.sigma_prev << " R=" << s.r_accum;
  return os.str();
}

// Gradient oracle shared by the adaptive and baseline loops.
class GradientSource {
 public:
  GradientSource(const AepgConfig& cfg, Index n_components) {
    if (cfg.mode == GradientMode::Spider) {
      Index b = std::min<Index>(cfg.spider_b, n_components);
      spider_.emplace(cfg.spider_q, b, cfg.seed, cfg.spider_full_batch_debug);
    }
  }

  DenseVector operator()(const FiniteSumProblem& p, const DenseVector& y) {
    if (spider_) return spider_->estimate(p, y);
    cost_.full_evals += 1;
    return p.full_gradient(y);
  }

  GradientCost cost() const { return spider_ ? spider_->cost() : cost_; }

 private:
  std::optional<SpiderEstimator> spider_;
  GradientCost cost_;
};

inline void warn_unbounded_once(const FiniteSumProblem& p) {
  static std::once_flag flag;
  if (!p.prox().bounds_iterates())
    std::call_once(flag, [&] {
      std::fprintf(stderr,
                   "aepg: warning: h does not bound the iterates; the "
                   "boundedness assumption is not enforced (%s)\n",
                   p.descriptor().c_str());
    });
}

}  // namespace detail

// Residual exhibited by the prox optimality condition of the last completed
// step,
//   || grad f(x^{t+1}) - g^t - v^t o (x^{t+1} - y^t) ||,
// a member of grad f(x^{t+1}) + subdiff h(x^{t+1}). Requires one completed
// step. The full gradient evaluated here is diagnostic and never charged to
// the cost counters.
inline double stationarity_residual(const OptimizerState& s,
                                    const FiniteSumProblem& p) {
  const DenseVector grad_new = p.full_gradient(s.x_curr);
  return std::sqrt((grad_new.array() - s.g.array() -
                    s.v_step.array() * (s.x_curr.array() - s.y_step.array()))
                       .square()
                       .sum());
}

// One iteration of the loop. Returns the trace record for the new iterate;
// `state` advances to time t+1. The record's wall_s/t fields are stamped by
// the caller.
inline IterationRecord aepg_step(OptimizerState& state, const AepgConfig& cfg,
                                 const FiniteSumProblem& p,
                                 detail::GradientSource& gradient,
                                 StateLog* log = nullptr) {
  try {
    state.g = gradient(p, state.y);

    const DenseVector a =
        DenseVector(Eigen::ArrayXd(state.y.array() - state.g.array() / state.v.array()));
    DenseVector x_next = p.prox().prox(a, state.v);
    const DenseVector d = sub(x_next, state.x_prev);
    const DenseVector r = DenseVector(Eigen::ArrayXd(state.v.array() * d.array()));
    const double r_sq = r.squared_norm();

    // v^{t+1} = sqrt(v^t o v^t + alpha ||r^t||^2 + beta r^t o r^t)
    WeightVector v_next(DenseVector(Eigen::ArrayXd(
        (state.v.array().square() + cfg.alpha * r_sq +
         cfg.beta * r.array().square())
            .sqrt())));

    // With beta = 0 every coordinate carries the same value, so the
    // element-wise quotient minimum collapses to a scalar ratio.
    const double ratio = cfg.beta == 0.0 ? state.v[0] / v_next[0]
                                         : min_ratio(state.v, v_next);
    const double sigma = cfg.theta * (1.0 - state.sigma_prev) * ratio;
    DenseVector y_next =
        DenseVector(Eigen::ArrayXd(x_next.array() + sigma * d.array()));

    state.x_curr = std::move(x_next);
    state.y_step = state.y;
    state.v_step = state.v;

    IterationRecord rec;
    rec.d_sq = d.squared_norm();
    rec.sigma = sigma;
    rec.min_v = v_next.min();
    rec.max_v = v_next.max();
    rec.stationarity = stationarity_residual(state, p);

    const auto fx = p.objective(state.x_curr);
    if (!fx) throw DomainError("prox produced an infeasible iterate");
    rec.objective = *fx;
    if (!std::isfinite(rec.objective) || !std::isfinite(sigma) ||
        !std::isfinite(r_sq))
      throw DomainError("non-finite scalar in step");

    const GradientCost cost = gradient.cost();
    rec.comp_evals = cost.component_evals;
    rec.full_evals = cost.full_evals;

    if (log) log->steps.push_back(StateSnapshot{r, v_next.values(), sigma, rec.d_sq});

    state.r_accum += r_sq;
    state.x_prev2 = state.x_prev;
    state.x_prev = state.x_curr;
    state.y = std::move(y_next);
    state.v = std::move(v_next);
    state.sigma_prev = sigma;
    state.d = d;
    state.r = r;
    state.t += 1;
    return rec;
  } catch (const DomainError& e) {
    throw NumericAbort(e.what(), detail::dump_state(state, e.what()));
  }
}

namespace detail {

inline IterationRecord initial_record(const FiniteSumProblem& p,
                                      const DenseVector& x0, double v_floor,
                                      double theta) {
  IterationRecord rec;
  rec.t = 0;
  const auto f0 = p.objective(x0);
  if (!f0) throw DomainError("initial point infeasible after projection");
  rec.objective = *f0;
  rec.min_v = v_floor;
  rec.max_v = v_floor;
  rec.sigma = theta;
  return rec;
}

template <typename StepFn>
RunTrace run_loop(const FiniteSumProblem& p, DenseVector x0, double v_floor,
                  double theta, std::uint64_t max_iterations,
                  std::optional<double> time_budget_s, StepFn&& step) {
  warn_unbounded_once(p);
  if (!p.prox().evaluate(x0))
    x0 = p.prox().prox(x0, WeightVector::uniform(x0.size(), v_floor));

  RunTrace trace;
  trace.meta.problem_descriptor = p.descriptor();
  trace.meta.problem_hash = p.content_hash();
  trace.records.push_back(initial_record(p, x0, v_floor, theta));

  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t t = 0; t < max_iterations; ++t) {
    IterationRecord rec = step(x0, t);
    rec.t = t + 1;
    rec.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    trace.records.push_back(rec);
    if (time_budget_s && rec.wall_s >= *time_budget_s) break;
  }
  return trace;
}

}  // namespace detail

// Runs the adaptive loop for cfg.max_iterations steps (or until the time
// budget elapses; the iteration in progress always completes). An infeasible
// x0 is projected once with the uniform v_floor metric before the loop.
// Identical (cfg, problem, x0) yield a bit-identical trace apart from the
// wall-clock column.
inline RunTrace run(const AepgConfig& cfg, const FiniteSumProblem& p,
                    const DenseVector& x0, StateLog* log = nullptr) {
  cfg.validate();
  if (x0.size() != p.dimension())
    throw DimensionError("run: x0 dimension mismatch");

  if (log) {
    log->v_floor = cfg.v_floor;
    log->alpha = cfg.alpha;
    log->beta = cfg.beta;
    log->theta = cfg.theta;
    log->dimension = p.dimension();
    log->steps.clear();
  }

  detail::GradientSource gradient(cfg, p.component_count());
  std::optional<OptimizerState> state;
  RunTrace trace = detail::run_loop(
      p, x0, cfg.v_floor, cfg.theta, cfg.max_iterations, cfg.time_budget_s,
      [&](const DenseVector& start_point, std::uint64_t) {
        if (!state) state = OptimizerState::initial(start_point, cfg);
        return aepg_step(*state, cfg, p, gradient, log);
      });
  trace.meta.method =
      cfg.mode == GradientMode::Spider ? "aepg-spider" : "aepg";
  trace.meta.seed = cfg.seed;
  trace.meta.n_components = static_cast<std::uint64_t>(p.component_count());
  return trace;
}

// ---- fixed-stepsize baselines -------------------------------------------

enum class BaselineMethod { ProxGradientSpider, SubgradientProjectionSpider };

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::ProxGradientSpider;
  double eta = 0.1;  // fixed stepsize, > 0
  Index spider_q = 1;
  Index spider_b = 1;
  std::uint64_t max_iterations = 1000;
  std::optional<double> time_budget_s;
  std::uint64_t seed = 0;

  void validate() const {
    if (eta <= 0.0) throw ConfigError("eta must be positive");
    if (spider_q < 1 || spider_b < 1)
      throw ConfigError("spider q and b must be >= 1");
  }
};

// Fixed-stepsize comparison methods driven by the same SPIDER estimator:
//  - prox-gradient:       x^{t+1} = prox_h(x^t - eta g^t; (1/eta) 1)
//  - subgradient projection: x^{t+1} = proj(x^t - eta (g^t + zeta^t)),
//    zeta^t a subgradient of the penalty part at x^t.
inline RunTrace run_baseline(const BaselineConfig& cfg, const FiniteSumProblem& p,
                             const DenseVector& x0) {
  cfg.validate();
  if (x0.size() != p.dimension())
    throw DimensionError("run_baseline: x0 dimension mismatch");

  AepgConfig source_cfg;
  source_cfg.mode = GradientMode::Spider;
  source_cfg.spider_q = cfg.spider_q;
  source_cfg.spider_b = cfg.spider_b;
  source_cfg.seed = cfg.seed;
  detail::GradientSource gradient(source_cfg, p.component_count());

  const double inv_eta = 1.0 / cfg.eta;
  DenseVector x = x0;
  const WeightVector metric = WeightVector::uniform(x0.size(), inv_eta);

  RunTrace trace = detail::run_loop(
      p, x0, inv_eta, 0.0, cfg.max_iterations, cfg.time_budget_s,
      [&](const DenseVector& start_point, std::uint64_t t) {
        if (t == 0) x = start_point;
        const DenseVector g = gradient(p, x);
        DenseVector x_next;
        if (cfg.method == BaselineMethod::ProxGradientSpider) {
          const DenseVector a =
              DenseVector(Eigen::ArrayXd(x.array() - cfg.eta * g.array()));
          x_next = p.prox().prox(a, metric);
        } else {
          const DenseVector zeta = p.prox().penalty_subgradient(x);
          const DenseVector a = DenseVector(
              Eigen::ArrayXd(x.array() - cfg.eta * (g.array() + zeta.array())));
          x_next = p.prox().project_feasible(a);
        }

        IterationRecord rec;
        rec.d_sq = (x_next.array() - x.array()).square().sum();
        rec.min_v = inv_eta;
        rec.max_v = inv_eta;
        rec.sigma = 0.0;
        const DenseVector grad_new = p.full_gradient(x_next);
        rec.stationarity =
            std::sqrt((grad_new.array() - g.array() -
                       inv_eta * (x_next.array() - x.array()))
                          .square()
                          .sum());
        const auto fx = p.objective(x_next);
        if (!fx)
          throw NumericAbort("baseline produced infeasible iterate",
                             "t=" + std::to_string(t));
        rec.objective = *fx;
        const GradientCost cost = gradient.cost();
        rec.comp_evals = cost.component_evals;
        rec.full_evals = cost.full_evals;
        x = std::move(x_next);
        return rec;
      });
  trace.meta.method = cfg.method == BaselineMethod::ProxGradientSpider
                          ? "proxgd-spider"
                          : "sgp-spider";
  trace.meta.seed = cfg.seed;
  trace.meta.n_components = static_cast<std::uint64_t>(p.component_count());
  return trace;
}

}  // namespace aepg
