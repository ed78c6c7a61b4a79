#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "aepg/audit.hpp"
#include "aepg/optimizer.hpp"
#include "aepg/problems.hpp"
#include "aepg/rng.hpp"

using namespace aepg;

namespace {

DenseVector random_vector(Rng& rng, Index n, double scale = 1.0) {
  Eigen::ArrayXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return DenseVector(std::move(v));
}

// f(x) = <c, x> with a constant gradient; used to drive the loop through
// prescribed displacements.
class LinearProblem : public FiniteSumProblem {
 public:
  LinearProblem(DenseVector c, ProxOperator h = ProxOperator::zero())
      : c_(std::move(c)), h_(std::move(h)) {}

  Index dimension() const override { return c_.size(); }
  Index component_count() const override { return 1; }
  double objective_smooth(const DenseVector& x) const override {
    return (c_.array() * x.array()).sum();
  }
  DenseVector component_gradient(Index, const DenseVector&) const override {
    return c_;
  }
  const ProxOperator& prox() const override { return h_; }
  std::string descriptor() const override { return "linear"; }
  std::uint64_t content_hash() const override { return 42; }

 private:
  DenseVector c_;
  ProxOperator h_;
};

PhaseRetrievalInstance small_pr(std::uint64_t seed) {
  const DatasetMatrix d = gen_synthetic_matrix(30, 12, seed);
  PhaseRetrievalParams p;
  p.seed = seed + 1;
  return gen_phase_retrieval(d, p);
}

}  // namespace

TEST_CASE("config validation") {
  AepgConfig cfg;
  cfg.theta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.theta = 0.5;
  CHECK_NOTHROW(cfg.validate());
  cfg.v_floor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.v_floor = 1.0;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.alpha = 1.0;
  cfg.beta = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("zero gradient with zero penalty is a fixed point") {
  const LinearProblem p(DenseVector::zeros(3));
  AepgConfig cfg;
  cfg.v_floor = 1.0;
  cfg.alpha = 0.5;
  cfg.beta = 0.5;
  cfg.theta = 0.9;
  cfg.max_iterations = 20;
  const RunTrace trace = run(cfg, p, DenseVector{1.0, -2.0, 3.0});
  REQUIRE(trace.records.size() == 21);
  for (const auto& rec : trace.records) {
    CHECK(rec.objective == trace.records[0].objective);
    CHECK(rec.d_sq == 0.0);
    CHECK(rec.stationarity == 0.0);
  }
}

TEST_CASE("zero steps produce only the initial record") {
  const LinearProblem p(DenseVector::zeros(2));
  AepgConfig cfg;
  cfg.max_iterations = 0;
  const RunTrace trace = run(cfg, p, DenseVector::zeros(2));
  CHECK(trace.records.size() == 1);
  CHECK(trace.records[0].t == 0);
}

TEST_CASE("first step with zero displacement keeps v and sets sigma") {
  // grad f = 0 so x^1 = x^0, r^0 = 0, v^1 = v^0 and
  // sigma^0 = theta (1 - theta) (sigma^{-1} = theta, min-ratio = 1).
  const LinearProblem p(DenseVector::zeros(2));
  AepgConfig cfg;
  cfg.v_floor = 0.7;
  cfg.theta = 0.6;
  cfg.max_iterations = 1;
  const RunTrace trace = run(cfg, p, DenseVector{1.0, 2.0});
  REQUIRE(trace.records.size() == 2);
  CHECK(trace.records[1].min_v == 0.7);
  CHECK(trace.records[1].max_v == 0.7);
  CHECK(trace.records[1].sigma == Catch::Approx(0.6 * 0.4));
}

TEST_CASE("stepsize factor update matches the worked example") {
  // v^0 = (1,1); a constant gradient (-3,-4) makes x^1 = (3,4) from x^0 = 0,
  // so r^0 = (3,4), ||r||^2 = 25, and with alpha = beta = 1 the update gives
  // v^1 = (sqrt(35), sqrt(42)).
  const LinearProblem p(DenseVector{-3.0, -4.0});
  AepgConfig cfg;
  cfg.v_floor = 1.0;
  cfg.alpha = 1.0;
  cfg.beta = 1.0;
  cfg.theta = 0.5;
  cfg.max_iterations = 1;
  StateLog log;
  const RunTrace trace = run(cfg, p, DenseVector::zeros(2), &log);
  REQUIRE(log.steps.size() == 1);
  CHECK(log.steps[0].v_next[0] ==
        Catch::Approx(std::sqrt(35.0)).epsilon(1e-15));
  CHECK(log.steps[0].v_next[1] ==
        Catch::Approx(std::sqrt(42.0)).epsilon(1e-15));
  CHECK(trace.records[1].sigma ==
        Catch::Approx(0.5 * 0.5 * (1.0 / std::sqrt(42.0))).epsilon(1e-14));
}

TEST_CASE("theta = 0 disables extrapolation") {
  const auto inst = small_pr(3);
  AepgConfig cfg;
  cfg.v_floor = 0.05;
  cfg.alpha = 0.01;
  cfg.beta = 1.0;
  cfg.theta = 0.0;
  cfg.max_iterations = 50;
  cfg.seed = 1;
  const RunTrace trace = run(cfg, inst, DenseVector::zeros(12));
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    CHECK(trace.records[i].sigma == 0.0);
}

TEST_CASE("stationarity residual is zero at a fixed point") {
  // grad f = 0 and h = 0 make x^1 = y^0 with g^0 = grad f(y^0), so the
  // optimality-system member vanishes; callable after the step completed.
  const LinearProblem p(DenseVector::zeros(2));
  AepgConfig cfg;
  cfg.theta = 0.3;
  OptimizerState state = OptimizerState::initial(DenseVector{1.0, -1.0}, cfg);
  detail::GradientSource gradient(cfg, p.component_count());
  aepg_step(state, cfg, p, gradient);
  CHECK(stationarity_residual(state, p) == 0.0);
}

TEST_CASE("residual formula for zero penalty reduces to its definition") {
  // with h = 0 the subdifferential is {grad f}, so the residual must equal
  // || grad f(x^{t+1}) - grad f(y^t) - v^t (x^{t+1} - y^t) ||; for a linear f
  // both gradient terms cancel and the residual is v ||x^{t+1} - y^t||.
  const DenseVector c{-2.0, 1.0};
  const LinearProblem p(c);
  AepgConfig cfg;
  cfg.v_floor = 1.0;
  cfg.alpha = 0.1;
  cfg.beta = 0.0;
  cfg.theta = 0.0;
  cfg.max_iterations = 1;
  const RunTrace trace = run(cfg, p, DenseVector::zeros(2));
  // x^1 - y^0 = -g/v = (2,-1); residual = ||v (x^1-y^0)|| = ||(2,-1)||
  CHECK(trace.records[1].stationarity ==
        Catch::Approx(std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("infeasible starting point is projected once") {
  const auto h = ProxOperator::box(1.0);
  const LinearProblem p(DenseVector::zeros(2), h);
  AepgConfig cfg;
  cfg.max_iterations = 2;
  const RunTrace trace = run(cfg, p, DenseVector{5.0, -7.0});
  CHECK(trace.records[0].objective == 0.0);  // h finite at the projected point
}

TEST_CASE("non-finite values abort with a state dump") {
  const LinearProblem p(DenseVector{1e308, 1e308});
  AepgConfig cfg;
  cfg.v_floor = 1.0;
  cfg.alpha = 1.0;
  cfg.max_iterations = 5;
  try {
    run(cfg, p, DenseVector::zeros(2));
    FAIL("expected NumericAbort");
  } catch (const NumericAbort& e) {
    CHECK_FALSE(e.state_dump().empty());
  }
}

TEST_CASE("deterministic replay") {
  const auto inst = small_pr(9);
  AepgConfig cfg;
  cfg.v_floor = 0.05;
  cfg.alpha = 0.01;
  cfg.beta = 1.0;
  cfg.theta = 0.9;
  cfg.mode = GradientMode::Spider;
  cfg.spider_q = 5;
  cfg.spider_b = 5;
  cfg.seed = 4;
  cfg.max_iterations = 60;
  Rng rng(11);
  const DenseVector x0 = random_vector(rng, 12, 0.1);
  const RunTrace a = run(cfg, inst, x0);
  const RunTrace b = run(cfg, inst, x0);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].objective == b.records[i].objective);
    CHECK(a.records[i].stationarity == b.records[i].stationarity);
    CHECK(a.records[i].sigma == b.records[i].sigma);
    CHECK(a.records[i].min_v == b.records[i].min_v);
    CHECK(a.records[i].comp_evals == b.records[i].comp_evals);
  }
}

TEST_CASE("loop invariants audit clean on both problems and modes") {
  Rng rng(13);

  SECTION("phase retrieval, full batch, theta 0.9") {
    const auto inst = small_pr(21);
    AepgConfig cfg;
    cfg.v_floor = 0.05;
    cfg.alpha = 0.01;
    cfg.beta = 1.0;
    cfg.theta = 0.9;
    cfg.max_iterations = 400;
    StateLog log;
    run(cfg, inst, random_vector(rng, 12, 0.1), &log);
    const AuditReport report = audit(log);
    INFO(report.summary());
    CHECK(report.all_pass());
  }

  SECTION("phase retrieval, spider") {
    const auto inst = small_pr(22);
    AepgConfig cfg;
    cfg.v_floor = 0.05;
    cfg.alpha = 0.01;
    cfg.beta = 1.0;
    cfg.theta = 0.5;
    cfg.mode = GradientMode::Spider;
    cfg.spider_q = 6;
    cfg.spider_b = 6;
    cfg.seed = 3;
    cfg.max_iterations = 400;
    StateLog log;
    run(cfg, inst, random_vector(rng, 12, 0.1), &log);
    const AuditReport report = audit(log);
    INFO(report.summary());
    CHECK(report.all_pass());
  }

  SECTION("eigenvalue, beta 0 keeps the metric uniform") {
    const auto inst = build_eigenvalue(gen_synthetic_matrix(15, 12, 23), 3);
    AepgConfig cfg;
    cfg.v_floor = 0.001;
    cfg.alpha = 0.001;
    cfg.beta = 0.0;
    cfg.theta = 0.9;
    cfg.max_iterations = 400;
    StateLog log;
    run(cfg, inst, random_vector(rng, 36), &log);
    const AuditReport report = audit(log);
    INFO(report.summary());
    CHECK(report.all_pass());
  }
}

TEST_CASE("spider cost accounting propagates to the trace") {
  const auto inst = small_pr(31);
  AepgConfig cfg;
  cfg.v_floor = 0.05;
  cfg.alpha = 0.01;
  cfg.beta = 1.0;
  cfg.mode = GradientMode::Spider;
  cfg.spider_q = 4;
  cfg.spider_b = 3;
  cfg.seed = 8;
  cfg.max_iterations = 21;
  const RunTrace trace = run(cfg, inst, DenseVector::zeros(12));
  const std::uint64_t refreshes = (21 + 3) / 4;  // ceil(21/4)
  CHECK(trace.back().full_evals == refreshes);
  CHECK(trace.back().comp_evals == 3 * (21 - refreshes));
}

TEST_CASE("long full-batch run drives the residual below 1e-3") {
  // desk-scale instance; the residual column ends far below the 1e-3 mark
  const DatasetMatrix d = gen_synthetic_matrix(500, 100, 1);
  PhaseRetrievalParams pp;
  pp.lambda = 0.001;
  pp.seed = 1;
  const auto inst = gen_phase_retrieval(d, pp);
  AepgConfig cfg;
  cfg.v_floor = 0.05;
  cfg.alpha = 0.01;
  cfg.beta = 1.0;
  cfg.theta = 0.9;
  cfg.max_iterations = 10000;
  Rng rng(1);
  const RunTrace trace = run(cfg, inst, random_vector(rng, 100));
  CHECK(trace.back().stationarity <= 1e-3);
}

TEST_CASE("time budget stops after a completed iteration") {
  const auto inst = small_pr(17);
  AepgConfig cfg;
  cfg.max_iterations = 100000;
  cfg.time_budget_s = 0.0;
  const RunTrace trace = run(cfg, inst, DenseVector::zeros(12));
  CHECK(trace.records.size() == 2);  // initial + the one completed iteration
}

TEST_CASE("baselines") {
  SECTION("zero penalty gives a plain gradient step") {
    const DenseVector c{2.0, -4.0};
    const LinearProblem p(c);
    BaselineConfig cfg;
    cfg.method = BaselineMethod::ProxGradientSpider;
    cfg.eta = 0.1;
    cfg.max_iterations = 1;
    const RunTrace trace = run_baseline(cfg, p, DenseVector::zeros(2));
    // x^1 = x^0 - eta g = (-0.2, 0.4); objective <c, x^1> = -2
    CHECK(trace.back().objective == Catch::Approx(-2.0).margin(1e-12));
    CHECK(trace.back().d_sq == Catch::Approx(0.2).epsilon(1e-12));
  }

  SECTION("prox-gradient baseline equals one adaptive step with frozen v") {
    const auto inst = small_pr(41);
    const DenseVector x0 = DenseVector::zeros(12);

    BaselineConfig bl;
    bl.eta = 0.1;
    bl.spider_q = 1;
    bl.spider_b = 1;
    bl.max_iterations = 1;
    const RunTrace a = run_baseline(bl, inst, x0);

    AepgConfig cfg;
    cfg.v_floor = 10.0;  // = 1/eta
    cfg.alpha = 0.01;
    cfg.theta = 0.0;
    cfg.max_iterations = 1;
    const RunTrace b = run(cfg, inst, x0);

    CHECK(a.back().objective ==
          Catch::Approx(b.back().objective).epsilon(1e-14));
  }

  SECTION("subgradient projection stays feasible") {
    const auto inst = small_pr(43);
    BaselineConfig cfg;
    cfg.method = BaselineMethod::SubgradientProjectionSpider;
    cfg.eta = 0.1;
    cfg.spider_q = 5;
    cfg.spider_b = 5;
    cfg.max_iterations = 50;
    const RunTrace trace = run_baseline(cfg, inst, DenseVector::zeros(12));
    CHECK(trace.records.size() == 51);
    trace.validate();
  }

  SECTION("eta validation") {
    BaselineConfig cfg;
    cfg.eta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}
