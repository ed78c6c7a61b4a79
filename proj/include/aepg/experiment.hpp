#pragma once

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "aepg/analysis.hpp"
#include "aepg/audit.hpp"
#include "aepg/dataset_io.hpp"
#include "aepg/optimizer.hpp"
#include "aepg/plot.hpp"
#include "aepg/problems.hpp"
#include "aepg/trace.hpp"

namespace aepg {

using json = nlohmann::json;

// ---- experiment description ----------------------------------------------

struct DatasetSpec {
  enum class Source { Synthetic, Binary, Libsvm };
  Source source = Source::Synthetic;
  Index rows = 0, cols = 0;                    // synthetic shape
  std::optional<std::uint64_t> seed;           // fixed data seed (else run seed)
  std::string path;                            // binary/libsvm
  std::optional<Index> sub_rows, sub_cols;     // optional subsampling
};

struct ProblemSpec {
  enum class Kind { PhaseRetrieval, Eigenvalue };
  Kind kind = Kind::PhaseRetrieval;
  DatasetSpec dataset;
  // phase retrieval
  double lambda = 0.01, tau = 0.1, radius = 10.0;
  double sparsity = 0.1, noise = 0.001;
  // eigenvalue
  Index rank = 10;
};

struct MethodSpec {
  enum class Algo { Aepg, ProxGdSpider, SgpSpider };
  std::string name;
  Algo algo = Algo::Aepg;
  // adaptive parameters (defaults filled per problem kind)
  std::optional<double> v_floor, alpha, beta, theta;
  bool spider = false;
  std::optional<Index> q, b;
  double eta = 0.1;  // baselines
};

struct Budget {
  std::uint64_t iterations = 1000;
  std::optional<double> seconds;
  std::optional<std::uint64_t> cost;  // component-eval equivalents (compare)
};

struct Experiment {
  ProblemSpec problem;
  std::vector<MethodSpec> methods;
  std::vector<std::uint64_t> seeds;
  Budget budget;
  std::string output_dir = "out";
};

// ---- strict JSON parsing ---------------------------------------------------

namespace detail {

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "'");
  }
}

template <typename T>
std::optional<T> get_opt(const json& j, const std::string& key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "'");
  }
}

}  // namespace detail

inline DatasetSpec parse_dataset_spec(const json& j) {
  detail::require_object(j, "dataset");
  detail::reject_unknown_keys(j,
                              {"source", "rows", "cols", "seed", "path",
                               "subsample_rows", "subsample_cols"},
                              "dataset");
  DatasetSpec d;
  const std::string source = detail::get_or<std::string>(j, "source", "synthetic");
  if (source == "synthetic")
    d.source = DatasetSpec::Source::Synthetic;
  else if (source == "binary")
    d.source = DatasetSpec::Source::Binary;
  else if (source == "libsvm")
    d.source = DatasetSpec::Source::Libsvm;
  else
    throw ConfigError("dataset.source must be synthetic|binary|libsvm");
  d.rows = detail::get_or<Index>(j, "rows", 0);
  d.cols = detail::get_or<Index>(j, "cols", 0);
  d.seed = detail::get_opt<std::uint64_t>(j, "seed");
  d.path = detail::get_or<std::string>(j, "path", "");
  d.sub_rows = detail::get_opt<Index>(j, "subsample_rows");
  d.sub_cols = detail::get_opt<Index>(j, "subsample_cols");
  if (d.source == DatasetSpec::Source::Synthetic) {
    if (d.rows < 1 || d.cols < 1)
      throw ConfigError("synthetic dataset needs rows >= 1 and cols >= 1");
  } else if (d.path.empty()) {
    throw ConfigError("dataset.path required for " + source);
  }
  return d;
}

inline ProblemSpec parse_problem_spec(const json& j) {
  detail::require_object(j, "problem");
  detail::reject_unknown_keys(j,
                              {"kind", "dataset", "lambda", "tau", "radius",
                               "sparsity", "noise", "rank"},
                              "problem");
  ProblemSpec p;
  const std::string kind = detail::get_or<std::string>(j, "kind", "");
  if (kind == "phase_retrieval")
    p.kind = ProblemSpec::Kind::PhaseRetrieval;
  else if (kind == "eigenvalue")
    p.kind = ProblemSpec::Kind::Eigenvalue;
  else
    throw ConfigError("problem.kind must be phase_retrieval|eigenvalue");
  if (!j.contains("dataset")) throw ConfigError("problem.dataset required");
  p.dataset = parse_dataset_spec(j.at("dataset"));
  p.lambda = detail::get_or<double>(j, "lambda", 0.01);
  p.tau = detail::get_or<double>(j, "tau", 0.1);
  p.radius = detail::get_or<double>(j, "radius", 10.0);
  p.sparsity = detail::get_or<double>(j, "sparsity", 0.1);
  p.noise = detail::get_or<double>(j, "noise", 0.001);
  p.rank = detail::get_or<Index>(j, "rank", 10);
  return p;
}

inline MethodSpec parse_method_spec(const json& j) {
  detail::require_object(j, "method");
  detail::reject_unknown_keys(j,
                              {"name", "algorithm", "v_floor", "alpha", "beta",
                               "theta", "mode", "q", "b", "eta"},
                              "method");
  MethodSpec m;
  const std::string algo = detail::get_or<std::string>(j, "algorithm", "aepg");
  if (algo == "aepg")
    m.algo = MethodSpec::Algo::Aepg;
  else if (algo == "proxgd-spider")
    m.algo = MethodSpec::Algo::ProxGdSpider;
  else if (algo == "sgp-spider")
    m.algo = MethodSpec::Algo::SgpSpider;
  else
    throw ConfigError("method.algorithm must be aepg|proxgd-spider|sgp-spider");
  m.v_floor = detail::get_opt<double>(j, "v_floor");
  m.alpha = detail::get_opt<double>(j, "alpha");
  m.beta = detail::get_opt<double>(j, "beta");
  m.theta = detail::get_opt<double>(j, "theta");
  const std::string mode = detail::get_or<std::string>(j, "mode", "full");
  if (mode == "spider")
    m.spider = true;
  else if (mode == "full")
    m.spider = false;
  else
    throw ConfigError("method.mode must be full|spider");
  m.q = detail::get_opt<Index>(j, "q");
  m.b = detail::get_opt<Index>(j, "b");
  m.eta = detail::get_or<double>(j, "eta", 0.1);
  m.name = detail::get_or<std::string>(j, "name", algo);
  return m;
}

inline Experiment parse_experiment(const json& j) {
  detail::require_object(j, "config");
  detail::reject_unknown_keys(
      j, {"problem", "methods", "seeds", "budget", "output_dir"}, "config");
  Experiment e;
  if (!j.contains("problem")) throw ConfigError("config.problem required");
  e.problem = parse_problem_spec(j.at("problem"));
  if (j.contains("methods")) {
    if (!j.at("methods").is_array())
      throw ConfigError("config.methods must be an array");
    for (const auto& mj : j.at("methods")) e.methods.push_back(parse_method_spec(mj));
  }
  e.seeds = detail::get_or<std::vector<std::uint64_t>>(j, "seeds", {});
  if (j.contains("budget")) {
    const json& b = j.at("budget");
    detail::require_object(b, "budget");
    detail::reject_unknown_keys(b, {"iterations", "seconds", "cost"}, "budget");
    e.budget.iterations = detail::get_or<std::uint64_t>(b, "iterations", 1000);
    e.budget.seconds = detail::get_opt<double>(b, "seconds");
    e.budget.cost = detail::get_opt<std::uint64_t>(b, "cost");
  }
  e.output_dir = detail::get_or<std::string>(j, "output_dir", "out");
  return e;
}

inline Experiment load_experiment(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_experiment(j);
}

// ---- builders --------------------------------------------------------------

// Paper defaults: phase retrieval (0.05, 0.01, 1); eigenvalue (0.001, 0.001, 0).
inline void apply_method_defaults(MethodSpec& m, ProblemSpec::Kind kind) {
  const bool pr = kind == ProblemSpec::Kind::PhaseRetrieval;
  if (!m.v_floor) m.v_floor = pr ? 0.05 : 0.001;
  if (!m.alpha) m.alpha = pr ? 0.01 : 0.001;
  if (!m.beta) m.beta = pr ? 1.0 : 0.0;
  if (!m.theta) m.theta = 0.9;
  if (!m.q) m.q = 1;
  if (!m.b) m.b = 1;
}

inline DatasetMatrix build_dataset(const DatasetSpec& d, std::uint64_t run_seed) {
  const std::uint64_t seed = d.seed.value_or(run_seed);
  switch (d.source) {
    case DatasetSpec::Source::Synthetic:
      return gen_synthetic_matrix(d.rows, d.cols, seed);
    case DatasetSpec::Source::Binary: {
      RowMatrix m = read_dataset_binary(d.path);
      if (d.sub_rows || d.sub_cols)
        m = subsample(m, d.sub_rows.value_or(m.rows()),
                      d.sub_cols.value_or(m.cols()), seed);
      return DatasetMatrix(std::move(m), d.path);
    }
    case DatasetSpec::Source::Libsvm: {
      RowMatrix m = read_libsvm(d.path);
      if (d.sub_rows || d.sub_cols)
        m = subsample(m, d.sub_rows.value_or(m.rows()),
                      d.sub_cols.value_or(m.cols()), seed);
      return DatasetMatrix(std::move(m), d.path);
    }
  }
  throw ConfigError("unreachable dataset source");
}

// When the dataset pins its own seed the whole instance (matrix, signal,
// noise) is fixed across run seeds, so sweeps compare methods on one
// benchmark; only the init point and minibatch sampling vary per run seed.
inline std::unique_ptr<FiniteSumProblem> build_problem(const ProblemSpec& p,
                                                       std::uint64_t run_seed) {
  const std::uint64_t instance_seed = p.dataset.seed.value_or(run_seed);
  const DatasetMatrix data = build_dataset(p.dataset, run_seed);
  if (p.kind == ProblemSpec::Kind::PhaseRetrieval) {
    PhaseRetrievalParams params;
    params.sparsity = p.sparsity;
    params.noise = p.noise;
    params.lambda = p.lambda;
    params.tau = p.tau;
    params.radius = p.radius;
    params.seed = instance_seed;
    return std::make_unique<PhaseRetrievalInstance>(
        gen_phase_retrieval(data, params));
  }
  return std::make_unique<EigenvalueInstance>(build_eigenvalue(data, p.rank));
}

// Standard-normal starting point from the run seed ("init" stream); an
// infeasible point is projected once inside run().
inline DenseVector initial_point(const FiniteSumProblem& p, std::uint64_t seed) {
  Rng rng = domain_rng(seed, "init");
  Eigen::ArrayXd x0(p.dimension());
  for (Index i = 0; i < x0.size(); ++i) x0[i] = rng.normal();
  return DenseVector(std::move(x0));
}

struct SingleRunResult {
  RunTrace trace;
  std::optional<AuditReport> audit_report;
};

inline SingleRunResult run_method(const MethodSpec& spec_in, const ProblemSpec& pspec,
                                  std::uint64_t seed, const Budget& budget,
                                  bool with_audit = false) {
  MethodSpec spec = spec_in;
  apply_method_defaults(spec, pspec.kind);
  const auto problem = build_problem(pspec, seed);
  const DenseVector x0 = initial_point(*problem, seed);

  SingleRunResult result;
  if (spec.algo == MethodSpec::Algo::Aepg) {
    AepgConfig cfg;
    cfg.v_floor = *spec.v_floor;
    cfg.alpha = *spec.alpha;
    cfg.beta = *spec.beta;
    cfg.theta = *spec.theta;
    cfg.mode = spec.spider ? GradientMode::Spider : GradientMode::FullBatch;
    cfg.spider_q = *spec.q;
    cfg.spider_b = *spec.b;
    cfg.max_iterations = budget.iterations;
    cfg.time_budget_s = budget.seconds;
    cfg.seed = seed;
    StateLog log;
    result.trace = run(cfg, *problem, x0, with_audit ? &log : nullptr);
    if (with_audit) result.audit_report = audit(log);
  } else {
    BaselineConfig cfg;
    cfg.method = spec.algo == MethodSpec::Algo::ProxGdSpider
                     ? BaselineMethod::ProxGradientSpider
                     : BaselineMethod::SubgradientProjectionSpider;
    cfg.eta = spec.eta;
    cfg.spider_q = *spec.q;
    cfg.spider_b = *spec.b;
    cfg.max_iterations = budget.iterations;
    cfg.time_budget_s = budget.seconds;
    cfg.seed = seed;
    result.trace = run_baseline(cfg, *problem, x0);
  }
  result.trace.meta.method = spec.name;
  result.trace.meta.seed = seed;
  return result;
}

// ---- serialization helpers -------------------------------------------------

namespace detail {

inline void atomic_write(const std::filesystem::path& path,
                         const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + tmp.string());
    os << contents;
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

inline json dataset_spec_json(const DatasetSpec& d) {
  json j;
  j["source"] = d.source == DatasetSpec::Source::Synthetic ? "synthetic"
                : d.source == DatasetSpec::Source::Binary  ? "binary"
                                                           : "libsvm";
  if (d.source == DatasetSpec::Source::Synthetic) {
    j["rows"] = d.rows;
    j["cols"] = d.cols;
  } else {
    j["path"] = d.path;
    if (d.sub_rows) j["subsample_rows"] = *d.sub_rows;
    if (d.sub_cols) j["subsample_cols"] = *d.sub_cols;
  }
  if (d.seed) j["seed"] = *d.seed;
  return j;
}

inline json problem_spec_json(const ProblemSpec& p) {
  json j;
  j["dataset"] = dataset_spec_json(p.dataset);
  if (p.kind == ProblemSpec::Kind::PhaseRetrieval) {
    j["kind"] = "phase_retrieval";
    j["lambda"] = p.lambda;
    j["tau"] = p.tau;
    j["radius"] = p.radius;
    j["sparsity"] = p.sparsity;
    j["noise"] = p.noise;
  } else {
    j["kind"] = "eigenvalue";
    j["rank"] = p.rank;
  }
  return j;
}

inline json method_spec_json(const MethodSpec& m_in, ProblemSpec::Kind kind) {
  MethodSpec m = m_in;
  apply_method_defaults(m, kind);
  json j;
  j["name"] = m.name;
  if (m.algo == MethodSpec::Algo::Aepg) {
    j["algorithm"] = "aepg";
    j["v_floor"] = *m.v_floor;
    j["alpha"] = *m.alpha;
    j["beta"] = *m.beta;
    j["theta"] = *m.theta;
    j["mode"] = m.spider ? "spider" : "full";
    if (m.spider) {
      j["q"] = *m.q;
      j["b"] = *m.b;
    }
  } else {
    j["algorithm"] = m.algo == MethodSpec::Algo::ProxGdSpider ? "proxgd-spider"
                                                              : "sgp-spider";
    j["eta"] = m.eta;
    j["q"] = *m.q;
    j["b"] = *m.b;
  }
  return j;
}

inline json trace_meta_json(const RunTrace& trace, const json& effective_config,
                            bool zero_timing) {
  json j;
  j["method"] = trace.meta.method;
  j["seed"] = trace.meta.seed;
  j["problem"] = {{"descriptor", trace.meta.problem_descriptor},
                  {"content_hash", detail::hash_hex(trace.meta.problem_hash)},
                  {"components", trace.meta.n_components}};
  j["config"] = effective_config;
  j["records"] = trace.records.size();
  j["final_objective"] = trace.back().objective;
  j["total_component_evals"] = trace.back().comp_evals;
  j["total_full_evals"] = trace.back().full_evals;
  j["wall_seconds_total"] = zero_timing ? 0.0 : trace.back().wall_s;
  return j;
}

inline json audit_report_json(const AuditReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"worst_violation", c.worst_violation},
                      {"tolerance", c.tolerance},
                      {"worst_t", c.worst_t}});
  return json{{"all_pass", r.all_pass()},
              {"checks", checks},
              {"kappa_bound", r.kappa_bound},
              {"kappa_observed", r.kappa_observed},
              {"kappa_grave_observed", r.kappa_grave_observed},
              {"sum_dsq", r.sum_dsq},
              {"sum_dsq_bound", r.sum_dsq_bound}};
}

inline AuditReport audit_report_from_json(const json& j) {
  AuditReport r;
  try {
    for (const auto& cj : j.at("checks")) {
      AuditCheck c;
      c.name = cj.at("name").get<std::string>();
      c.pass = cj.at("pass").get<bool>();
      c.worst_violation = cj.at("worst_violation").get<double>();
      c.tolerance = cj.at("tolerance").get<double>();
      c.worst_t = cj.at("worst_t").get<std::uint64_t>();
      r.checks.push_back(c);
    }
    r.kappa_bound = j.at("kappa_bound").get<double>();
    r.kappa_observed = j.at("kappa_observed").get<double>();
    r.kappa_grave_observed = j.at("kappa_grave_observed").get<double>();
    r.sum_dsq = j.at("sum_dsq").get<double>();
    r.sum_dsq_bound = j.at("sum_dsq_bound").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad audit report: ") + e.what());
  }
  return r;
}

// ---- commands ---------------------------------------------------------------

struct ExitCode {
  static constexpr int kOk = 0;
  static constexpr int kAuditFailure = 1;
  static constexpr int kConfigError = 2;
  static constexpr int kNumericAbort = 3;
  static constexpr int kPartialFailure = 4;
};

struct GenOptions {
  Index rows = 0, cols = 0;
  std::uint64_t seed = 0;
  std::string output;
};

inline int cmd_gen(const GenOptions& opt) {
  if (opt.rows < 1 || opt.cols < 1)
    throw ConfigError("gen: rows and cols must be >= 1");
  if (opt.output.empty()) throw ConfigError("gen: output path required");
  const DatasetMatrix d = gen_synthetic_matrix(opt.rows, opt.cols, opt.seed);

  std::ostringstream payload;
  write_dataset_binary(opt.output + ".tmp", d.matrix());
  std::filesystem::rename(opt.output + ".tmp", opt.output);

  // norm is 1 within 1e-12 by construction; report it at contract precision
  const double norm = std::round(d.frobenius_norm() * 1e12) / 1e12;
  json sidecar{{"rows", d.rows()},
               {"cols", d.cols()},
               {"seed", opt.seed},
               {"frobenius_norm", norm}};
  detail::atomic_write(opt.output + ".json", sidecar.dump(2) + "\n");
  return ExitCode::kOk;
}

struct RunOptions {
  ProblemSpec problem;
  MethodSpec method;
  std::uint64_t seed = 0;
  Budget budget;
  std::string output_dir = "out";
  bool audit = false;
  bool no_timing = false;
};

inline int cmd_run(const RunOptions& opt) {
  namespace fs = std::filesystem;
  const SingleRunResult result =
      run_method(opt.method, opt.problem, opt.seed, opt.budget, opt.audit);

  std::ostringstream csv;
  write_trace_csv(result.trace, csv, opt.no_timing);
  detail::atomic_write(fs::path(opt.output_dir) / "trace.csv", csv.str());

  json effective;
  effective["problem"] = problem_spec_json(opt.problem);
  effective["method"] = method_spec_json(opt.method, opt.problem.kind);
  effective["seed"] = opt.seed;
  effective["budget"] = {{"iterations", opt.budget.iterations}};
  if (opt.budget.seconds) effective["budget"]["seconds"] = *opt.budget.seconds;
  detail::atomic_write(
      fs::path(opt.output_dir) / "meta.json",
      trace_meta_json(result.trace, effective, opt.no_timing).dump(2) + "\n");

  if (result.audit_report) {
    detail::atomic_write(fs::path(opt.output_dir) / "audit.json",
                         audit_report_json(*result.audit_report).dump(2) + "\n");
    if (!result.audit_report->all_pass()) return ExitCode::kAuditFailure;
  }
  return ExitCode::kOk;
}

struct CheckOptions {
  std::string path;  // run output directory or audit.json itself
};

inline int cmd_check(const CheckOptions& opt) {
  namespace fs = std::filesystem;
  fs::path p(opt.path);
  if (fs::is_directory(p)) p /= "audit.json";
  std::ifstream is(p);
  if (!is) throw ConfigError("no audit data at " + p.string() +
                             " (run with --audit first)");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad audit file: ") + e.what());
  }
  const AuditReport report = audit_report_from_json(j);
  std::fputs(report.summary().c_str(), stdout);
  return report.all_pass() ? ExitCode::kOk : ExitCode::kAuditFailure;
}

struct CompareOptions {
  Experiment experiment;
  bool no_timing = false;
  unsigned jobs = 1;
};

namespace detail {

inline std::string run_file_stem(const std::string& method, std::uint64_t seed) {
  std::string clean = method;
  for (char& c : clean)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
      c = '_';
  return clean + "-seed" + std::to_string(seed);
}

}  // namespace detail

inline int cmd_compare(const CompareOptions& opt) {
  namespace fs = std::filesystem;
  const Experiment& e = opt.experiment;
  if (e.methods.size() < 2)
    throw ConfigError("compare: need at least 2 method specs");
  if (e.seeds.empty()) throw ConfigError("compare: need at least one seed");

  struct Job {
    std::size_t method_index;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t mi = 0; mi < e.methods.size(); ++mi)
    for (const auto seed : e.seeds) jobs.push_back({mi, seed});

  std::vector<SingleRunResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());

  const auto worker_count =
      std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(jobs.size())));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < jobs.size();
         i = next.fetch_add(1)) {
      try {
        results[i] = run_method(e.methods[jobs[i].method_index], e.problem,
                                jobs[i].seed, e.budget);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < worker_count; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  bool partial_failure = false;
  std::vector<const RunTrace*> traces;
  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string stem =
        detail::run_file_stem(e.methods[jobs[i].method_index].name, jobs[i].seed);
    if (errors[i]) {
      partial_failure = true;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& ex) {
        std::fprintf(stderr, "compare: run %s failed: %s\n", stem.c_str(),
                     ex.what());
      }
      continue;
    }
    const RunTrace& trace = results[i].trace;
    std::ostringstream csv;
    write_trace_csv(trace, csv, opt.no_timing);
    detail::atomic_write(fs::path(e.output_dir) / (stem + ".csv"), csv.str());

    json effective;
    effective["problem"] = problem_spec_json(e.problem);
    effective["method"] =
        method_spec_json(e.methods[jobs[i].method_index], e.problem.kind);
    effective["seed"] = jobs[i].seed;
    detail::atomic_write(
        fs::path(e.output_dir) / (stem + ".meta.json"),
        trace_meta_json(trace, effective, opt.no_timing).dump(2) + "\n");

    traces.push_back(&trace);
    PlotSeries s;
    s.label = e.seeds.size() > 1 ? stem : e.methods[jobs[i].method_index].name;
    for (const auto& rec : trace.records) {
      s.x.push_back(opt.no_timing
                        ? static_cast<double>(rec.comp_evals +
                                              trace.meta.n_components *
                                                  rec.full_evals)
                        : rec.wall_s);
      s.y.push_back(rec.objective);
    }
    series.push_back(std::move(s));
  }
  if (traces.empty()) throw ConfigError("compare: every run failed");

  CompareBudget budget;
  budget.cost = e.budget.cost;
  budget.seconds = e.budget.seconds;
  const auto rows = compare(traces, budget);

  std::ostringstream table;
  table << "method,seed,objective_at_cost,objective_at_time,final_objective,"
           "rank\n";
  for (const auto& row : rows)
    table << row.method << ',' << row.seed << ','
          << detail::fmt_double(row.objective_at_cost) << ','
          << detail::fmt_double(row.objective_at_time) << ','
          << detail::fmt_double(row.final_objective) << ',' << row.rank << "\n";
  detail::atomic_write(fs::path(e.output_dir) / "compare.csv", table.str());

  const std::string svg = render_line_plot_svg(
      series, opt.no_timing ? "gradient cost (component evals)" : "wall time (s)",
      "objective", /*log_y=*/true);
  detail::atomic_write(fs::path(e.output_dir) / "curves.svg", svg);

  return partial_failure ? ExitCode::kPartialFailure : ExitCode::kOk;
}

}  // namespace aepg
