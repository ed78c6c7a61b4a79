// Command-line front end: dataset generation, single optimization runs,
// method sweeps with comparison tables/plots, and invariant audit reports.
//
// Exit codes: 0 ok, 1 audit failure, 2 config error, 3 numeric abort,
// 4 partial sweep failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "aepg/experiment.hpp"

namespace {

using namespace aepg;

std::optional<std::uint64_t> env_seed() {
  if (const char* s = std::getenv("AEPG_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ConfigError("AEPG_SEED is not an integer");
    }
  }
  return std::nullopt;
}

DatasetSpec::Source sniff_data_format(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  char magic[8] = {};
  is.read(magic, 8);
  return std::memcmp(magic, kDatasetMagic, 8) == 0 ? DatasetSpec::Source::Binary
                                                   : DatasetSpec::Source::Libsvm;
}

struct ProblemFlags {
  std::string kind;
  std::string data_path, data_format;
  Index rows = 0, cols = 0;
  std::optional<std::uint64_t> data_seed;
  std::optional<Index> sub_rows, sub_cols;
  std::optional<double> lambda, tau, radius, sparsity, noise;
  std::optional<Index> rank;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--problem", kind, "phase_retrieval|eigenvalue");
    cmd->add_option("--data", data_path, "dataset file (binary or libsvm)");
    cmd->add_option("--data-format", data_format,
                    "binary|libsvm (default: sniff)");
    cmd->add_option("--rows", rows, "synthetic dataset rows");
    cmd->add_option("--cols", cols, "synthetic dataset cols");
    cmd->add_option("--data-seed", data_seed,
                    "fixed dataset seed (default: run seed)");
    cmd->add_option("--subsample-rows", sub_rows, "subsample rows before use");
    cmd->add_option("--subsample-cols", sub_cols, "subsample cols before use");
    cmd->add_option("--lambda", lambda, "capped-l1 weight");
    cmd->add_option("--tau", tau, "capped-l1 cap threshold");
    cmd->add_option("--radius", radius, "box radius");
    cmd->add_option("--sparsity", sparsity, "signal support fraction");
    cmd->add_option("--noise", noise, "observation noise level");
    cmd->add_option("--rank", rank, "orthogonal factor rank");
  }

  void merge_into(ProblemSpec& p, bool have_config) const {
    if (!kind.empty()) {
      if (kind == "phase_retrieval" || kind == "phase")
        p.kind = ProblemSpec::Kind::PhaseRetrieval;
      else if (kind == "eigenvalue" || kind == "eigen")
        p.kind = ProblemSpec::Kind::Eigenvalue;
      else
        throw ConfigError("--problem must be phase_retrieval|eigenvalue");
    } else if (!have_config) {
      throw ConfigError("--problem (or --config) is required");
    }
    if (!data_path.empty()) {
      p.dataset.path = data_path;
      if (data_format == "binary")
        p.dataset.source = DatasetSpec::Source::Binary;
      else if (data_format == "libsvm")
        p.dataset.source = DatasetSpec::Source::Libsvm;
      else if (data_format.empty())
        p.dataset.source = sniff_data_format(data_path);
      else
        throw ConfigError("--data-format must be binary|libsvm");
    } else if (rows > 0 || cols > 0) {
      p.dataset.source = DatasetSpec::Source::Synthetic;
      p.dataset.rows = rows;
      p.dataset.cols = cols;
    }
    if (p.dataset.source == DatasetSpec::Source::Synthetic &&
        (p.dataset.rows < 1 || p.dataset.cols < 1))
      throw ConfigError("synthetic dataset needs --rows and --cols >= 1");
    if (data_seed) p.dataset.seed = data_seed;
    if (sub_rows) p.dataset.sub_rows = sub_rows;
    if (sub_cols) p.dataset.sub_cols = sub_cols;
    if (lambda) p.lambda = *lambda;
    if (tau) p.tau = *tau;
    if (radius) p.radius = *radius;
    if (sparsity) p.sparsity = *sparsity;
    if (noise) p.noise = *noise;
    if (rank) p.rank = *rank;
  }
};

struct MethodFlags {
  std::string method;
  std::optional<double> theta, v_floor, alpha, beta, eta;
  std::string mode;
  std::optional<Index> q, b;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--method", method, "aepg|proxgd|sgp");
    cmd->add_option("--theta", theta, "extrapolation parameter in [0,1)");
    cmd->add_option("--v-floor", v_floor, "initial stepsize factor");
    cmd->add_option("--alpha", alpha, "global rate multiplier");
    cmd->add_option("--beta", beta, "coordinate-wise multiplier");
    cmd->add_option("--eta", eta, "fixed stepsize (baselines)");
    cmd->add_option("--mode", mode, "full|spider");
    cmd->add_option("--q", q, "spider epoch length");
    cmd->add_option("--b", b, "spider minibatch size");
  }

  void merge_into(MethodSpec& m) const {
    if (!method.empty()) {
      if (method == "aepg")
        m.algo = MethodSpec::Algo::Aepg;
      else if (method == "proxgd")
        m.algo = MethodSpec::Algo::ProxGdSpider;
      else if (method == "sgp")
        m.algo = MethodSpec::Algo::SgpSpider;
      else
        throw ConfigError("--method must be aepg|proxgd|sgp");
      m.name = method;
    }
    if (theta) m.theta = theta;
    if (v_floor) m.v_floor = v_floor;
    if (alpha) m.alpha = alpha;
    if (beta) m.beta = beta;
    if (eta) m.eta = *eta;
    if (!mode.empty()) {
      if (mode == "spider")
        m.spider = true;
      else if (mode == "full")
        m.spider = false;
      else
        throw ConfigError("--mode must be full|spider");
    }
    if (q) m.q = q;
    if (b) m.b = b;
  }
};

int dispatch(int argc, char** argv) {
  CLI::App app{"adaptive extrapolated proximal gradient benchmark"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  GenOptions gen_opt;
  gen->add_option("--rows", gen_opt.rows, "rows")->required();
  gen->add_option("--cols", gen_opt.cols, "cols")->required();
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("-o,--output", gen_opt.output, "output file")->required();

  // ---- run ----
  auto* run_cmd = app.add_subcommand("run", "run one method on one problem");
  std::string run_config;
  run_cmd->add_option("--config", run_config, "experiment config JSON");
  ProblemFlags run_problem;
  run_problem.add_to(run_cmd);
  MethodFlags run_method_flags;
  run_method_flags.add_to(run_cmd);
  std::optional<std::uint64_t> run_iters;
  std::optional<double> run_time_budget;
  std::optional<std::uint64_t> run_seed;
  RunOptions run_opt;
  run_cmd->add_option("--iters", run_iters, "iteration budget T");
  run_cmd->add_option("--time-budget", run_time_budget, "wall-clock budget (s)");
  run_cmd->add_option("--seed", run_seed, "run seed");
  run_cmd->add_flag("--audit", run_opt.audit, "retain state log and audit");
  run_cmd->add_flag("--no-timing", run_opt.no_timing,
                    "zero wall-clock columns for byte-stable output");
  run_cmd->add_option("-o,--out", run_opt.output_dir, "output directory");

  // ---- compare ----
  auto* cmp = app.add_subcommand("compare", "sweep methods and rank them");
  std::string cmp_config;
  cmp->add_option("--config", cmp_config, "experiment config JSON")->required();
  CompareOptions cmp_opt;
  std::optional<std::uint64_t> cmp_iters, cmp_cost;
  std::optional<double> cmp_seconds;
  std::optional<std::string> cmp_out;
  std::vector<std::uint64_t> cmp_seeds;
  cmp->add_option("--iters", cmp_iters, "iteration budget override");
  cmp->add_option("--cost", cmp_cost, "gradient-cost budget for the ranking");
  cmp->add_option("--seconds", cmp_seconds, "wall-time budget for the ranking");
  cmp->add_option("--seeds", cmp_seeds, "seed list override");
  cmp->add_option("-o,--out", cmp_out, "output directory override");
  cmp->add_option("--jobs", cmp_opt.jobs, "parallel sub-runs");
  cmp->add_flag("--no-timing", cmp_opt.no_timing,
                "zero wall columns; plot against gradient cost");

  // ---- check ----
  auto* check = app.add_subcommand("check", "print the audit report of a run");
  CheckOptions check_opt;
  check->add_option("path", check_opt.path, "run directory or audit.json")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ExitCode::kConfigError;
  }

  if (gen->parsed()) {
    gen_opt.seed = gen_seed ? *gen_seed : env_seed().value_or(0);
    return cmd_gen(gen_opt);
  }

  if (run_cmd->parsed()) {
    MethodSpec method;
    method.name = "aepg";
    if (!run_config.empty()) {
      const Experiment e = load_experiment(run_config);
      run_opt.problem = e.problem;
      if (e.methods.size() > 1 && run_method_flags.method.empty())
        throw ConfigError(
            "config lists several methods; pick one with --method or use "
            "compare");
      if (!e.methods.empty()) method = e.methods.front();
      if (e.seeds.size() > 1 && !run_seed)
        throw ConfigError("config lists several seeds; pick one with --seed");
      if (!e.seeds.empty()) run_opt.seed = e.seeds.front();
      run_opt.budget = e.budget;
      run_opt.output_dir = e.output_dir;
    }
    run_problem.merge_into(run_opt.problem, !run_config.empty());
    run_method_flags.merge_into(method);
    run_opt.method = method;
    if (run_seed)
      run_opt.seed = *run_seed;
    else if (run_config.empty())
      run_opt.seed = env_seed().value_or(0);
    if (run_iters) run_opt.budget.iterations = *run_iters;
    if (run_time_budget) run_opt.budget.seconds = run_time_budget;
    return cmd_run(run_opt);
  }

  if (cmp->parsed()) {
    cmp_opt.experiment = load_experiment(cmp_config);
    if (cmp_iters) cmp_opt.experiment.budget.iterations = *cmp_iters;
    if (cmp_cost) cmp_opt.experiment.budget.cost = cmp_cost;
    if (cmp_seconds) cmp_opt.experiment.budget.seconds = cmp_seconds;
    if (!cmp_seeds.empty()) cmp_opt.experiment.seeds = cmp_seeds;
    if (cmp_opt.experiment.seeds.empty())
      cmp_opt.experiment.seeds = {env_seed().value_or(0)};
    if (cmp_out) cmp_opt.experiment.output_dir = *cmp_out;
    return cmd_compare(cmp_opt);
  }

  if (check->parsed()) return cmd_check(check_opt);

  return ExitCode::kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const aepg::NumericAbort& e) {
    const std::filesystem::path dump = "aepg_abort_dump.txt";
    try {
      std::ofstream os(dump);
      os << e.what() << "\n" << e.state_dump() << "\n";
      std::fprintf(stderr, "aepg: numeric abort: %s (state dump: %s)\n",
                   e.what(), dump.string().c_str());
    } catch (...) {
      std::fprintf(stderr, "aepg: numeric abort: %s\n", e.what());
    }
    return aepg::ExitCode::kNumericAbort;
  } catch (const aepg::Error& e) {
    std::fprintf(stderr, "aepg: %s\n", e.what());
    return aepg::ExitCode::kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "aepg: %s\n", e.what());
    return aepg::ExitCode::kConfigError;
  }
}
