#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = AEPG_CLI_PATH;

struct CommandResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

CommandResult run_cli(const std::string& args, const fs::path& workdir) {
  const fs::path log = workdir / "cmd.log";
  const std::string cmd = "cd '" + workdir.string() + "' && " + kCli + " " +
                          args + " >'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream is(log);
  std::ostringstream os;
  os << is.rdbuf();
  return {WEXITSTATUS(status), os.str()};
}

fs::path fresh_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

std::size_t count_occurrences(const std::string& s, const std::string& needle) {
  std::size_t n = 0, pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

}  // namespace

TEST_CASE("gen writes a normalized dataset deterministically") {
  const fs::path dir = fresh_dir("aepg_cli_gen");

  auto r1 = run_cli("gen --rows 500 --cols 100 --seed 1 -o d.bin", dir);
  REQUIRE(r1.exit_code == 0);
  const auto sidecar = nlohmann::json::parse(slurp(dir / "d.bin.json"));
  CHECK(sidecar.at("frobenius_norm").get<double>() == 1.0);
  CHECK(sidecar.at("rows").get<long>() == 500);
  CHECK(sidecar.at("seed").get<unsigned long long>() == 1);

  const std::string bytes1 = slurp(dir / "d.bin");
  auto r2 = run_cli("gen --rows 500 --cols 100 --seed 1 -o d2.bin", dir);
  REQUIRE(r2.exit_code == 0);
  CHECK(bytes1 == slurp(dir / "d2.bin"));
  CHECK(!bytes1.empty());
}

TEST_CASE("gen rejects an empty shape with exit code 2") {
  const fs::path dir = fresh_dir("aepg_cli_gen_bad");
  auto r = run_cli("gen --rows 0 --cols 10 --seed 1 -o d.bin", dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("run produces T+1 trace rows") {
  const fs::path dir = fresh_dir("aepg_cli_rowcount");
  auto r = run_cli(
      "run --problem phase_retrieval --rows 60 --cols 30 --seed 1 "
      "--theta 0.9 --iters 2000 --no-timing -o out",
      dir);
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(dir / "out" / "trace.csv");
  CHECK(count_lines(csv) == 2002);  // header + 2001 records
}

TEST_CASE("run on a binary dataset with spider accounting") {
  const fs::path dir = fresh_dir("aepg_cli_spider");
  REQUIRE(run_cli("gen --rows 529 --cols 40 --seed 7 -o d.bin", dir).exit_code ==
          0);
  auto r = run_cli(
      "run --problem phase_retrieval --data d.bin --seed 2 --mode spider "
      "--q 23 --b 23 --iters 100 --no-timing -o out",
      dir);
  REQUIRE(r.exit_code == 0);
  const auto meta = nlohmann::json::parse(slurp(dir / "out" / "meta.json"));
  // refreshes at t = 0, 23, 46, 69, 92 within 100 steps
  CHECK(meta.at("total_full_evals").get<unsigned long long>() == 5);
  CHECK(meta.at("total_component_evals").get<unsigned long long>() == 23 * 95);
  CHECK(meta.at("problem").at("components").get<long>() == 529);
}

TEST_CASE("theta = 1.0 is rejected with exit code 2") {
  const fs::path dir = fresh_dir("aepg_cli_theta");
  auto r = run_cli(
      "run --problem phase_retrieval --rows 40 --cols 20 --theta 1.0 "
      "--iters 5 -o out",
      dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("theta") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected") {
  const fs::path dir = fresh_dir("aepg_cli_badcfg");
  std::ofstream(dir / "cfg.json") << R"({
    "problem": {"kind": "phase_retrieval",
                "dataset": {"source": "synthetic", "rows": 40, "cols": 20}},
    "surprise": 1
  })";
  auto r = run_cli("run --config cfg.json --iters 5 -o out", dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("surprise") != std::string::npos);
}

TEST_CASE("AEPG_SEED provides the default seed") {
  const fs::path dir = fresh_dir("aepg_cli_envseed");
  const std::string cmd =
      "cd '" + dir.string() + "' && AEPG_SEED=77 " + kCli +
      " run --problem phase_retrieval --rows 40 --cols 20 --iters 5 "
      "--no-timing -o out >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  const auto meta = nlohmann::json::parse(slurp(dir / "out" / "meta.json"));
  CHECK(meta.at("seed").get<unsigned long long>() == 77);
}

TEST_CASE("run with --audit enables check") {
  const fs::path dir = fresh_dir("aepg_cli_audit");
  auto r = run_cli(
      "run --problem eigenvalue --rows 30 --cols 25 --rank 3 --seed 1 "
      "--iters 300 --audit --no-timing -o out",
      dir);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(dir / "out" / "audit.json"));

  auto chk = run_cli("check out", dir);
  CHECK(chk.exit_code == 0);
  CHECK(chk.output.find("kappa") != std::string::npos);
  CHECK(count_occurrences(chk.output, "[PASS]") == 8);
}

TEST_CASE("check on a failing fixture exits 1 and names the check") {
  const fs::path dir = fresh_dir("aepg_cli_check_fail");
  std::ofstream(dir / "audit.json") << R"({
    "all_pass": false,
    "checks": [
      {"name": "sigma within [0, theta]", "pass": false,
       "worst_violation": 0.5, "tolerance": 1e-12, "worst_t": 37},
      {"name": "v envelope", "pass": true,
       "worst_violation": 0.0, "tolerance": 1e-9, "worst_t": 0}
    ],
    "kappa_bound": 11.0, "kappa_observed": 1.4,
    "kappa_grave_observed": 1.01, "sum_dsq": 1.0, "sum_dsq_bound": 2.0
  })";
  auto r = run_cli("check audit.json", dir);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("sigma within [0, theta]") != std::string::npos);
}

TEST_CASE("check without audit data exits 2") {
  const fs::path dir = fresh_dir("aepg_cli_check_missing");
  auto r = run_cli("check nothing_here", dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("compare emits a ranking table and deterministic curves") {
  const fs::path dir = fresh_dir("aepg_cli_compare");
  std::ofstream(dir / "cfg.json") << R"({
    "problem": {"kind": "phase_retrieval",
                "dataset": {"source": "synthetic", "rows": 80, "cols": 30,
                            "seed": 1},
                "lambda": 0.001},
    "methods": [
      {"name": "fast", "algorithm": "aepg", "theta": 0.9,
       "mode": "spider", "q": 9, "b": 9},
      {"name": "slow", "algorithm": "proxgd-spider", "eta": 0.1,
       "q": 9, "b": 9}
    ],
    "seeds": [1],
    "budget": {"iterations": 120, "cost": 1500},
    "output_dir": "sweep"
  })";

  auto r = run_cli("compare --config cfg.json --no-timing", dir);
  REQUIRE(r.exit_code == 0);

  const std::string table = slurp(dir / "sweep" / "compare.csv");
  CHECK(table.find("method,seed,objective_at_cost") == 0);
  CHECK(count_lines(table) == 3);  // header + 2 rows
  CHECK(table.find("fast") != std::string::npos);
  CHECK(table.find("slow") != std::string::npos);

  const std::string svg = slurp(dir / "sweep" / "curves.svg");
  CHECK(count_occurrences(svg, "<polyline") == 2);
  CHECK(svg.find(">fast<") != std::string::npos);
  CHECK(svg.find(">slow<") != std::string::npos);

  SECTION("repeated invocation is byte-identical") {
    const std::string svg1 = svg;
    const std::string table1 = table;
    REQUIRE(run_cli("compare --config cfg.json --no-timing", dir).exit_code ==
            0);
    CHECK(slurp(dir / "sweep" / "curves.svg") == svg1);
    CHECK(slurp(dir / "sweep" / "compare.csv") == table1);
  }
}

TEST_CASE("compare requires at least two methods") {
  const fs::path dir = fresh_dir("aepg_cli_compare_one");
  std::ofstream(dir / "cfg.json") << R"({
    "problem": {"kind": "phase_retrieval",
                "dataset": {"source": "synthetic", "rows": 40, "cols": 20,
                            "seed": 1}},
    "methods": [{"name": "only", "algorithm": "aepg"}],
    "seeds": [1],
    "budget": {"iterations": 10}
  })";
  auto r = run_cli("compare --config cfg.json", dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("identical methods produce identical curves") {
  const fs::path dir = fresh_dir("aepg_cli_compare_twins");
  std::ofstream(dir / "cfg.json") << R"({
    "problem": {"kind": "phase_retrieval",
                "dataset": {"source": "synthetic", "rows": 60, "cols": 25,
                            "seed": 2},
                "lambda": 0.001},
    "methods": [
      {"name": "twin-a", "algorithm": "aepg", "theta": 0.5,
       "mode": "spider", "q": 8, "b": 8},
      {"name": "twin-b", "algorithm": "aepg", "theta": 0.5,
       "mode": "spider", "q": 8, "b": 8}
    ],
    "seeds": [3],
    "budget": {"iterations": 60},
    "output_dir": "sweep"
  })";
  REQUIRE(run_cli("compare --config cfg.json --no-timing", dir).exit_code == 0);
  std::string a = slurp(dir / "sweep" / "twin-a-seed3.csv");
  std::string b = slurp(dir / "sweep" / "twin-b-seed3.csv");
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("a failing sub-run yields exit 4 and a partial table") {
  const fs::path dir = fresh_dir("aepg_cli_compare_partial");
  std::ofstream(dir / "cfg.json") << R"({
    "problem": {"kind": "phase_retrieval",
                "dataset": {"source": "synthetic", "rows": 50, "cols": 20,
                            "seed": 1}},
    "methods": [
      {"name": "good-a", "algorithm": "aepg", "theta": 0.5},
      {"name": "good-b", "algorithm": "aepg", "theta": 0.0},
      {"name": "broken", "algorithm": "proxgd-spider", "eta": -1.0}
    ],
    "seeds": [1],
    "budget": {"iterations": 20},
    "output_dir": "sweep"
  })";
  auto r = run_cli("compare --config cfg.json --no-timing", dir);
  CHECK(r.exit_code == 4);
  CHECK(r.output.find("broken") != std::string::npos);
  const std::string table = slurp(dir / "sweep" / "compare.csv");
  CHECK(count_lines(table) == 3);  // header + the two surviving rows
}

TEST_CASE("run on a libsvm dataset with subsampling") {
  const fs::path dir = fresh_dir("aepg_cli_libsvm");
  {
    std::ofstream f(dir / "data.txt");
    for (int i = 0; i < 40; ++i)
      f << (i % 2 ? "+1" : "-1") << " 1:" << 0.1 * i << " 7:" << 1.0 - 0.01 * i
        << " 13:0.5\n";
  }
  auto r = run_cli(
      "run --problem phase_retrieval --data data.txt --subsample-rows 20 "
      "--subsample-cols 10 --seed 4 --iters 30 --no-timing -o out",
      dir);
  REQUIRE(r.exit_code == 0);
  const auto meta = nlohmann::json::parse(slurp(dir / "out" / "meta.json"));
  CHECK(meta.at("problem").at("components").get<long>() == 20);
}
