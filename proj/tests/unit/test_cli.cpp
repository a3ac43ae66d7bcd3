#include "pded/cli.hpp"
#include "pded/dataset_io.hpp"

#include "scratch_dir.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <iterator>
#include <sstream>

using pded::testing::ScratchDir;
namespace cli = pded::cli;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kBank = std::string(PDED_SOURCE_DIR) + "/data/strategy_bank.json";

}  // namespace

TEST_CASE("help on every subcommand lists its flags") {
  struct Case {
    std::vector<std::string> args;
    std::vector<std::string> flags;
  };
  for (const auto& c : std::vector<Case>{
           {{"--help"}, {"gen", "run", "report", "bank"}},
           {{"gen", "--help"}, {"--pde", "--out", "--seed"}},
           {{"run", "--help"}, {"--config", "--out", "--resume", "--jobs"}},
           {{"report", "--help"}, {"--runs", "--format", "--out"}},
           {{"bank", "--help"}, {"validate", "generate"}},
           {{"bank", "validate", "--help"}, {"--path"}},
           {{"bank", "generate", "--help"}, {"--out", "--k", "--base-url", "--model"}},
       }) {
    const auto r = invoke(c.args);
    CAPTURE(c.args.front());
    CHECK(r.code == cli::kExitOk);
    for (const auto& f : c.flags) CHECK(r.out.find(f) != std::string::npos);
  }
}

TEST_CASE("usage errors exit 1 with the prefix") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"run"},
           {"run", "--config", "/nonexistent/config.json", "--out", "x"},
           {"gen", "--pde", "heat", "--out", "x"},
           {"gen", "--pde", "fisher", "--out", "x", "--colour", "red"},
           {"report", "--runs", "/nonexistent", "--out", "x"},
           {"frobnicate"},
       }) {
    const auto r = invoke(args);
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.rfind("pded-error:", 0) == 0);
  }
  const auto r = invoke({"run"});
  CHECK(r.err.find("--config") != std::string::npos);
}

TEST_CASE("gen writes the benchmark grid deterministically") {
  ScratchDir dir("cli_gen");
  const auto a = (dir / "a.pded").string();
  const auto b = (dir / "b.pded").string();
  REQUIRE(invoke({"gen", "--pde", "fisher", "--out", a, "--seed", "7"}).code == cli::kExitOk);
  REQUIRE(invoke({"gen", "--pde", "fisher", "--out", b, "--seed", "7"}).code == cli::kExitOk);
  const auto d = pded::load_dataset(a);
  CHECK(d.nx() == 200);
  CHECK(d.nt() == 100);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a + ".meta.json") == slurp(b + ".meta.json"));
}

TEST_CASE("runtime errors exit 2") {
  ScratchDir dir("cli_rt");
  std::ofstream(dir / "bad.json") << "{\"T\": \"many\"}";
  auto r = invoke({"run", "--config", (dir / "bad.json").string(), "--out", (dir / "out").string()});
  CHECK(r.code == cli::kExitRuntime);
  CHECK(r.err.rfind("pded-error:", 0) == 0);

  std::ofstream(dir / "bank.json") << "[]";
  r = invoke({"bank", "validate", "--path", (dir / "bank.json").string()});
  CHECK(r.code == cli::kExitRuntime);

  std::filesystem::create_directories(dir / "empty");
  r = invoke({"report", "--runs", (dir / "empty").string(), "--out", (dir / "s.csv").string()});
  CHECK(r.code == cli::kExitRuntime);
  CHECK(r.err.find("NoRuns") != std::string::npos);
}

TEST_CASE("bank validate accepts the shipped bank") {
  const auto r = invoke({"bank", "validate", "--path", kBank});
  CHECK(r.code == cli::kExitOk);
  CHECK_FALSE(r.out.empty());
}

TEST_CASE("run then report") {
  ScratchDir dir("cli_run");
  REQUIRE(invoke({"gen", "--pde", "fisher", "--out", (dir / "fisher.pded").string()}).code == cli::kExitOk);
  nlohmann::json cfg{{"dataset", "fisher.pded"}, {"bank", kBank}, {"T", 12},     {"K_init", 4},
                     {"trials", 3},              {"seed", 5},     {"log_timing", false}};
  std::ofstream(dir / "run.json") << cfg.dump(2);

  const auto out = (dir / "runs").string();
  auto r = invoke({"run", "--config", (dir / "run.json").string(), "--out", out, "--jobs", "2"});
  REQUIRE(r.code == cli::kExitOk);
  for (int k = 0; k < 3; ++k) CHECK(std::filesystem::exists(dir / "runs" / ("trial_" + std::to_string(k) + ".jsonl")));
  const auto first = slurp(dir / "runs" / "trial_1.jsonl");

  // Same argv, same files: identical logs.
  r = invoke({"run", "--config", (dir / "run.json").string(), "--out", out});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(slurp(dir / "runs" / "trial_1.jsonl") == first);

  const auto csv = (dir / "summary.csv").string();
  r = invoke({"report", "--runs", out, "--format", "csv", "--out", csv});
  REQUIRE(r.code == cli::kExitOk);
  const auto text = slurp(csv);
  CHECK(text.rfind("pde,mode,trials,", 0) == 0);
  CHECK(text.find("fisher,neurosym_bo,3,") != std::string::npos);
  CHECK(std::filesystem::exists(csv + ".trajectory.csv"));

  // The mean column equals the mean of the footers' test R².
  double sum = 0;
  for (int k = 0; k < 3; ++k) {
    std::ifstream in(dir / "runs" / ("trial_" + std::to_string(k) + ".jsonl"));
    std::string line, last;
    while (std::getline(in, line)) last = line;
    sum += nlohmann::json::parse(last)["test_r2"].get<double>();
  }
  std::istringstream rows(text);
  std::string header, row;
  std::getline(rows, header);
  std::getline(rows, row);
  std::vector<std::string> cells;
  std::stringstream ss(row);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  REQUIRE(cells.size() >= 5);
  CHECK(std::stod(cells[4]) == doctest::Approx(sum / 3.0).epsilon(1e-12));
}
