#include "pded/engine.hpp"
#include "pded/error.hpp"

#include "scratch_dir.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <iterator>

using namespace pded;
using pded::testing::ScratchDir;

namespace {

std::shared_ptr<const Dataset> fisher_data() {
  static const auto data = [] {
    auto spec = default_spec(PdeKind::Fisher);
    spec.nx = 64;
    spec.nt = 40;
    return std::make_shared<const Dataset>(generate(spec));
  }();
  return data;
}

DatasetMeta fisher_meta() {
  DatasetMeta m;
  m.pde = "fisher";
  m.ground_truth = default_spec(PdeKind::Fisher).ground_truth;
  return m;
}

const StrategyBank& bank() {
  static const StrategyBank b = load_bank(std::filesystem::path(PDED_SOURCE_DIR) / "data" / "strategy_bank.json");
  return b;
}

RunConfig small_config(RunMode mode = RunMode::NeuroSymBo) {
  RunConfig c;
  c.mode = mode;
  c.T = 30;
  c.K_init = 5;
  c.seed = 11;
  c.log_timing = false;
  c.proposer.p_truth = 0.0;
  return c;
}

Engine make_engine(const RunConfig& cfg, int trial = 0) {
  auto meta = fisher_meta();
  return Engine(cfg, fisher_data(), meta, bank(), make_proposer(cfg.proposer, cfg.seed + trial, meta.ground_truth, trial),
                trial);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = config_from_json(R"({"dataset": "d.bin", "bank": "b.json", "mode": "fixed_prompt", "T": 20,
    "K_init": 3, "lambda": 0.02, "kernel": "categorical", "seed": 9,
    "stridge": {"threshold": 0.05}, "proposer": {"backend": "mock", "p_truth": 0.1}})");
  CHECK(c.dataset == "d.bin");
  CHECK(c.mode == RunMode::FixedPrompt);
  CHECK(c.T == 20);
  CHECK(c.K_init == 3);
  CHECK(c.lambda == 0.02);
  CHECK(c.stridge.lambda_parsimony == 0.02);
  CHECK(c.kernel == KernelKind::Categorical);
  CHECK(c.seed == 9);
  CHECK(c.proposer.p_truth == 0.1);
  CHECK(c.trials == 5);

  CHECK_THROWS_AS(config_from_json(R"({"dataset": "d", "bogus": 1})"), Error);
  CHECK_THROWS_AS(config_from_json(R"({"proposer": {"colour": 1}})"), Error);
  CHECK_THROWS_AS(config_from_json(R"({"T": 5, "K_init": 10})"), Error);
  CHECK_THROWS_AS(config_from_json(R"({"mode": "greedy"})"), Error);
  CHECK_THROWS_AS(config_from_json("not json"), Error);

  const auto again = config_from_json(config_to_json(c));
  CHECK(config_hash(again) == config_hash(c));
  auto other = c;
  other.seed = 10;
  CHECK(config_hash(other) != config_hash(c));
}

TEST_CASE("record json round trip") {
  IterationRecord r;
  r.iter = 7;
  r.strategy_id = 3;
  r.strategy_category = StrategyCategory::Mutation;
  r.prompt_sha256 = std::string(64, 'a');
  r.raw_line_count = 5;
  r.parsed_count = 4;
  r.evaluated_count = 3;
  r.best_candidate = CandidateSummary{"u_t = u + u_xx", {0.1, 1.0 / 3.0}, {0, 1}, 0.25, 0.7};
  r.s_t = 0.7;
  r.y_star = 0.8;
  r.best_test_r2 = 0.123456789012345;
  r.error = "Timeout: slow";
  const auto text = record_to_json(r);
  const auto back = record_from_json(text);
  CHECK(record_to_json(back) == text);
  CHECK(back.best_candidate->coefficients[1] == 1.0 / 3.0);
  const auto j = nlohmann::ordered_json::parse(text);
  CHECK(j.begin().key() == "iter");
  CHECK_THROWS_AS(record_from_json("{"), Error);
}

TEST_CASE("engine invariants over a mock run") {
  auto cfg = small_config();
  auto engine = make_engine(cfg);
  const auto log = engine.run();
  REQUIRE(log.records.size() == 30);
  const auto& st = engine.state();
  CHECK(st.observations.size() == 30);

  std::optional<double> prev;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    CHECK(r.iter == static_cast<int>(i) + 1);
    REQUIRE(r.strategy_id);
    CHECK(*r.strategy_id >= 1);
    CHECK(*r.strategy_id <= bank().size());
    CHECK(st.observations[i].strategy_id == *r.strategy_id);
    CHECK(st.observations[i].fitness == r.s_t);
    CHECK(r.parsed_count <= cfg.m_candidates);
    CHECK(r.evaluated_count <= r.parsed_count);
    CHECK(r.s_t >= 0.0);
    CHECK(r.s_t <= 1.0);
    if (prev) {
      REQUIRE(r.y_star);
      CHECK(*r.y_star >= *prev);
    }
    if (r.y_star) {
      CHECK(*r.y_star >= r.s_t);
      prev = r.y_star;
    }
  }
  // history holds unique fitted skeletons
  for (std::size_t a = 0; a < st.history.size(); ++a)
    for (std::size_t b = a + 1; b < st.history.size(); ++b) CHECK(st.history[a].expression != st.history[b].expression);
  REQUIRE(st.best);
  CHECK(st.best->score == *st.y_star);
}

TEST_CASE("prompt digests match an independent reconstruction") {
  auto cfg = small_config();
  auto engine = make_engine(cfg);
  const auto log = engine.run();
  const std::string task = task_context("fisher", cfg.m_candidates);
  std::vector<HistoryEntry> history;
  for (const auto& r : log.records) {
    const auto& s = bank().at(*r.strategy_id);
    const auto prompt = build_prompt(task, format_history(history, cfg.top_n), s.text);
    CHECK(prompt.sha256_hex() == r.prompt_sha256);
    if (!r.best_candidate) continue;
    const auto proposed = parse_equation(r.best_candidate->skeleton);
    std::vector<Term> kept;
    for (auto k : r.best_candidate->support) kept.push_back(proposed.terms()[k]);
    const Expression fitted(std::move(kept));
    auto it = std::find_if(history.begin(), history.end(), [&](const HistoryEntry& h) { return h.expression == fitted; });
    if (it == history.end()) history.push_back({fitted, r.s_t});
    else it->score = std::max(it->score, r.s_t);
  }
}

TEST_CASE("warm-up covers the whole run when K_init = T") {
  auto cfg = small_config();
  cfg.T = 10;
  cfg.K_init = 10;
  auto engine = make_engine(cfg);
  const auto log = engine.run();
  // Strategy picks equal the uniform sampler driven by the trial seed.
  CounterRng rng(cfg.seed);
  for (const auto& r : log.records) CHECK(*r.strategy_id == sample_random(bank(), rng));
}

TEST_CASE("fixed prompt mode records no strategies") {
  auto engine = make_engine(small_config(RunMode::FixedPrompt));
  const auto log = engine.run();
  CHECK(engine.state().observations.empty());
  for (const auto& r : log.records) {
    CHECK_FALSE(r.strategy_id);
    CHECK_FALSE(r.strategy_category);
  }
}

TEST_CASE("mock runs are bitwise reproducible") {
  ScratchDir dir("det");
  auto cfg = small_config();
  auto a = make_engine(cfg);
  a.run(trial_paths(dir / "a", 0));
  auto b = make_engine(cfg);
  b.run(trial_paths(dir / "b", 0));
  CHECK(slurp(trial_paths(dir / "a", 0).log) == slurp(trial_paths(dir / "b", 0).log));

  auto c = make_engine(cfg, 1);
  c.run(trial_paths(dir / "c", 1));
  CHECK(lines_of(trial_paths(dir / "c", 1).log).size() == 32);
}

TEST_CASE("log file has header, records and footer") {
  ScratchDir dir("log");
  auto cfg = small_config();
  auto engine = make_engine(cfg);
  engine.run(trial_paths(dir.path(), 0));
  const auto lines = lines_of(trial_paths(dir.path(), 0).log);
  REQUIRE(lines.size() == 32);
  const auto header = nlohmann::json::parse(lines.front());
  CHECK(header["header"] == true);
  CHECK(header["pde"] == "fisher");
  CHECK(header["config_hash"] == config_hash(cfg));
  CHECK(header["dataset_crc"] == dataset_crc(*fisher_data()));
  const auto footer = nlohmann::json::parse(lines.back());
  CHECK(footer["footer"] == true);
  CHECK(footer["iter"] == 30);
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) CHECK(nlohmann::json::parse(lines[i])["elapsed_ms"] == 0);
}

TEST_CASE("checkpoint round trip and resume") {
  ScratchDir dir("resume");
  auto cfg = small_config();
  cfg.T = 60;
  cfg.checkpoint_every = 25;

  auto full = make_engine(cfg);
  full.run(trial_paths(dir / "full", 0));

  const auto paths = trial_paths(dir / "part", 0);
  auto part = make_engine(cfg);
  part.stop_after(40);
  part.run(paths);
  const auto ckpt = load_checkpoint(paths.checkpoint);
  CHECK(ckpt.state.iter == 25);
  CHECK(checkpoint_to_json(checkpoint_from_json(checkpoint_to_json(ckpt))) == checkpoint_to_json(ckpt));

  auto resumed = make_engine(cfg);
  resumed.resume(ckpt, paths);
  CHECK(slurp(paths.log) == slurp(trial_paths(dir / "full", 0).log));

  CHECK_THROWS_AS(checkpoint_from_json("{\"trial\": 0}"), Error);
}

TEST_CASE("resume rejects a foreign checkpoint") {
  ScratchDir dir("mismatch");
  auto cfg = small_config();
  const auto paths = trial_paths(dir.path(), 0);
  auto part = make_engine(cfg);
  part.stop_after(26);
  part.run(paths);
  const auto ckpt = load_checkpoint(paths.checkpoint);

  auto other = cfg;
  other.lambda = 0.05;
  auto engine = make_engine(other);
  try {
    engine.resume(ckpt, paths);
    FAIL("expected BackendMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendMismatch);
  }
}

TEST_CASE("proposer failures are logged and the run continues") {
  auto cfg = small_config();
  cfg.proposer.backend = BackendKind::Replay;
  auto meta = fisher_meta();
  Engine engine(cfg, fisher_data(), meta, bank(), std::make_unique<ReplayProposer>(std::vector<ReplayRecord>{}));
  const auto log = engine.run();
  REQUIRE(log.records.size() == 30);
  for (const auto& r : log.records) {
    CHECK(r.error.find("ReplayMiss") != std::string::npos);
    CHECK(r.s_t == 0.0);
  }
  CHECK_FALSE(engine.state().y_star);
}

TEST_CASE("ground truth is recovered when offered") {
  auto cfg = small_config();
  cfg.proposer.p_truth = 1.0;
  auto engine = make_engine(cfg);
  const auto log = engine.run();
  CHECK(log.recovered);
  REQUIRE(engine.state().best);
  CHECK(engine.state().best->expression == default_spec(PdeKind::Fisher).ground_truth.skeleton);
}
