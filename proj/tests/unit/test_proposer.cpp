#include "pded/error.hpp"
#include "pded/proposer.hpp"
#include "pded/solver.hpp"

#include "scratch_dir.hpp"

#include <doctest.h>

#include <fstream>

using namespace pded;
using pded::testing::ScratchDir;

namespace {

ProposerRequest request(int iter, std::optional<StrategyCategory> cat, std::vector<Expression> top = {}) {
  ProposerRequest r;
  r.prompt = build_prompt("task", "history", "strategy " + std::to_string(iter));
  r.context.iteration = iter;
  r.context.category = cat;
  r.context.top_history = std::move(top);
  return r;
}

}  // namespace

TEST_CASE("mock: same seed and state give identical lines") {
  MockConfig cfg;
  cfg.seed = 42;
  MockProposer a(cfg), b(cfg);
  const auto top = std::vector<Expression>{parse_equation("u_t = u*u_x + u_xx")};
  for (int t = 1; t <= 20; ++t)
    for (auto cat : {StrategyCategory::Exploration, StrategyCategory::Mutation}) {
      const auto req = request(t, cat, top);
      CHECK(a.propose(req) == b.propose(req));
      CHECK(a.propose(req) == a.propose(req));
    }
}

TEST_CASE("mock: p_truth = 1 always includes the ground truth") {
  MockConfig cfg;
  cfg.seed = 1;
  cfg.p_truth = 1.0;
  cfg.p_garbage = 0.0;
  cfg.ground_truth = default_spec(PdeKind::Fisher).ground_truth.skeleton;
  MockProposer mock(cfg);
  const auto want = parse_equation("u_t = u_xx + u - u*u^1");
  for (int t = 1; t <= 30; ++t) {
    const auto resp = mock.propose(request(t, StrategyCategory::Exploration));
    bool found = false;
    for (const auto& line : resp.raw_lines) found = found || try_parse_equation(line) == want;
    CHECK(found);
  }
}

TEST_CASE("mock: p_garbage = 1 makes every line unparseable") {
  MockConfig cfg;
  cfg.p_garbage = 1.0;
  MockProposer mock(cfg);
  for (int t = 1; t <= 30; ++t)
    for (const auto& line : mock.propose(request(t, StrategyCategory::Refinement)).raw_lines)
      CHECK_FALSE(try_parse_equation(line).has_value());
}

TEST_CASE("mock policies follow their category") {
  const Expression best = parse_equation("u_t = u*u_x + u_xx");
  MockConfig cfg;
  cfg.p_garbage = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng rng(seed);
    ProposalContext ctx;
    ctx.top_history = {best};

    ctx.category = StrategyCategory::Parsimony;
    for (const auto& line : mock_policy(ctx, rng, cfg, 5)) {
      const auto e = parse_equation(line);
      CHECK(e.size() == 1);
      CHECK((e.terms()[0] == best.terms()[0] || e.terms()[0] == best.terms()[1]));
    }

    ctx.category = StrategyCategory::Refinement;
    for (const auto& line : mock_policy(ctx, rng, cfg, 5)) {
      const auto e = parse_equation(line);
      CHECK(e != best);
      int changed = 0;
      for (auto kind : kAllFactorKinds) {
        int a = 0, b = 0;
        for (const auto& t : e.terms()) a += t.exponent_of(kind);
        for (const auto& t : best.terms()) b += t.exponent_of(kind);
        changed += std::abs(a - b);
      }
      CHECK(changed == 1);
    }

    ctx.category = StrategyCategory::Mutation;
    for (const auto& line : mock_policy(ctx, rng, cfg, 5)) {
      const auto e = parse_equation(line);
      int kept = 0;
      for (const auto& t : best.terms())
        for (const auto& u : e.terms()) kept += (t == u);
      CHECK(kept >= 1);
    }

    ctx.category = StrategyCategory::Exploration;
    for (const auto& line : mock_policy(ctx, rng, cfg, 5)) {
      const auto e = parse_equation(line);
      CHECK(e.size() >= 1);
      CHECK(e.size() <= 4);
    }
  }
}

TEST_CASE("replay reproduces a recording") {
  ScratchDir dir("replay");
  const auto path = dir / "rec.jsonl";
  MockConfig cfg;
  cfg.seed = 5;
  std::vector<ProposerResponse> original;
  std::vector<ProposerRequest> requests;
  {
    RecordingProposer rec(std::make_unique<MockProposer>(cfg), path);
    for (int t = 1; t <= 15; ++t) {
      // Repeat some prompts so queues hold more than one response.
      requests.push_back(request(t % 4, StrategyCategory::Exploration));
      original.push_back(rec.propose(requests.back()));
    }
  }
  ReplayProposer replay(path);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto got = replay.propose(requests[i]);
    CHECK(got.raw_lines == original[i].raw_lines);
    CHECK(got.backend == BackendKind::Replay);
  }
  try {
    replay.propose(requests.front());
    FAIL("expected ReplayMiss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ReplayMiss);
  }
}

TEST_CASE("replay file errors") {
  ScratchDir dir("replay_bad");
  const auto path = dir / "bad.jsonl";
  std::ofstream(path) << "{not json}\n";
  CHECK_THROWS_AS(read_replay_file(path), Error);
  CHECK_THROWS_AS(read_replay_file(dir / "missing.jsonl"), Error);
}

TEST_CASE("backend names") {
  CHECK(to_string(BackendKind::Mock) == "mock");
  CHECK(backend_from_string("replay") == BackendKind::Replay);
  CHECK(backend_from_string("llm") == BackendKind::Llm);
  CHECK_THROWS_AS(backend_from_string("gpt"), Error);
}
