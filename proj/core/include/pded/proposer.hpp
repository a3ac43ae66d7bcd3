#pragma once

#include "pded/bank.hpp"
#include "pded/expr.hpp"
#include "pded/prompt.hpp"
#include "pded/rng.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pded {

enum class BackendKind { Llm, Mock, Replay };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind backend_from_string(std::string_view name);

/// Structured engine state that travels with the prompt. Text backends
/// ignore it; the mock proposer reads it instead of parsing prose.
struct ProposalContext {
  int iteration = 0;
  std::optional<StrategyCategory> category;  // nullopt in fixed-prompt mode
  std::vector<Expression> top_history;       // best first
};

struct ProposerRequest {
  PromptParts prompt;
  int m_candidates = 5;
  double temperature = 0.7;
  int timeout_ms = 60000;
  ProposalContext context;
};

struct ProposerResponse {
  std::vector<std::string> raw_lines;
  BackendKind backend = BackendKind::Mock;
  std::int64_t latency_ms = 0;

  bool operator==(const ProposerResponse&) const = default;
};

class Proposer {
public:
  virtual ~Proposer() = default;
  /// Throws Error{Timeout | HttpError | RateLimited | ReplayMiss}.
  virtual ProposerResponse propose(const ProposerRequest& req) = 0;
  virtual BackendKind kind() const noexcept = 0;
  virtual bool deterministic() const noexcept { return true; }
};

// ---------------------------------------------------------------- mock

struct MockConfig {
  std::uint64_t seed = 0;
  double p_truth = 0.0;
  double p_garbage = 0.05;
  std::optional<Expression> ground_truth;
};

/// Category-driven candidate generator:
///   exploration  fresh random skeletons of 1-4 terms
///   parsimony    best skeleton minus one term (fresh if it has one term)
///   mutation     best skeleton with one term added or replaced (even odds)
///   refinement   best skeleton with one exponent moved by +-1 within [1, 4]
///   none         fixed prompt: fresh skeleton (40%), verbatim copy of a
///                history entry (40%) or a refinement of the best (20%)
/// Each line turns into garbage with p_garbage; with p_truth one line is the
/// ground-truth skeleton.
std::vector<std::string> mock_policy(const ProposalContext& ctx, CounterRng& rng, const MockConfig& cfg,
                                     int m_candidates);

/// Random term from the factor grammar (1-2 factors, exponents 1-3).
Term random_term(CounterRng& rng);
/// Random skeleton with 1-4 terms.
Expression random_expression(CounterRng& rng, int max_terms = 4);

class MockProposer final : public Proposer {
public:
  explicit MockProposer(MockConfig cfg) : cfg_(std::move(cfg)) {}
  ProposerResponse propose(const ProposerRequest& req) override;
  BackendKind kind() const noexcept override { return BackendKind::Mock; }
  const MockConfig& config() const noexcept { return cfg_; }

private:
  MockConfig cfg_;
};

// ---------------------------------------------------------------- replay

/// One JSONL line: {"prompt_sha256": hex, "raw_lines": [..]}.
struct ReplayRecord {
  std::string prompt_sha256;
  std::vector<std::string> raw_lines;
};

std::vector<ReplayRecord> read_replay_file(const std::filesystem::path& path);
std::string replay_record_to_json(const ReplayRecord& rec);

class ReplayProposer final : public Proposer {
public:
  explicit ReplayProposer(const std::vector<ReplayRecord>& records);
  explicit ReplayProposer(const std::filesystem::path& path) : ReplayProposer(read_replay_file(path)) {}

  ProposerResponse propose(const ProposerRequest& req) override;
  BackendKind kind() const noexcept override { return BackendKind::Replay; }

  /// Skip the first n responses recorded for each prompt already consumed by
  /// a resumed run; used to fast-forward replay queues.
  void consume(const std::string& prompt_sha256);

private:
  std::mutex mu_;
  std::map<std::string, std::deque<std::vector<std::string>>> queues_;
};

/// Appends every response of the wrapped backend to a replay file.
class RecordingProposer final : public Proposer {
public:
  RecordingProposer(std::unique_ptr<Proposer> inner, const std::filesystem::path& path, bool append = false);

  ProposerResponse propose(const ProposerRequest& req) override;
  BackendKind kind() const noexcept override { return inner_->kind(); }
  bool deterministic() const noexcept override { return inner_->deterministic(); }

private:
  std::unique_ptr<Proposer> inner_;
  std::mutex mu_;
  std::ofstream out_;
};

// ---------------------------------------------------------------- llm

struct LlmConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string model = "meta-llama/Llama-3.2-3B-Instruct";
  int max_tokens = 512;
  int retries = 3;
  int backoff_ms = 500;  // doubled after every rate-limited attempt
  std::string api_key_env = "PDED_API_KEY";
};

/// Request body of an OpenAI-compatible chat completion.
std::string chat_request_body(const LlmConfig& cfg, const std::string& prompt, double temperature);

/// Extracts candidate lines from a completion reply: lines containing "u_t",
/// trimmed to start at "u_t", stopping after m parseable lines.
std::vector<std::string> extract_candidate_lines(const std::string& content, int m_candidates);

class LlmProposer final : public Proposer {
public:
  explicit LlmProposer(LlmConfig cfg);
  ProposerResponse propose(const ProposerRequest& req) override;
  BackendKind kind() const noexcept override { return BackendKind::Llm; }
  bool deterministic() const noexcept override { return false; }

  /// Raw completion text for an arbitrary prompt (used by bank tooling).
  std::string complete(const std::string& prompt, double temperature, int timeout_ms);

private:
  LlmConfig cfg_;
  std::string api_key_;
  std::mutex mu_;
};

}  // namespace pded
