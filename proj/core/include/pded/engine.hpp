#pragma once

#include "pded/bank.hpp"
#include "pded/bo.hpp"
#include "pded/dataset_io.hpp"
#include "pded/fit.hpp"
#include "pded/numerics.hpp"
#include "pded/proposer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pded {

enum class RunMode { FixedPrompt, NeuroSymBo };

std::string_view to_string(RunMode mode) noexcept;
RunMode mode_from_string(std::string_view name);

inline constexpr std::string_view kDefaultFixedInstruction = "Find the equation that best fits this data.";

struct ProposerConfig {
  BackendKind backend = BackendKind::Mock;
  double p_truth = 0.0;
  double p_garbage = 0.05;
  std::string replay_path;
  std::string record_path;  // optional; "{trial}" expands to the trial index
  double temperature = 0.7;
  int timeout_ms = 60000;
  LlmConfig llm;
};

struct RunConfig {
  std::string dataset;
  std::string bank;
  RunMode mode = RunMode::NeuroSymBo;
  int T = 300;
  int trials = 5;
  int K_init = 10;
  int m_candidates = 5;
  int top_n = 5;
  double lambda = 0.01;
  KernelKind kernel = KernelKind::IndexRBF;
  StridgeConfig stridge;
  ProposerConfig proposer;
  std::uint64_t seed = 0;
  std::string fixed_instruction = std::string(kDefaultFixedInstruction);
  int checkpoint_every = 25;
  bool log_timing = true;

  /// Throws InvalidArgument.
  void validate() const;
};

/// JSON with the RunConfig keys as named above; missing keys take defaults,
/// unknown keys are rejected.
RunConfig config_from_json(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

struct HistoryItem {
  Expression expression;  // fitted skeleton: support terms only
  std::vector<double> coefficients;
  double score = 0.0;
  int iter = 0;
};

struct BestEquation {
  Expression expression;
  std::vector<double> coefficients;
  double score = 0.0;
  double nrmse_train = 0.0;
  double r2_train = 0.0;
  std::optional<double> nrmse_test;
  std::optional<double> r2_test;
  int iter = 0;
};

/// Outcome of fitting one proposed skeleton on the train split.
struct CandidateEvaluation {
  Expression fitted;  // support terms only
  std::vector<double> coefficients;  // aligned with fitted.terms()
  FitResult fit;
};

struct CandidateSummary {
  std::string skeleton;  // as proposed, canonical
  std::vector<double> coefficients;
  std::vector<std::size_t> support;
  double nrmse_train = 0.0;
  double score = 0.0;
};

struct IterationRecord {
  int iter = 0;
  RunMode mode = RunMode::NeuroSymBo;
  std::optional<int> strategy_id;
  std::optional<StrategyCategory> strategy_category;
  std::string prompt_sha256;
  int raw_line_count = 0;
  int parsed_count = 0;
  int evaluated_count = 0;
  std::optional<CandidateSummary> best_candidate;
  double s_t = 0.0;
  std::optional<double> y_star;
  std::optional<double> best_test_r2;
  bool recovered = false;
  std::int64_t elapsed_ms = 0;
  std::string error;
};

struct RunLog {
  std::string header;  // JSON object
  std::vector<IterationRecord> records;
  std::optional<BestEquation> best;
  bool recovered = false;
  std::string footer;  // JSON object
};

std::string record_to_json(const IterationRecord& rec);
IterationRecord record_from_json(std::string_view line);

/// Mutable state of one trial; everything needed to continue a run.
struct EngineState {
  int iter = 0;
  std::vector<HistoryItem> history;
  std::vector<Observation> observations;
  std::optional<double> y_star;  // empty until the first evaluated candidate
  std::optional<BestEquation> best;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_counter = 0;
};

struct Checkpoint {
  int trial = 0;
  EngineState state;
  std::string config_hash;
  std::uint32_t dataset_crc = 0;
  RunConfig config;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(std::string_view text);  // throws CheckpointFormatError
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrialPaths {
  std::filesystem::path log;
  std::filesystem::path checkpoint;
};
TrialPaths trial_paths(const std::filesystem::path& out_dir, int trial);

/// Builds the configured backend. The mock uses `seed` and the ground truth.
std::unique_ptr<Proposer> make_proposer(const ProposerConfig& cfg, std::uint64_t seed,
                                        const std::optional<GroundTruth>& truth, int trial,
                                        bool append_recording = false);

/// One closed-loop trial: strategy selection, prompt assembly, proposal,
/// sparse-regression scoring and feedback, repeated T times.
class Engine {
public:
  Engine(RunConfig cfg, std::shared_ptr<const Dataset> data, std::optional<DatasetMeta> meta,
         std::optional<StrategyBank> bank, std::unique_ptr<Proposer> proposer, int trial = 0);

  /// Fresh run. With empty paths nothing is written.
  RunLog run(const TrialPaths& paths = {});

  /// Continues from a checkpoint; the log file is cut back to the
  /// checkpointed iteration and extended. Throws BackendMismatch when the
  /// checkpoint belongs to a different config or dataset.
  RunLog resume(const Checkpoint& ckpt, const TrialPaths& paths);

  /// Stops after this many iterations without writing a footer (simulates an
  /// interrupted run). Zero disables.
  void stop_after(int iterations) { stop_after_ = iterations; }

  const EngineState& state() const noexcept { return state_; }
  std::uint64_t trial_seed() const noexcept { return cfg_.seed + static_cast<std::uint64_t>(trial_); }

private:
  RunLog loop(const TrialPaths& paths, std::vector<IterationRecord> prior, bool resumed);
  IterationRecord step(int t);
  std::optional<CandidateEvaluation> evaluate(const Expression& skeleton);
  void write_checkpoint(const std::filesystem::path& path) const;
  std::string header_json(bool resumed) const;
  std::string footer_json() const;
  bool is_recovered(const Expression& e) const;

  RunConfig cfg_;
  std::shared_ptr<const Dataset> data_;
  std::optional<DatasetMeta> meta_;
  std::optional<StrategyBank> bank_;
  std::unique_ptr<Proposer> proposer_;
  int trial_ = 0;
  FeatureCache features_;
  std::uint32_t dataset_crc_ = 0;
  std::string task_;
  EngineState state_;
  std::map<Expression, std::optional<CandidateEvaluation>> memo_;
  int stop_after_ = 0;
};

/// Loads dataset, sidecar and bank from the config paths and runs one trial
/// into out_dir/trial_<k>.jsonl with checkpoints next to it.
RunLog run_trial(const RunConfig& cfg, int trial, const std::filesystem::path& out_dir, int stop_after = 0);
RunLog resume_trial(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir);

}  // namespace pded
