#include "pded/engine.hpp"
#include "pded/error.hpp"
#include "pded/prompt.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <limits>
#include <sstream>

namespace pded {

using ojson = nlohmann::ordered_json;

std::string_view to_string(RunMode mode) noexcept {
  return mode == RunMode::NeuroSymBo ? "neurosym_bo" : "fixed_prompt";
}

RunMode mode_from_string(std::string_view name) {
  if (name == "neurosym_bo" || name == "NeuroSymBo") return RunMode::NeuroSymBo;
  if (name == "fixed_prompt" || name == "FixedPrompt") return RunMode::FixedPrompt;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (T < 1) fail("T must be positive");
  if (trials < 1) fail("trials must be positive");
  if (K_init < 0 || K_init > T) fail("K_init must satisfy 0 <= K_init <= T");
  if (m_candidates < 1) fail("m_candidates must be at least 1");
  if (top_n < 0) fail("top_n must be non-negative");
  if (!std::isfinite(lambda) || lambda < 0) fail("lambda must be finite and non-negative");
  if (checkpoint_every < 0) fail("checkpoint_every must be non-negative");
  if (proposer.p_truth < 0 || proposer.p_truth > 1 || proposer.p_garbage < 0 || proposer.p_garbage > 1)
    fail("mock probabilities must lie in [0, 1]");
  if (proposer.timeout_ms < 1) fail("timeout_ms must be positive");
  if (mode == RunMode::FixedPrompt && fixed_instruction.empty()) fail("fixed_instruction must not be empty");
  stridge.validate();
}

namespace {

template <class T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorCode::InvalidArgument, "unknown config key '" + where + key + "'");
  }
}

nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  j["dataset"] = c.dataset;
  j["bank"] = c.bank;
  j["mode"] = std::string(to_string(c.mode));
  j["T"] = c.T;
  j["trials"] = c.trials;
  j["K_init"] = c.K_init;
  j["m_candidates"] = c.m_candidates;
  j["top_n"] = c.top_n;
  j["lambda"] = c.lambda;
  j["kernel"] = std::string(to_string(c.kernel));
  j["stridge"] = {{"ridge_alpha", c.stridge.ridge_alpha},
                  {"threshold", c.stridge.threshold},
                  {"max_iters", c.stridge.max_iters},
                  {"lambda_parsimony", c.stridge.lambda_parsimony}};
  j["proposer"] = {{"backend", std::string(to_string(c.proposer.backend))},
                   {"p_truth", c.proposer.p_truth},
                   {"p_garbage", c.proposer.p_garbage},
                   {"replay_path", c.proposer.replay_path},
                   {"record_path", c.proposer.record_path},
                   {"temperature", c.proposer.temperature},
                   {"timeout_ms", c.proposer.timeout_ms},
                   {"llm",
                    {{"base_url", c.proposer.llm.base_url},
                     {"model", c.proposer.llm.model},
                     {"max_tokens", c.proposer.llm.max_tokens},
                     {"retries", c.proposer.llm.retries},
                     {"backoff_ms", c.proposer.llm.backoff_ms},
                     {"api_key_env", c.proposer.llm.api_key_env}}}};
  j["seed"] = c.seed;
  j["fixed_instruction"] = c.fixed_instruction;
  j["checkpoint_every"] = c.checkpoint_every;
  j["log_timing"] = c.log_timing;
  return j;
}

RunConfig config_from(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  reject_unknown(j,
                 {"dataset", "bank", "mode", "T", "trials", "K_init", "m_candidates", "top_n", "lambda", "kernel",
                  "stridge", "proposer", "seed", "fixed_instruction", "checkpoint_every", "log_timing"},
                 "");
  RunConfig c;
  take(j, "dataset", c.dataset);
  take(j, "bank", c.bank);
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
  take(j, "T", c.T);
  take(j, "trials", c.trials);
  take(j, "K_init", c.K_init);
  take(j, "m_candidates", c.m_candidates);
  take(j, "top_n", c.top_n);
  take(j, "lambda", c.lambda);
  if (j.contains("kernel")) c.kernel = kernel_from_string(j.at("kernel").get<std::string>());
  if (j.contains("stridge")) {
    const auto& s = j.at("stridge");
    reject_unknown(s, {"ridge_alpha", "threshold", "max_iters", "lambda_parsimony"}, "stridge.");
    take(s, "ridge_alpha", c.stridge.ridge_alpha);
    take(s, "threshold", c.stridge.threshold);
    take(s, "max_iters", c.stridge.max_iters);
  }
  if (j.contains("proposer")) {
    const auto& p = j.at("proposer");
    reject_unknown(p, {"backend", "p_truth", "p_garbage", "replay_path", "record_path", "temperature", "timeout_ms", "llm"},
                   "proposer.");
    if (p.contains("backend")) c.proposer.backend = backend_from_string(p.at("backend").get<std::string>());
    take(p, "p_truth", c.proposer.p_truth);
    take(p, "p_garbage", c.proposer.p_garbage);
    take(p, "replay_path", c.proposer.replay_path);
    take(p, "record_path", c.proposer.record_path);
    take(p, "temperature", c.proposer.temperature);
    take(p, "timeout_ms", c.proposer.timeout_ms);
    if (p.contains("llm")) {
      const auto& l = p.at("llm");
      reject_unknown(l, {"base_url", "model", "max_tokens", "retries", "backoff_ms", "api_key_env"}, "proposer.llm.");
      take(l, "base_url", c.proposer.llm.base_url);
      take(l, "model", c.proposer.llm.model);
      take(l, "max_tokens", c.proposer.llm.max_tokens);
      take(l, "retries", c.proposer.llm.retries);
      take(l, "backoff_ms", c.proposer.llm.backoff_ms);
      take(l, "api_key_env", c.proposer.llm.api_key_env);
    }
  }
  take(j, "seed", c.seed);
  take(j, "fixed_instruction", c.fixed_instruction);
  take(j, "checkpoint_every", c.checkpoint_every);
  take(j, "log_timing", c.log_timing);
  // The parsimony weight has a single source of truth.
  c.stridge.lambda_parsimony = c.lambda;
  c.validate();
  return c;
}

ojson opt(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<double> opt_double(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

ojson best_json(const std::optional<BestEquation>& b) {
  if (!b) return nullptr;
  ojson j;
  j["skeleton"] = to_text(b->expression);
  j["equation"] = to_text(b->expression, std::span<const double>(b->coefficients));
  j["coefficients"] = b->coefficients;
  j["score"] = b->score;
  j["nrmse_train"] = b->nrmse_train;
  j["r2_train"] = b->r2_train;
  j["nrmse_test"] = opt(b->nrmse_test);
  j["r2_test"] = opt(b->r2_test);
  j["iter"] = b->iter;
  return j;
}

std::optional<BestEquation> best_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  BestEquation b;
  b.expression = parse_equation(j.at("skeleton").get<std::string>());
  b.coefficients = j.at("coefficients").get<std::vector<double>>();
  b.score = j.at("score").get<double>();
  b.nrmse_train = j.at("nrmse_train").get<double>();
  b.r2_train = j.at("r2_train").get<double>();
  b.nrmse_test = opt_double(j, "nrmse_test");
  b.r2_test = opt_double(j, "r2_test");
  b.iter = j.at("iter").get<int>();
  return b;
}

std::string dump(const ojson& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

std::string expand_trial(std::string path, int trial) {
  const std::string key = "{trial}";
  for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key))
    path.replace(pos, key.size(), std::to_string(trial));
  return path;
}

}  // namespace

RunConfig config_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    return config_from(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const RunConfig& cfg) { return config_json(cfg).dump(2); }

std::string config_hash(const RunConfig& cfg) { return to_hex(sha256(config_json(cfg).dump())); }

std::string record_to_json(const IterationRecord& r) {
  ojson j;
  j["iter"] = r.iter;
  j["mode"] = std::string(to_string(r.mode));
  j["strategy_id"] = r.strategy_id ? ojson(*r.strategy_id) : ojson(nullptr);
  j["strategy_category"] = r.strategy_category ? ojson(std::string(to_string(*r.strategy_category))) : ojson(nullptr);
  j["prompt_sha256"] = r.prompt_sha256;
  j["raw_line_count"] = r.raw_line_count;
  j["parsed_count"] = r.parsed_count;
  j["evaluated_count"] = r.evaluated_count;
  if (r.best_candidate) {
    const auto& c = *r.best_candidate;
    j["best_candidate"] = {{"skeleton", c.skeleton},
                           {"coefficients", c.coefficients},
                           {"support", c.support},
                           {"nrmse_train", c.nrmse_train},
                           {"score", c.score}};
  } else {
    j["best_candidate"] = nullptr;
  }
  j["S_t"] = r.s_t;
  j["y_star"] = opt(r.y_star);
  j["best_test_r2"] = opt(r.best_test_r2);
  j["recovered"] = r.recovered;
  j["elapsed_ms"] = r.elapsed_ms;
  if (!r.error.empty()) j["error"] = r.error;
  return dump(j);
}

IterationRecord record_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    IterationRecord r;
    r.iter = j.at("iter").get<int>();
    r.mode = mode_from_string(j.at("mode").get<std::string>());
    if (!j.at("strategy_id").is_null()) r.strategy_id = j.at("strategy_id").get<int>();
    if (!j.at("strategy_category").is_null())
      r.strategy_category = category_from_string(j.at("strategy_category").get<std::string>());
    r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
    r.raw_line_count = j.at("raw_line_count").get<int>();
    r.parsed_count = j.at("parsed_count").get<int>();
    r.evaluated_count = j.value("evaluated_count", 0);
    if (!j.at("best_candidate").is_null()) {
      const auto& c = j.at("best_candidate");
      r.best_candidate = CandidateSummary{c.at("skeleton").get<std::string>(),
                                          c.at("coefficients").get<std::vector<double>>(),
                                          c.at("support").get<std::vector<std::size_t>>(),
                                          c.at("nrmse_train").get<double>(), c.at("score").get<double>()};
    }
    r.s_t = j.at("S_t").get<double>();
    r.y_star = opt_double(j, "y_star");
    r.best_test_r2 = opt_double(j, "best_test_r2");
    r.recovered = j.value("recovered", false);
    r.elapsed_ms = j.value("elapsed_ms", std::int64_t{0});
    r.error = j.value("error", std::string{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad log record: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, std::string("bad log record: ") + e.what());
  }
}

std::string checkpoint_to_json(const Checkpoint& c) {
  ojson j;
  j["trial"] = c.trial;
  j["iter"] = c.state.iter;
  ojson hist = ojson::array();
  for (const auto& h : c.state.history)
    hist.push_back({{"skeleton", to_text(h.expression)}, {"coefficients", h.coefficients}, {"score", h.score}, {"iter", h.iter}});
  j["history"] = std::move(hist);
  ojson obs = ojson::array();
  for (const auto& o : c.state.observations) obs.push_back({{"strategy_id", o.strategy_id}, {"fitness", o.fitness}});
  j["observations"] = std::move(obs);
  j["y_star"] = opt(c.state.y_star);
  j["best"] = best_json(c.state.best);
  j["rng"] = {{"seed", c.state.rng_seed}, {"counter", c.state.rng_counter}};
  j["config_hash"] = c.config_hash;
  j["dataset_crc"] = c.dataset_crc;
  j["config"] = ojson::parse(config_json(c.config).dump());
  return j.dump(2);
}

Checkpoint checkpoint_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Checkpoint c;
    c.trial = j.at("trial").get<int>();
    c.state.iter = j.at("iter").get<int>();
    for (const auto& h : j.at("history"))
      c.state.history.push_back({parse_equation(h.at("skeleton").get<std::string>()),
                                 h.at("coefficients").get<std::vector<double>>(), h.at("score").get<double>(),
                                 h.at("iter").get<int>()});
    for (const auto& o : j.at("observations"))
      c.state.observations.push_back({o.at("strategy_id").get<int>(), o.at("fitness").get<double>()});
    c.state.y_star = opt_double(j, "y_star");
    c.state.best = best_from(j.at("best"));
    c.state.rng_seed = j.at("rng").at("seed").get<std::uint64_t>();
    c.state.rng_counter = j.at("rng").at("counter").get<std::uint64_t>();
    c.config_hash = j.at("config_hash").get<std::string>();
    c.dataset_crc = j.at("dataset_crc").get<std::uint32_t>();
    c.config = config_from(j.at("config"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CheckpointFormatError, e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::CheckpointFormatError, e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::CheckpointFormatError, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

TrialPaths trial_paths(const std::filesystem::path& out_dir, int trial) {
  const std::string stem = "trial_" + std::to_string(trial);
  return {out_dir / (stem + ".jsonl"), out_dir / (stem + ".ckpt.json")};
}

std::unique_ptr<Proposer> make_proposer(const ProposerConfig& cfg, std::uint64_t seed,
                                        const std::optional<GroundTruth>& truth, int trial, bool append_recording) {
  std::unique_ptr<Proposer> p;
  switch (cfg.backend) {
    case BackendKind::Mock: {
      MockConfig mc;
      mc.seed = seed;
      mc.p_truth = cfg.p_truth;
      mc.p_garbage = cfg.p_garbage;
      if (truth) mc.ground_truth = truth->skeleton;
      p = std::make_unique<MockProposer>(std::move(mc));
      break;
    }
    case BackendKind::Replay:
      p = std::make_unique<ReplayProposer>(std::filesystem::path(expand_trial(cfg.replay_path, trial)));
      break;
    case BackendKind::Llm: p = std::make_unique<LlmProposer>(cfg.llm); break;
  }
  if (!cfg.record_path.empty())
    p = std::make_unique<RecordingProposer>(std::move(p), expand_trial(cfg.record_path, trial), append_recording);
  return p;
}

// ------------------------------------------------------------------ Engine

Engine::Engine(RunConfig cfg, std::shared_ptr<const Dataset> data, std::optional<DatasetMeta> meta,
               std::optional<StrategyBank> bank, std::unique_ptr<Proposer> proposer, int trial)
    : cfg_(std::move(cfg)),
      data_(std::move(data)),
      meta_(std::move(meta)),
      bank_(std::move(bank)),
      proposer_(std::move(proposer)),
      trial_(trial),
      features_(data_) {
  cfg_.stridge.lambda_parsimony = cfg_.lambda;
  cfg_.validate();
  if (cfg_.mode == RunMode::NeuroSymBo && !bank_)
    throw Error(ErrorCode::InvalidArgument, "NeuroSymBo mode needs a strategy bank");
  if (!proposer_) throw Error(ErrorCode::InvalidArgument, "no proposer backend");
  dataset_crc_ = dataset_crc(*data_);
  task_ = task_context(data_->name, cfg_.m_candidates);
  state_.rng_seed = trial_seed();
}

bool Engine::is_recovered(const Expression& e) const {
  return meta_ && meta_->ground_truth && e == meta_->ground_truth->skeleton;
}

std::optional<CandidateEvaluation> Engine::evaluate(const Expression& skeleton) {
  if (auto it = memo_.find(skeleton); it != memo_.end()) return it->second;
  std::optional<CandidateEvaluation> out;
  try {
    const auto problem = features_.build_problem(skeleton, Split::Train);
    FitResult fit = stridge(problem, cfg_.stridge);
    // An empty support is the zero model u_t = 0: no equation to keep.
    if (!fit.support.empty()) {
      CandidateEvaluation ev;
      ev.fitted = skeleton.subset(fit.support);
      for (auto k : fit.support) ev.coefficients.push_back(fit.coefficients(static_cast<Eigen::Index>(k)));
      ev.fit = std::move(fit);
      out = std::move(ev);
    }
  } catch (const Error&) {
    out = std::nullopt;  // SingularFactor, DegenerateProblem, ZeroVariance: rejected candidate
  }
  memo_.emplace(skeleton, out);
  return out;
}

IterationRecord Engine::step(int t) {
  const auto started = std::chrono::steady_clock::now();
  IterationRecord rec;
  rec.iter = t;
  rec.mode = cfg_.mode;

  std::string instruction = cfg_.fixed_instruction;
  std::optional<StrategyCategory> category;
  int strategy_id = 0;
  if (cfg_.mode == RunMode::NeuroSymBo) {
    CounterRng rng(state_.rng_seed, state_.rng_counter);
    if (t <= cfg_.K_init || state_.observations.size() < 2) {
      strategy_id = sample_random(*bank_, rng);
    } else {
      const GPState gp = fit_gp(state_.observations, cfg_.kernel, bank_->size());
      double incumbent = -std::numeric_limits<double>::infinity();
      if (state_.y_star) {
        incumbent = *state_.y_star;
      } else {
        for (const auto& o : state_.observations) incumbent = std::max(incumbent, o.fitness);
      }
      strategy_id = select_strategy(gp, bank_->size(), incumbent);
    }
    state_.rng_counter = rng.counter();
    const Strategy& s = bank_->at(strategy_id);
    instruction = s.text;
    category = s.category;
    rec.strategy_id = strategy_id;
    rec.strategy_category = category;
  }

  std::vector<HistoryEntry> entries;
  entries.reserve(state_.history.size());
  for (const auto& h : state_.history) entries.push_back({h.expression, h.score});
  const auto top = top_history(entries, cfg_.top_n);

  ProposerRequest req;
  req.prompt = build_prompt(task_, format_history(entries, cfg_.top_n), instruction);
  req.m_candidates = cfg_.m_candidates;
  req.temperature = cfg_.proposer.temperature;
  req.timeout_ms = cfg_.proposer.timeout_ms;
  req.context.iteration = t;
  req.context.category = category;
  for (const auto& e : top) req.context.top_history.push_back(e.expression);
  rec.prompt_sha256 = req.prompt.sha256_hex();

  ProposerResponse resp;
  try {
    resp = proposer_->propose(req);
  } catch (const Error& e) {
    rec.error = e.what();
  }
  rec.raw_line_count = static_cast<int>(resp.raw_lines.size());

  std::optional<CandidateEvaluation> best;
  std::string best_skeleton;
  for (const auto& line : resp.raw_lines) {
    if (rec.parsed_count >= cfg_.m_candidates) break;
    auto parsed = try_parse_equation(line);
    if (!parsed) continue;
    ++rec.parsed_count;
    auto ev = evaluate(*parsed);
    if (!ev) continue;
    ++rec.evaluated_count;
    if (!best || ev->fit.score > best->fit.score) {
      best = std::move(ev);
      best_skeleton = to_text(*parsed);
    }
  }

  if (best) {
    rec.s_t = best->fit.score;
    rec.best_candidate = CandidateSummary{
        best_skeleton,
        std::vector<double>(best->fit.coefficients.data(), best->fit.coefficients.data() + best->fit.coefficients.size()),
        best->fit.support, best->fit.nrmse_train, best->fit.score};

    auto same = std::find_if(state_.history.begin(), state_.history.end(),
                             [&](const HistoryItem& h) { return h.expression == best->fitted; });
    if (same == state_.history.end()) {
      state_.history.push_back({best->fitted, best->coefficients, rec.s_t, t});
    } else if (rec.s_t > same->score) {
      same->coefficients = best->coefficients;
      same->score = rec.s_t;
    }

    if (!state_.y_star || rec.s_t > *state_.y_star) {
      state_.y_star = rec.s_t;
      BestEquation b;
      b.expression = best->fitted;
      b.coefficients = best->coefficients;
      b.score = rec.s_t;
      b.nrmse_train = best->fit.nrmse_train;
      b.r2_train = best->fit.r2_train;
      b.iter = t;
      try {
        const auto test = features_.build_problem(b.expression, Split::Test);
        const Eigen::VectorXd pred = test.theta * Eigen::Map<const Eigen::VectorXd>(
                                                      b.coefficients.data(), static_cast<Eigen::Index>(b.coefficients.size()));
        b.nrmse_test = nrmse(pred, test.target);
        b.r2_test = r_squared(pred, test.target);
      } catch (const Error&) {
        // no usable test split; train metrics only
      }
      state_.best = std::move(b);
    }
  } else {
    rec.s_t = 0.0;
  }
  if (cfg_.mode == RunMode::NeuroSymBo) state_.observations.push_back({strategy_id, rec.s_t});

  rec.y_star = state_.y_star;
  if (state_.best) {
    rec.best_test_r2 = state_.best->r2_test;
    rec.recovered = is_recovered(state_.best->expression);
  }
  if (cfg_.log_timing)
    rec.elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

std::string Engine::header_json(bool resumed) const {
  ojson j;
  j["header"] = true;
  j["pde"] = data_->name;
  j["mode"] = std::string(to_string(cfg_.mode));
  j["trial"] = trial_;
  j["seed"] = trial_seed();
  j["backend"] = std::string(to_string(proposer_->kind()));
  j["nondeterministic"] = !proposer_->deterministic();
  if (resumed && !proposer_->deterministic()) j["resumed_at"] = state_.iter;
  j["dataset"] = cfg_.dataset;
  j["dataset_crc"] = dataset_crc_;
  j["nx"] = data_->nx();
  j["nt"] = data_->nt();
  j["config_hash"] = config_hash(cfg_);
  j["config"] = ojson::parse(config_json(cfg_).dump());
  return dump(j);
}

std::string Engine::footer_json() const {
  ojson j;
  j["footer"] = true;
  j["iter"] = state_.iter;
  j["y_star"] = opt(state_.y_star);
  j["best"] = best_json(state_.best);
  if (state_.best) {
    j["train_r2"] = state_.best->r2_train;
    j["train_nrmse"] = state_.best->nrmse_train;
    j["test_r2"] = opt(state_.best->r2_test);
    j["test_nrmse"] = opt(state_.best->nrmse_test);
  } else {
    j["train_r2"] = nullptr;
    j["train_nrmse"] = nullptr;
    j["test_r2"] = nullptr;
    j["test_nrmse"] = nullptr;
  }
  j["recovered"] = state_.best && is_recovered(state_.best->expression);
  return dump(j);
}

void Engine::write_checkpoint(const std::filesystem::path& path) const {
  Checkpoint c{trial_, state_, config_hash(cfg_), dataset_crc_, cfg_};
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write checkpoint " + tmp);
    out << checkpoint_to_json(c) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

RunLog Engine::loop(const TrialPaths& paths, std::vector<IterationRecord> prior, bool resumed) {
  RunLog log;
  log.header = header_json(resumed);
  log.records = std::move(prior);

  std::ofstream out;
  if (!paths.log.empty()) {
    if (paths.log.has_parent_path()) std::filesystem::create_directories(paths.log.parent_path());
    out.open(paths.log, std::ios::binary | (resumed ? std::ios::app : std::ios::trunc));
    if (!out) throw Error(ErrorCode::IoError, "cannot write run log " + paths.log.string());
    if (!resumed) out << log.header << '\n';
  }

  for (int t = state_.iter + 1; t <= cfg_.T; ++t) {
    if (stop_after_ > 0 && t > stop_after_) return log;
    IterationRecord rec = step(t);
    state_.iter = t;
    if (out.is_open()) {
      out << record_to_json(rec) << '\n';
      out.flush();
    }
    if (cfg_.checkpoint_every > 0 && t % cfg_.checkpoint_every == 0 && !paths.checkpoint.empty())
      write_checkpoint(paths.checkpoint);
    log.records.push_back(std::move(rec));
  }
  log.best = state_.best;
  log.recovered = state_.best && is_recovered(state_.best->expression);
  log.footer = footer_json();
  if (out.is_open()) out << log.footer << '\n';
  return log;
}

RunLog Engine::run(const TrialPaths& paths) {
  state_ = EngineState{};
  state_.rng_seed = trial_seed();
  memo_.clear();
  return loop(paths, {}, false);
}

RunLog Engine::resume(const Checkpoint& ckpt, const TrialPaths& paths) {
  if (ckpt.config_hash != config_hash(cfg_))
    throw Error(ErrorCode::BackendMismatch, "checkpoint was written with a different configuration");
  if (ckpt.dataset_crc != dataset_crc_)
    throw Error(ErrorCode::BackendMismatch, "checkpoint was written for a different dataset");
  if (ckpt.trial != trial_) throw Error(ErrorCode::BackendMismatch, "checkpoint belongs to another trial");

  std::vector<std::string> kept_lines;
  std::vector<IterationRecord> prior;
  std::string header_line;
  {
    std::ifstream in(paths.log, std::ios::binary);
    if (!in) throw Error(ErrorCode::CheckpointFormatError, "run log missing: " + paths.log.string());
    std::string line;
    if (!std::getline(in, header_line)) throw Error(ErrorCode::CheckpointFormatError, "run log has no header");
    while (std::getline(in, line) && static_cast<int>(prior.size()) < ckpt.state.iter) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("iter") || j.contains("footer")) break;
      prior.push_back(record_from_json(line));
      kept_lines.push_back(line);
    }
  }
  if (static_cast<int>(prior.size()) != ckpt.state.iter)
    throw Error(ErrorCode::CheckpointFormatError, "run log holds fewer records than the checkpoint");

  state_ = ckpt.state;
  memo_.clear();
  if (auto* replay = dynamic_cast<ReplayProposer*>(proposer_.get()))
    for (const auto& r : prior) replay->consume(r.prompt_sha256);

  {
    std::ofstream out(paths.log, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot rewrite run log " + paths.log.string());
    out << (proposer_->deterministic() ? header_line : header_json(true)) << '\n';
    for (const auto& l : kept_lines) out << l << '\n';
  }
  return loop(paths, std::move(prior), true);
}

namespace {

struct LoadedInputs {
  std::shared_ptr<const Dataset> data;
  std::optional<DatasetMeta> meta;
  std::optional<StrategyBank> bank;
};

LoadedInputs load_inputs(const RunConfig& cfg) {
  LoadedInputs in;
  in.data = std::make_shared<const Dataset>(load_dataset(cfg.dataset));
  in.meta = load_metadata(cfg.dataset);
  if (cfg.mode == RunMode::NeuroSymBo) in.bank = load_bank(cfg.bank);
  return in;
}

}  // namespace

RunLog run_trial(const RunConfig& cfg, int trial, const std::filesystem::path& out_dir, int stop_after) {
  auto in = load_inputs(cfg);
  std::filesystem::create_directories(out_dir);
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(trial);
  auto proposer = make_proposer(cfg.proposer, seed,
                                in.meta ? in.meta->ground_truth : std::nullopt, trial);
  Engine engine(cfg, in.data, in.meta, std::move(in.bank), std::move(proposer), trial);
  engine.stop_after(stop_after);
  return engine.run(trial_paths(out_dir, trial));
}

RunLog resume_trial(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  auto in = load_inputs(cfg);
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(ckpt.trial);
  auto proposer = make_proposer(cfg.proposer, seed,
                                in.meta ? in.meta->ground_truth : std::nullopt, ckpt.trial, true);
  Engine engine(cfg, in.data, in.meta, std::move(in.bank), std::move(proposer), ckpt.trial);
  return engine.resume(ckpt, trial_paths(out_dir, ckpt.trial));
}

}  // namespace pded
