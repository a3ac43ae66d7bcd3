#include "pded/cli.hpp"

#include "pded/bank.hpp"
#include "pded/dataset_io.hpp"
#include "pded/engine.hpp"
#include "pded/error.hpp"
#include "pded/report.hpp"
#include "pded/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace pded::cli {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::string format_double(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Relative dataset/bank paths in a config are taken relative to the config file.
RunConfig load_run_config(const fs::path& path) {
  RunConfig cfg = load_config(path);
  const fs::path base = path.parent_path();
  auto anchor = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative() && !base.empty()) p = (base / p).lexically_normal().string();
  };
  anchor(cfg.dataset);
  anchor(cfg.bank);
  anchor(cfg.proposer.replay_path);
  anchor(cfg.proposer.record_path);
  return cfg;
}

int cmd_gen(const std::string& pde, const fs::path& out_path, std::uint64_t seed, std::ostream& out) {
  const PdeSpec spec = default_spec(pde_from_string(pde), seed);
  const Dataset d = generate(spec);
  save_dataset(d, out_path, &spec);
  out << "wrote " << out_path.string() << " (" << to_string(spec.kind) << ", " << d.nx() << "x" << d.nt()
      << ", crc32 " << dataset_crc(d) << ")\n";
  return kExitOk;
}

std::string trial_line(int trial, const RunLog& log) {
  std::ostringstream s;
  s << "trial " << trial << ": ";
  if (log.best) {
    s << "best " << to_text(log.best->expression, std::span<const double>(log.best->coefficients)) << " score "
      << format_double(log.best->score, "%.6f");
    if (log.best->r2_test) s << " test_r2 " << format_double(*log.best->r2_test, "%.6f");
    if (log.recovered) s << " [recovered]";
  } else {
    s << "no candidate evaluated";
  }
  return s.str();
}

int cmd_run(const fs::path& config_path, const fs::path& out_dir, const std::string& resume, int jobs,
            std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_run_config(config_path);
  fs::create_directories(out_dir);
  write_file(out_dir / "config.json", config_to_json(cfg) + "\n");

  if (!resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(resume);
    const RunLog log = resume_trial(cfg, resume, out_dir);
    out << trial_line(ckpt.trial, log) << '\n';
    return kExitOk;
  }

  const int workers = std::clamp(jobs > 0 ? jobs : cfg.trials, 1, cfg.trials);
  std::vector<std::optional<RunLog>> logs(cfg.trials);
  std::vector<std::string> failures(cfg.trials);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < cfg.trials; k = next++) {
      try {
        logs[k] = run_trial(cfg, k, out_dir);
      } catch (const std::exception& e) {
        failures[k] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  int failed = 0;
  for (int k = 0; k < cfg.trials; ++k) {
    if (logs[k]) {
      out << trial_line(k, *logs[k]) << '\n';
    } else {
      ++failed;
      err << "pded-error: trial " << k << ": " << failures[k] << '\n';
    }
  }
  return failed == 0 ? kExitOk : kExitRuntime;
}

int cmd_report(const fs::path& runs, const std::string& format, const fs::path& out_path, std::ostream& out,
               std::ostream& err) {
  const Report r = build_report(runs);
  const std::string summary = format == "csv" ? summary_csv(r) : summary_table(r);
  fs::path traj = out_path;
  traj += ".trajectory.csv";
  write_file(out_path, summary);
  write_file(traj, trajectory_csv(r));
  for (const auto& g : r.groups)
    if (g.single_trial) err << "pded-warning: " << g.pde << "/" << g.mode << " has a single trial; SEM reported as 0\n";
  out << "wrote " << out_path.string() << " and " << traj.string() << " (" << r.trials.size() << " logs)\n";
  return kExitOk;
}

int cmd_bank_validate(const fs::path& path, std::ostream& out) {
  const StrategyBank bank = load_bank(path);
  std::array<int, 4> per{};
  for (const auto& s : bank.strategies()) ++per[static_cast<std::size_t>(s.category)];
  out << "ok: " << bank.size() << " strategies";
  for (auto c : {StrategyCategory::Exploration, StrategyCategory::Parsimony, StrategyCategory::Mutation,
                 StrategyCategory::Refinement})
    out << ", " << to_string(c) << " " << per[static_cast<std::size_t>(c)];
  out << '\n';
  return kExitOk;
}

std::string bank_prompt(StrategyCategory c, int count) {
  std::ostringstream p;
  p << "You are designing instructions for a language model that proposes partial differential equations "
       "u_t = F(u, u_x, u_xx, u_xxx, x) to fit observed data. Write "
    << count << " distinct one-sentence instructions of the '" << to_string(c) << "' kind. ";
  switch (c) {
    case StrategyCategory::Exploration: p << "They should push toward unusual operators and new structure."; break;
    case StrategyCategory::Parsimony: p << "They should push toward fewer, simpler terms."; break;
    case StrategyCategory::Mutation: p << "They should ask for small edits of the best equations so far."; break;
    case StrategyCategory::Refinement: p << "They should ask to fine-tune the current best structure."; break;
  }
  p << " Output one instruction per line, no numbering, nothing else.";
  return p.str();
}

std::string strip_bullet(std::string line) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  line.erase(line.begin(), std::find_if(line.begin(), line.end(), not_space));
  line.erase(std::find_if(line.rbegin(), line.rend(), not_space).base(), line.end());
  std::size_t i = 0;
  while (i < line.size() && (std::isdigit(static_cast<unsigned char>(line[i])) || line[i] == '.' || line[i] == ')' ||
                             line[i] == '-' || line[i] == '*'))
    ++i;
  while (i < line.size() && line[i] == ' ') ++i;
  return line.substr(i);
}

int cmd_bank_generate(const fs::path& out_path, int k, const LlmConfig& llm, std::ostream& out) {
  if (k < 4 || k % 4 != 0) throw Error(ErrorCode::InvalidArgument, "--k must be a positive multiple of 4");
  LlmProposer client(llm);
  std::vector<Strategy> strategies;
  for (auto c : {StrategyCategory::Exploration, StrategyCategory::Parsimony, StrategyCategory::Mutation,
                 StrategyCategory::Refinement}) {
    std::vector<std::string> texts;
    for (int attempt = 0; attempt < 5 && static_cast<int>(texts.size()) < k / 4; ++attempt) {
      std::istringstream lines(client.complete(bank_prompt(c, k / 4), 0.9, 120000));
      for (std::string line; std::getline(lines, line) && static_cast<int>(texts.size()) < k / 4;) {
        line = strip_bullet(line);
        if (line.size() >= 10 && std::find(texts.begin(), texts.end(), line) == texts.end()) texts.push_back(line);
      }
    }
    if (static_cast<int>(texts.size()) < k / 4)
      throw Error(ErrorCode::FormatError, "model returned too few usable " + std::string(to_string(c)) + " strategies");
    for (auto& t : texts) strategies.push_back({static_cast<int>(strategies.size()) + 1, c, std::move(t)});
  }
  const StrategyBank bank(std::move(strategies));
  write_file(out_path, serialize_bank(bank));
  out << "wrote " << out_path.string() << " (" << bank.size() << " strategies)\n";
  return kExitOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symbolic PDE discovery with LLM proposals and Bayesian instruction selection", "pded"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pded 0.1.0");

  std::string gen_pde, gen_out;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen", "Generate a benchmark dataset");
  gen->add_option("--pde", gen_pde, "burgers | fisher | chafee | divide | allen_cahn")
      ->required()
      ->check(CLI::IsMember({"burgers", "fisher", "chafee", "divide", "allen_cahn"}));
  gen->add_option("--out", gen_out, "Output dataset path")->required();
  gen->add_option("--seed", gen_seed, "Seed for stochastic initial conditions");

  std::string run_config, run_out, run_resume;
  int run_jobs = 0;
  auto* run = app.add_subcommand("run", "Run discovery trials from a config file");
  run->add_option("--config", run_config, "Run config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory for logs and checkpoints")->required();
  run->add_option("--resume", run_resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  run->add_option("--jobs", run_jobs, "Concurrent trials (default: number of trials)")->check(CLI::PositiveNumber);

  std::string rep_runs, rep_format = "table", rep_out;
  auto* report = app.add_subcommand("report", "Summarize run logs");
  report->add_option("--runs", rep_runs, "Directory holding run logs")->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", rep_format, "csv | table")->check(CLI::IsMember({"csv", "table"}));
  report->add_option("--out", rep_out, "Summary output path; trajectory goes to <out>.trajectory.csv")->required();

  auto* bank = app.add_subcommand("bank", "Strategy bank tools");
  bank->require_subcommand(1);
  std::string val_path;
  auto* validate = bank->add_subcommand("validate", "Check a strategy bank file");
  validate->add_option("--path", val_path, "Bank JSON")->required()->check(CLI::ExistingFile);
  std::string bgen_out;
  int bgen_k = 100;
  LlmConfig llm;
  auto* bgen = bank->add_subcommand("generate", "Generate a strategy bank with an LLM backend");
  bgen->add_option("--out", bgen_out, "Output bank path")->required();
  bgen->add_option("--k", bgen_k, "Number of strategies (multiple of 4)")->check(CLI::PositiveNumber);
  bgen->add_option("--base-url", llm.base_url, "OpenAI-compatible endpoint");
  bgen->add_option("--model", llm.model, "Model name");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::ostringstream o, r;
      app.exit(e, o, r);
      out << o.str() << r.str();
      return kExitOk;
    }
    err << "pded-error: usage: " << e.what() << '\n';
    const CLI::App* shown = &app;
    for (auto* sub : {gen, run, report, bank, validate, bgen})
      if (sub->parsed()) shown = sub;
    err << shown->help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_pde, gen_out, gen_seed, out);
    if (run->parsed()) return cmd_run(run_config, run_out, run_resume, run_jobs, out, err);
    if (report->parsed()) return cmd_report(rep_runs, rep_format, rep_out, out, err);
    if (validate->parsed()) return cmd_bank_validate(val_path, out);
    if (bgen->parsed()) return cmd_bank_generate(bgen_out, bgen_k, llm, out);
  } catch (const Error& e) {
    err << "pded-error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "pded-error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace pded::cli
