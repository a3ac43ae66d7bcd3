#include "pded/proposer.hpp"
#include "pded/error.hpp"

#include <json.hpp>

namespace pded {

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::Llm: return "llm";
    case BackendKind::Mock: return "mock";
    case BackendKind::Replay: return "replay";
  }
  return "?";
}

BackendKind backend_from_string(std::string_view name) {
  if (name == "llm") return BackendKind::Llm;
  if (name == "mock") return BackendKind::Mock;
  if (name == "replay") return BackendKind::Replay;
  throw Error(ErrorCode::InvalidArgument, "unknown proposer backend '" + std::string(name) + "'");
}

std::vector<ReplayRecord> read_replay_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open replay file " + path.string());
  std::vector<ReplayRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("prompt_sha256").get<std::string>(), j.at("raw_lines").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string replay_record_to_json(const ReplayRecord& rec) {
  nlohmann::json j{{"prompt_sha256", rec.prompt_sha256}, {"raw_lines", rec.raw_lines}};
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

ReplayProposer::ReplayProposer(const std::vector<ReplayRecord>& records) {
  for (const auto& r : records) queues_[r.prompt_sha256].push_back(r.raw_lines);
}

ProposerResponse ReplayProposer::propose(const ProposerRequest& req) {
  std::lock_guard lock(mu_);
  const auto key = req.prompt.sha256_hex();
  auto it = queues_.find(key);
  if (it == queues_.end() || it->second.empty()) throw Error(ErrorCode::ReplayMiss, "no recorded response for prompt " + key);
  ProposerResponse resp{std::move(it->second.front()), BackendKind::Replay, 0};
  it->second.pop_front();
  return resp;
}

void ReplayProposer::consume(const std::string& prompt_sha256) {
  std::lock_guard lock(mu_);
  auto it = queues_.find(prompt_sha256);
  if (it != queues_.end() && !it->second.empty()) it->second.pop_front();
}

RecordingProposer::RecordingProposer(std::unique_ptr<Proposer> inner, const std::filesystem::path& path, bool append)
    : inner_(std::move(inner)),
      out_(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc)) {
  if (!out_) throw Error(ErrorCode::IoError, "cannot open recording file " + path.string());
}

ProposerResponse RecordingProposer::propose(const ProposerRequest& req) {
  auto resp = inner_->propose(req);
  std::lock_guard lock(mu_);
  out_ << replay_record_to_json({req.prompt.sha256_hex(), resp.raw_lines}) << '\n';
  out_.flush();
  return resp;
}

}  // namespace pded
