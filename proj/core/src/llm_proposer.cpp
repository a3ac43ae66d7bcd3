#include "pded/error.hpp"
#include "pded/proposer.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace pded {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_begin = url.find('/', host_begin);
  Endpoint ep;
  ep.origin = url.substr(0, path_begin);
  if (path_begin != std::string::npos) ep.prefix = url.substr(path_begin);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  if (ep.origin.empty()) throw Error(ErrorCode::InvalidArgument, "empty LLM base_url");
  return ep;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n`");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n`");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string chat_request_body(const LlmConfig& cfg, const std::string& prompt, double temperature) {
  nlohmann::json body{
      {"model", cfg.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", temperature},
      {"max_tokens", cfg.max_tokens},
  };
  return body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::vector<std::string> extract_candidate_lines(const std::string& content, int m_candidates) {
  std::vector<std::string> out;
  int parseable = 0;
  std::istringstream in(content);
  std::string line;
  while (parseable < m_candidates && std::getline(in, line)) {
    const auto pos = line.find("u_t");
    if (pos == std::string::npos) continue;
    // Drop list markers such as "1. " or "- " in front of the equation.
    std::string candidate = trim(line.substr(pos));
    if (try_parse_equation(candidate)) ++parseable;
    out.push_back(std::move(candidate));
  }
  return out;
}

LlmProposer::LlmProposer(LlmConfig cfg) : cfg_(std::move(cfg)) {
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
}

std::string LlmProposer::complete(const std::string& prompt, double temperature, int timeout_ms) {
  std::lock_guard lock(mu_);
  const Endpoint ep = split_url(cfg_.base_url);
  httplib::Client client(ep.origin);
  const auto timeout = std::chrono::milliseconds(std::max(timeout_ms, 1));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

  const std::string body = chat_request_body(cfg_, prompt, temperature);
  const std::string path = ep.prefix + "/v1/chat/completions";
  int backoff = std::max(cfg_.backoff_ms, 0);
  for (int attempt = 0;; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      const auto waited = std::chrono::steady_clock::now() - started;
      const auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout ||
          ((err == httplib::Error::Read || err == httplib::Error::Write) && waited >= timeout * 9 / 10))
        throw Error(ErrorCode::Timeout, "no reply within " + std::to_string(timeout_ms) + " ms");
      throw HttpError(0, "request failed: " + httplib::to_string(err));
    }
    if (res->status == 429) {
      if (attempt >= cfg_.retries) throw Error(ErrorCode::RateLimited, "still rate limited after retries");
      std::this_thread::sleep_for(std::chrono::milliseconds(std::min(backoff, timeout_ms)));
      backoff *= 2;
      continue;
    }
    if (res->status < 200 || res->status >= 300) throw HttpError(res->status, res->body.substr(0, 200));
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw HttpError(res->status, std::string("malformed completion body: ") + e.what());
    }
  }
}

ProposerResponse LlmProposer::propose(const ProposerRequest& req) {
  const auto started = std::chrono::steady_clock::now();
  const std::string content = complete(req.prompt.bytes(), req.temperature, req.timeout_ms);
  ProposerResponse resp;
  resp.backend = BackendKind::Llm;
  resp.raw_lines = extract_candidate_lines(content, req.m_candidates);
  resp.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  return resp;
}

}  // namespace pded
