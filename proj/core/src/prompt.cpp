#include "pded/prompt.hpp"
#include "pded/error.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace pded {

std::string PromptParts::bytes() const {
  std::string out;
  out.reserve(task_context.size() + history_block.size() + strategy_text.size() + 4);
  out += task_context;
  out += kPromptSeparator;
  out += history_block;
  out += kPromptSeparator;
  out += strategy_text;
  return out;
}

std::vector<HistoryEntry> top_history(const std::vector<HistoryEntry>& history, int top_n) {
  struct Best {
    double score;
    std::size_t order;
  };
  std::map<Expression, Best> best;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    auto [it, inserted] = best.try_emplace(h.expression, Best{h.score, i});
    if (!inserted && h.score > it->second.score) it->second = {h.score, i};
  }
  std::vector<std::pair<const Expression*, Best>> ranked;
  ranked.reserve(best.size());
  for (const auto& [e, b] : best) ranked.emplace_back(&e, b);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.score != b.second.score) return a.second.score > b.second.score;
    return a.second.order < b.second.order;
  });
  const auto n = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(top_n, 0)));
  std::vector<HistoryEntry> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({*ranked[i].first, ranked[i].second.score});
  return out;
}

std::string format_history(const std::vector<HistoryEntry>& history, int top_n) {
  if (history.empty()) return std::string(kEmptyHistoryLine);
  std::string out;
  const auto top = top_history(history, top_n);
  for (std::size_t i = 0; i < top.size(); ++i) {
    char score[32];
    std::snprintf(score, sizeof score, "%.4f", top[i].score);
    if (i) out += '\n';
    out += "Eq: " + to_text(top[i].expression) + " | Score: " + score;
  }
  return out;
}

std::string task_context(std::string_view dataset_name, int m_candidates) {
  std::string s;
  s += "You are discovering the governing partial differential equation of a one-dimensional field";
  if (!dataset_name.empty()) s += " (dataset: " + std::string(dataset_name) + ")";
  s += ".\n";
  s += "Variables: u(x, t) is the state, x is space, t is time.\n";
  s += "Write the time derivative u_t as a sum of terms. Each term is a product of factors chosen from:\n";
  s += "u, u_x, u_xx, u_xxx, x, 1/x, sin(u), exp(u); any factor may be raised to an integer power 1-4 with ^.\n";
  s += "Use only + and * between factors. Use at most 8 terms. Coefficients are optional; they are refitted.\n";
  s += "Output exactly " + std::to_string(m_candidates) +
       " candidate equations, one per line, each of the form:\n";
  s += "u_t = <expression>\n";
  s += "Do not add explanations.\n";
  s += "Best equations found so far (higher score is better):";
  return s;
}

PromptParts build_prompt(std::string task, std::string history_block, std::string strategy_text) {
  if (task.empty()) throw Error(ErrorCode::InvalidArgument, "task context must not be empty");
  PromptParts p{std::move(task), std::move(history_block), std::move(strategy_text), {}};
  p.sha256 = sha256(p.bytes());
  return p;
}

}  // namespace pded
