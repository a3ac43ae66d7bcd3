#pragma once

#include "pded/bank.hpp"
#include "pded/expr.hpp"
#include "pded/hash.hpp"

#include <string>
#include <vector>

namespace pded {

inline constexpr std::string_view kEmptyHistoryLine = "No equations evaluated yet.";
inline constexpr std::string_view kPromptSeparator = "\n\n";

struct HistoryEntry {
  Expression expression;
  double score = 0.0;
};

/// Prompt P_t = task context, history block and strategy text joined by a
/// blank line, in that order.
struct PromptParts {
  std::string task_context;
  std::string history_block;
  std::string strategy_text;
  Sha256Digest sha256{};

  std::string bytes() const;
  std::string sha256_hex() const { return to_hex(sha256); }
};

/// Distinct skeletons (best score kept) sorted by descending score, earlier
/// discovery first on ties, truncated to top_n.
std::vector<HistoryEntry> top_history(const std::vector<HistoryEntry>& history, int top_n);

/// Best top_n distinct skeletons, one "Eq: ... | Score: x.xxxx" line each.
/// `history` is in discovery order.
std::string format_history(const std::vector<HistoryEntry>& history, int top_n);

/// Static task description naming the variables, the factor atoms and the
/// expected output format.
std::string task_context(std::string_view dataset_name, int m_candidates);

PromptParts build_prompt(std::string task, std::string history_block, std::string strategy_text);
inline PromptParts build_prompt(std::string task, std::string history_block, const Strategy& strategy) {
  return build_prompt(std::move(task), std::move(history_block), strategy.text);
}

}  // namespace pded
