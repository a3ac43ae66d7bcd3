#pragma once

#include "pded/rng.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pded {

enum class StrategyCategory { Exploration, Parsimony, Mutation, Refinement };

std::string_view to_string(StrategyCategory c) noexcept;
std::optional<StrategyCategory> category_from_string(std::string_view name) noexcept;

struct Strategy {
  int id = 0;
  StrategyCategory category = StrategyCategory::Exploration;
  std::string text;

  bool operator==(const Strategy&) const = default;
};

class StrategyBank {
public:
  /// Validates ids 1..K (after sorting), unique, with non-empty text.
  explicit StrategyBank(std::vector<Strategy> strategies);

  int size() const noexcept { return static_cast<int>(strategies_.size()); }
  const Strategy& at(int id) const;  // 1-based
  const std::vector<Strategy>& strategies() const noexcept { return strategies_; }

private:
  std::vector<Strategy> strategies_;
};

/// Bank file: JSON array of {"id", "category", "text"}. Throws
/// BankFormatError, DuplicateId or EmptyText.
StrategyBank load_bank(const std::filesystem::path& path);
StrategyBank parse_bank(std::string_view json_text);
std::string serialize_bank(const StrategyBank& bank);

/// Uniform over 1..K using exactly one draw.
inline int sample_random(const StrategyBank& bank, CounterRng& rng) {
  return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(bank.size())));
}

}  // namespace pded
