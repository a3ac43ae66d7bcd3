#include "pded/bank.hpp"
#include "pded/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace pded {

std::string_view to_string(StrategyCategory c) noexcept {
  switch (c) {
    case StrategyCategory::Exploration: return "exploration";
    case StrategyCategory::Parsimony: return "parsimony";
    case StrategyCategory::Mutation: return "mutation";
    case StrategyCategory::Refinement: return "refinement";
  }
  return "?";
}

std::optional<StrategyCategory> category_from_string(std::string_view name) noexcept {
  for (auto c : {StrategyCategory::Exploration, StrategyCategory::Parsimony, StrategyCategory::Mutation,
                 StrategyCategory::Refinement})
    if (to_string(c) == name) return c;
  return std::nullopt;
}

StrategyBank::StrategyBank(std::vector<Strategy> strategies) : strategies_(std::move(strategies)) {
  if (strategies_.empty()) throw Error(ErrorCode::BankFormatError, "strategy bank is empty");
  std::sort(strategies_.begin(), strategies_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::set<int> seen;
  for (const auto& s : strategies_) {
    if (!seen.insert(s.id).second) throw Error(ErrorCode::DuplicateId, "duplicate strategy id " + std::to_string(s.id));
    if (s.text.empty()) throw Error(ErrorCode::EmptyText, "strategy " + std::to_string(s.id) + " has empty text");
  }
  for (std::size_t i = 0; i < strategies_.size(); ++i)
    if (strategies_[i].id != static_cast<int>(i) + 1)
      throw Error(ErrorCode::BankFormatError, "strategy ids must be contiguous from 1");
}

const Strategy& StrategyBank::at(int id) const {
  if (id < 1 || id > size()) throw Error(ErrorCode::InvalidArgument, "strategy id " + std::to_string(id) + " out of range");
  return strategies_[static_cast<std::size_t>(id - 1)];
}

StrategyBank parse_bank(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::BankFormatError, e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::BankFormatError, "bank must be a JSON array");
  std::vector<Strategy> out;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("id") || !item.contains("category") || !item.contains("text") ||
        !item["id"].is_number_integer() || !item["category"].is_string() || !item["text"].is_string())
      throw Error(ErrorCode::BankFormatError, "each entry needs integer id, string category and string text");
    auto cat = category_from_string(item["category"].get<std::string>());
    if (!cat) throw Error(ErrorCode::BankFormatError, "unknown category " + item["category"].dump());
    out.push_back({item["id"].get<int>(), *cat, item["text"].get<std::string>()});
  }
  return StrategyBank(std::move(out));
}

StrategyBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BankFormatError, "cannot open bank file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bank(ss.str());
}

std::string serialize_bank(const StrategyBank& bank) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : bank.strategies())
    doc.push_back({{"id", s.id}, {"category", std::string(to_string(s.category))}, {"text", s.text}});
  return doc.dump(2) + "\n";
}

}  // namespace pded
