#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pded {

/// The eight admissible factor atoms. Nothing else is representable.
enum class FactorKind : std::uint8_t { U, Ux, Uxx, Uxxx, X, InvX, SinU, ExpU };

inline constexpr std::array<FactorKind, 8> kAllFactorKinds = {
    FactorKind::U, FactorKind::Ux,   FactorKind::Uxx,  FactorKind::Uxxx,
    FactorKind::X, FactorKind::InvX, FactorKind::SinU, FactorKind::ExpU};

inline constexpr int kMaxExponent = 4;
inline constexpr std::size_t kMaxTerms = 8;

std::string_view to_string(FactorKind kind) noexcept;

struct Factor {
  FactorKind kind;
  int exponent = 1;

  auto operator<=>(const Factor&) const = default;
};

/// Product of factors. Canonical form holds each kind at most once, sorted
/// by kind, with exponents in [1, kMaxExponent].
class Term {
public:
  Term() = default;
  /// Merges repeated kinds and sorts; throws MalformedEquation when a merged
  /// exponent exceeds kMaxExponent or the product is empty.
  explicit Term(std::vector<Factor> factors);

  static Term single(FactorKind kind, int exponent = 1) { return Term({{kind, exponent}}); }

  std::span<const Factor> factors() const noexcept { return factors_; }
  int exponent_of(FactorKind kind) const noexcept;
  int degree() const noexcept;

  std::string to_string() const;

  auto operator<=>(const Term&) const = default;

private:
  std::vector<Factor> factors_;
};

/// Candidate right-hand side u_t = sum of terms, stored as a skeleton: the
/// set of distinct terms in canonical order. Coefficients live elsewhere.
class Expression {
public:
  Expression() = default;
  /// Canonicalizes (sort + dedup). Throws MalformedEquation when the term
  /// count after merging is outside [1, kMaxTerms].
  explicit Expression(std::vector<Term> terms, std::string source_text = {});

  std::span<const Term> terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  const std::string& source_text() const noexcept { return source_text_; }

  bool contains(FactorKind kind) const noexcept;

  /// Skeleton restricted to the given term indices (in canonical order).
  Expression subset(std::span<const std::size_t> indices) const;

  /// Structural equality on canonical terms; source text is ignored.
  friend bool operator==(const Expression& a, const Expression& b) { return a.terms_ == b.terms_; }
  friend auto operator<=>(const Expression& a, const Expression& b) { return a.terms_ <=> b.terms_; }

private:
  std::vector<Term> terms_;
  std::string source_text_;
};

/// Parses `u_t = [±][c*]F(*F)* (± [c*]F(*F)*)*`. Coefficients and signs are
/// discarded. Throws Error{MalformedEquation} on anything else; never aborts.
Expression parse_equation(std::string_view text);

/// Non-throwing variant for untrusted proposer output.
std::optional<Expression> try_parse_equation(std::string_view text) noexcept;

/// Number of terms.
inline std::size_t complexity(const Expression& e) noexcept { return e.size(); }

/// Renders in canonical order. With coefficients, each is printed with six
/// significant digits. Throws CoefficientLengthMismatch on a size mismatch.
std::string to_text(const Expression& e, std::optional<std::span<const double>> coefficients = std::nullopt);

}  // namespace pded
