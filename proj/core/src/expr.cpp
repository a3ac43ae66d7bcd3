#include "pded/expr.hpp"
#include "pded/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace pded {

std::string_view to_string(FactorKind kind) noexcept {
  switch (kind) {
    case FactorKind::U: return "u";
    case FactorKind::Ux: return "u_x";
    case FactorKind::Uxx: return "u_xx";
    case FactorKind::Uxxx: return "u_xxx";
    case FactorKind::X: return "x";
    case FactorKind::InvX: return "1/x";
    case FactorKind::SinU: return "sin(u)";
    case FactorKind::ExpU: return "exp(u)";
  }
  return "?";
}

namespace {

[[noreturn]] void malformed(const std::string& why) { throw Error(ErrorCode::MalformedEquation, why); }

}  // namespace

Term::Term(std::vector<Factor> factors) {
  if (factors.empty()) malformed("empty term");
  std::sort(factors.begin(), factors.end());
  for (const auto& f : factors) {
    if (f.exponent < 1) malformed("non-positive exponent");
    if (!factors_.empty() && factors_.back().kind == f.kind) {
      factors_.back().exponent += f.exponent;
    } else {
      factors_.push_back(f);
    }
    if (factors_.back().exponent > kMaxExponent) malformed("exponent exceeds 4");
  }
}

int Term::exponent_of(FactorKind kind) const noexcept {
  for (const auto& f : factors_)
    if (f.kind == kind) return f.exponent;
  return 0;
}

int Term::degree() const noexcept {
  int d = 0;
  for (const auto& f : factors_) d += f.exponent;
  return d;
}

std::string Term::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) s += '*';
    s += pded::to_string(factors_[i].kind);
    if (factors_[i].exponent != 1) {
      s += '^';
      s += std::to_string(factors_[i].exponent);
    }
  }
  return s;
}

Expression::Expression(std::vector<Term> terms, std::string source_text)
    : terms_(std::move(terms)), source_text_(std::move(source_text)) {
  std::sort(terms_.begin(), terms_.end());
  terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
  if (terms_.empty()) malformed("empty right-hand side");
  if (terms_.size() > kMaxTerms) malformed("more than 8 terms");
}

bool Expression::contains(FactorKind kind) const noexcept {
  return std::any_of(terms_.begin(), terms_.end(),
                     [kind](const Term& t) { return t.exponent_of(kind) > 0; });
}

Expression Expression::subset(std::span<const std::size_t> indices) const {
  std::vector<Term> kept;
  kept.reserve(indices.size());
  for (auto i : indices) {
    if (i >= terms_.size()) throw Error(ErrorCode::InvalidArgument, "term index out of range");
    kept.push_back(terms_[i]);
  }
  return Expression(std::move(kept));
}

namespace {

class Parser {
public:
  explicit Parser(std::string compact) : s_(std::move(compact)) {}

  Expression run(std::string_view original) {
    if (s_.rfind("u_t=", 0) != 0) malformed("missing 'u_t =' head");
    pos_ = 4;
    if (at_end()) malformed("empty right-hand side");
    std::vector<Term> terms;
    bool first = true;
    while (!at_end()) {
      if (peek() == '+' || peek() == '-') {
        ++pos_;
      } else if (!first) {
        malformed("expected '+' or '-' between terms");
      }
      terms.push_back(term());
      first = false;
      // Reject before canonical merging can hide an absurd input length.
      if (terms.size() > 4 * kMaxTerms) malformed("more than 8 terms");
    }
    return Expression(std::move(terms), std::string(original));
  }

private:
  bool at_end() const { return pos_ >= s_.size(); }
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }

  bool starts_number() const {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) ||
           (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))));
  }

  // Returns the literal text of a numeric literal at pos_.
  std::string number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) { ++pos_; ++n; }
      return n;
    };
    std::size_t n = digits();
    if (peek() == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) malformed("bad numeric literal");
    if (peek() == 'e' || peek() == 'E') {
      // Only an exponent when followed by digits; "exp(u)" never follows a number.
      std::size_t save = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (digits() == 0) pos_ = save;
    }
    return s_.substr(start, pos_ - start);
  }

  bool consume(std::string_view lit) {
    if (s_.compare(pos_, lit.size(), lit) == 0) {
      pos_ += lit.size();
      return true;
    }
    return false;
  }

  Factor atom() {
    if (starts_number()) {
      const auto lit = number();
      if (lit == "1" && consume("/x")) return {FactorKind::InvX, 1};
      malformed("unexpected number inside a term");
    }
    if (consume("u_xxx")) return {FactorKind::Uxxx, 1};
    if (consume("u_xx")) return {FactorKind::Uxx, 1};
    if (consume("u_x")) return {FactorKind::Ux, 1};
    if (consume("sin(u)")) return {FactorKind::SinU, 1};
    if (consume("exp(u)")) return {FactorKind::ExpU, 1};
    if (peek() == 'u' && peek(1) != '_') {
      ++pos_;
      return {FactorKind::U, 1};
    }
    if (consume("x")) return {FactorKind::X, 1};
    malformed("unknown token at offset " + std::to_string(pos_));
  }

  Factor factor() {
    Factor f = atom();
    if (peek() == '^') {
      ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) malformed("exponent must be an integer");
      int k = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        k = k * 10 + (peek() - '0');
        ++pos_;
        if (k > kMaxExponent) malformed("exponent exceeds 4");
      }
      if (k < 1) malformed("exponent must be positive");
      f.exponent = k;
    }
    const char next = peek();
    if (!(next == '\0' || next == '*' || next == '+' || next == '-')) malformed("unexpected character after factor");
    return f;
  }

  Term term() {
    if (starts_number()) {
      const std::size_t save = pos_;
      const auto lit = number();
      if (peek() == '*') {
        ++pos_;  // coefficient, discarded
      } else if (lit == "1" && peek() == '/') {
        pos_ = save;  // the 1/x atom
      } else {
        malformed("coefficient must be followed by '*'");
      }
    }
    std::vector<Factor> factors{factor()};
    while (peek() == '*') {
      ++pos_;
      factors.push_back(factor());
    }
    return Term(std::move(factors));
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse_equation(std::string_view text) {
  std::string compact;
  compact.reserve(text.size());
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) continue;
    if (uc >= 0x80 || !std::isprint(uc)) malformed("non-printable byte");
    compact.push_back(c);
  }
  return Parser(std::move(compact)).run(text);
}

std::optional<Expression> try_parse_equation(std::string_view text) noexcept {
  try {
    return parse_equation(text);
  } catch (...) {
    return std::nullopt;
  }
}

namespace {

std::string format_coefficient(double c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", c);
  return buf;
}

}  // namespace

std::string to_text(const Expression& e, std::optional<std::span<const double>> coefficients) {
  if (coefficients && coefficients->size() != e.size()) {
    throw Error(ErrorCode::CoefficientLengthMismatch,
                "expected " + std::to_string(e.size()) + " coefficients, got " +
                    std::to_string(coefficients->size()));
  }
  std::string s = "u_t = ";
  const auto terms = e.terms();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (coefficients) {
      const double c = (*coefficients)[i];
      if (i == 0) {
        s += format_coefficient(c);
      } else {
        s += std::signbit(c) ? " - " : " + ";
        s += format_coefficient(std::fabs(c));
      }
      s += '*';
    } else if (i > 0) {
      s += " + ";
    }
    s += terms[i].to_string();
  }
  return s;
}

}  // namespace pded
