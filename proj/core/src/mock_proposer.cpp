#include "pded/proposer.hpp"

#include <array>

namespace pded {

namespace {

struct Weighted {
  FactorKind kind;
  double weight;
};

// Derivatives and low powers of u dominate real PDE right-hand sides.
constexpr std::array<Weighted, 8> kAtomWeights = {{
    {FactorKind::U, 0.30},
    {FactorKind::Ux, 0.18},
    {FactorKind::Uxx, 0.18},
    {FactorKind::Uxxx, 0.07},
    {FactorKind::X, 0.07},
    {FactorKind::InvX, 0.06},
    {FactorKind::SinU, 0.07},
    {FactorKind::ExpU, 0.07},
}};

FactorKind random_kind(CounterRng& rng) {
  double r = rng.uniform01();
  for (const auto& w : kAtomWeights) {
    if (r < w.weight) return w.kind;
    r -= w.weight;
  }
  return kAtomWeights.back().kind;
}

int random_exponent(CounterRng& rng) {
  const double r = rng.uniform01();
  return r < 0.6 ? 1 : (r < 0.85 ? 2 : 3);
}

std::string garbage_line(CounterRng& rng) {
  static constexpr std::string_view kAlphabet =
      "abcdefghijklmnopqrstuvwxyz0123456789+-*/^()=_ ?!#@:;,.ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  const auto len = 5 + rng.below(30);
  std::string s = "?? ";
  for (std::uint64_t i = 0; i < len; ++i) s.push_back(kAlphabet[rng.below(kAlphabet.size())]);
  return s;
}

Expression drop_term(const Expression& e, CounterRng& rng) {
  const auto skip = rng.below(e.size());
  std::vector<Term> kept;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (i != skip) kept.push_back(e.terms()[i]);
  return Expression(std::move(kept));
}

Expression replace_term(const Expression& e, CounterRng& rng) {
  const auto idx = rng.below(e.size());
  std::vector<Term> terms(e.terms().begin(), e.terms().end());
  terms[idx] = random_term(rng);
  return Expression(std::move(terms));
}

Expression add_term(const Expression& e, CounterRng& rng) {
  if (e.size() >= kMaxTerms) return replace_term(e, rng);
  std::vector<Term> terms(e.terms().begin(), e.terms().end());
  terms.push_back(random_term(rng));
  return Expression(std::move(terms));
}

Expression perturb_exponent(const Expression& e, CounterRng& rng) {
  const auto ti = rng.below(e.size());
  const Term& t = e.terms()[ti];
  const auto fi = rng.below(t.factors().size());
  const bool up = rng.bernoulli(0.5);
  std::vector<Factor> factors(t.factors().begin(), t.factors().end());
  int& k = factors[fi].exponent;
  if (up) k = (k < kMaxExponent) ? k + 1 : k - 1;
  else k = (k > 1) ? k - 1 : k + 1;
  std::vector<Term> terms(e.terms().begin(), e.terms().end());
  terms[ti] = Term(std::move(factors));
  return Expression(std::move(terms));
}

}  // namespace

Term random_term(CounterRng& rng) {
  std::vector<Factor> factors{{random_kind(rng), random_exponent(rng)}};
  if (rng.bernoulli(0.4)) factors.push_back({random_kind(rng), random_exponent(rng)});
  // Merged exponents can exceed the cap (e.g. u^3 * u^2); clamp before building.
  if (factors.size() == 2 && factors[0].kind == factors[1].kind &&
      factors[0].exponent + factors[1].exponent > kMaxExponent)
    factors.pop_back();
  return Term(std::move(factors));
}

Expression random_expression(CounterRng& rng, int max_terms) {
  const auto n = 1 + rng.below(static_cast<std::uint64_t>(std::max(max_terms, 1)));
  std::vector<Term> terms;
  for (std::uint64_t i = 0; i < n; ++i) terms.push_back(random_term(rng));
  return Expression(std::move(terms));
}

std::vector<std::string> mock_policy(const ProposalContext& ctx, CounterRng& rng, const MockConfig& cfg,
                                     int m_candidates) {
  const int m = std::max(m_candidates, 1);
  const Expression* best = ctx.top_history.empty() ? nullptr : &ctx.top_history.front();

  std::vector<std::string> lines;
  lines.reserve(static_cast<std::size_t>(m));
  for (int l = 0; l < m; ++l) {
    Expression e;
    if (!best) {
      e = random_expression(rng);
    } else if (!ctx.category) {
      const double r = rng.uniform01();
      if (r < 0.4) e = random_expression(rng);
      else if (r < 0.8) e = ctx.top_history[rng.below(ctx.top_history.size())];
      else e = perturb_exponent(*best, rng);
    } else {
      switch (*ctx.category) {
        case StrategyCategory::Exploration: e = random_expression(rng); break;
        case StrategyCategory::Parsimony:
          e = best->size() >= 2 ? drop_term(*best, rng) : random_expression(rng);
          break;
        case StrategyCategory::Mutation:
          e = rng.bernoulli(0.5) ? add_term(*best, rng) : replace_term(*best, rng);
          break;
        case StrategyCategory::Refinement: e = perturb_exponent(*best, rng); break;
      }
    }
    lines.push_back(to_text(e));
  }
  for (auto& line : lines)
    if (rng.bernoulli(cfg.p_garbage)) line = garbage_line(rng);
  if (cfg.ground_truth && rng.bernoulli(cfg.p_truth))
    lines[rng.below(lines.size())] = to_text(*cfg.ground_truth);
  return lines;
}

ProposerResponse MockProposer::propose(const ProposerRequest& req) {
  // Stream keyed on (seed, iteration): no hidden state, so resumed runs and
  // repeated calls agree.
  CounterRng rng(CounterRng::derive(cfg_.seed, static_cast<std::uint64_t>(req.context.iteration)));
  return {mock_policy(req.context, rng, cfg_, req.m_candidates), BackendKind::Mock, 0};
}

}  // namespace pded
