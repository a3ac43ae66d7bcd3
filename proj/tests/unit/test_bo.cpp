#include "pded/bo.hpp"
#include "pded/error.hpp"
#include "pded/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

using namespace pded;

namespace {

std::vector<Observation> random_obs(CounterRng& rng, int n, int k) {
  std::vector<Observation> obs;
  for (int i = 0; i < n; ++i) obs.push_back({1 + static_cast<int>(rng.below(k)), rng.uniform01()});
  return obs;
}

// Textbook GP regression with an explicit inverse, written independently of
// the Cholesky path in the library.
double kernel(KernelKind kind, int a, int b, int k, double ell) {
  if (kind == KernelKind::Categorical) return a == b ? 1.0 : kCategoricalCross;
  const double d = (a - b) / static_cast<double>(k);
  return std::exp(-0.5 * d * d / (ell * ell));
}

Posterior dense_oracle(const std::vector<Observation>& obs, KernelKind kind, int k, double ell, double noise, int q) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = obs[i].fitness;
  const double mean = y.mean();
  double sd = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(n));
  if (sd <= 1e-12) sd = 1.0;
  const Eigen::VectorXd ys = (y.array() - mean) / sd;
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ks(i) = kernel(kind, q, obs[i].strategy_id, k, ell);
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = kernel(kind, obs[i].strategy_id, obs[j].strategy_id, k, ell);
  }
  K.diagonal().array() += noise + kGpJitter;
  const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
  const double mu = ks.dot(Kinv * ys);
  const double var = kernel(kind, q, q, k, ell) + noise - ks.dot(Kinv * ks);
  return {mean + sd * mu, sd * std::sqrt(std::max(var, 0.0))};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

TEST_CASE("EI: sigma = 0 branch is exact") {
  CHECK(expected_improvement(0.7, 0.0, 0.5) == doctest::Approx(0.2));
  CHECK(expected_improvement(0.3, 0.0, 0.5) == 0.0);
  CHECK(expected_improvement(0.5, 0.0, 0.5) == 0.0);
}

TEST_CASE("EI: non-negative and increasing in mu and sigma") {
  CounterRng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const double mu = rng.uniform01() * 20 - 10;
    const double sigma = rng.uniform01() * 5;
    const double ys = rng.uniform01() * 20 - 10;
    const double ei = expected_improvement(mu, sigma, ys);
    CHECK(ei >= 0.0);
    CHECK(expected_improvement(mu + 0.5, sigma, ys) >= ei);
    CHECK(expected_improvement(mu, sigma + 0.5, ys) >= ei * (1 - 1e-12) - 1e-15);
  }
  CHECK(expected_improvement(-50, 1.0, 0.0) >= 0.0);
}

TEST_CASE("EI: closed form agrees with numerical integration") {
  // Independent quadrature of E[max(Y - y*, 0)], Y ~ N(mu, sigma^2).
  for (double mu : {-1.0, 0.0, 0.4, 2.0})
    for (double sigma : {0.1, 0.5, 1.0, 3.0}) {
      const double ystar = 0.3;
      const int steps = 200000;
      const double lo = mu - 12 * sigma, hi = mu + 12 * sigma, h = (hi - lo) / steps;
      double sum = 0;
      for (int s = 0; s <= steps; ++s) {
        const double y = lo + s * h;
        const double w = (s == 0 || s == steps) ? 0.5 : 1.0;
        const double z = (y - mu) / sigma;
        sum += w * std::max(y - ystar, 0.0) * std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * std::numbers::pi));
      }
      CHECK(expected_improvement(mu, sigma, ystar) == doctest::Approx(sum * h).epsilon(1e-7));
    }
  (void)normal_cdf;
}

TEST_CASE("GP: posterior matches dense-solve oracle") {
  CounterRng rng(17);
  for (auto kind : {KernelKind::IndexRBF, KernelKind::Categorical}) {
    for (int set = 0; set < 10; ++set) {
      const int k = 100;
      const auto obs = random_obs(rng, 3 + static_cast<int>(rng.below(30)), k);
      const GPState gp = fit_gp(obs, kind, k);
      for (int q : {1, 7, 50, 100, obs.front().strategy_id}) {
        const auto want = dense_oracle(obs, kind, k, gp.lengthscale(), gp.noise_var(), q);
        const auto got = gp.posterior(q);
        CHECK(std::abs(got.mu - want.mu) < 1e-8);
        CHECK(std::abs(got.sigma * got.sigma - want.sigma * want.sigma) < 1e-8);
      }
    }
  }
}

TEST_CASE("GP: hyperparameters maximize the grid log marginal likelihood") {
  CounterRng rng(23);
  const auto obs = random_obs(rng, 25, 100);
  const GPState gp = fit_gp(obs, KernelKind::IndexRBF, 100);
  for (double ell : kLengthscaleGrid)
    for (double noise : kNoiseGrid)
      CHECK(fit_gp_fixed(obs, KernelKind::IndexRBF, 100, ell, noise).log_marginal_likelihood() <=
            gp.log_marginal_likelihood() + 1e-12);
}

TEST_CASE("GP: errors") {
  std::vector<Observation> one{{1, 0.5}};
  try {
    fit_gp(one, KernelKind::IndexRBF, 10);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
  std::vector<Observation> out_of_range{{1, 0.5}, {11, 0.4}};
  CHECK_THROWS_AS(fit_gp(out_of_range, KernelKind::IndexRBF, 10), Error);
}

TEST_CASE("GP: constant fitness does not break standardization") {
  std::vector<Observation> obs{{1, 0.5}, {2, 0.5}, {3, 0.5}};
  const GPState gp = fit_gp(obs, KernelKind::IndexRBF, 10);
  CHECK(gp.y_std() == 1.0);
  CHECK(std::isfinite(gp.posterior(5).mu));
}

TEST_CASE("select_strategy: invariant under positive affine rescaling") {
  CounterRng rng(31);
  for (int state = 0; state < 20; ++state) {
    const int k = 100;
    auto obs = random_obs(rng, 5 + static_cast<int>(rng.below(30)), k);
    double ystar = 0;
    for (const auto& o : obs) ystar = std::max(ystar, o.fitness);
    const double a = 0.1 + rng.uniform01() * 10;
    const double b = rng.uniform01() * 4 - 2;
    auto scaled = obs;
    for (auto& o : scaled) o.fitness = a * o.fitness + b;
    for (auto kind : {KernelKind::IndexRBF, KernelKind::Categorical}) {
      const int pick = select_strategy(fit_gp(obs, kind, k), k, ystar);
      const int pick2 = select_strategy(fit_gp(scaled, kind, k), k, a * ystar + b);
      CHECK(pick == pick2);
    }
  }
}

TEST_CASE("select_strategy: ties resolve to the lowest index") {
  // Categorical kernel with all arms unobserved except two identical ones:
  // every unobserved arm has the same posterior.
  std::vector<Observation> obs{{50, 0.2}, {60, 0.2}};
  const GPState gp = fit_gp(obs, KernelKind::Categorical, 100);
  CHECK(select_strategy(gp, 100, 0.2) == 1);
}

TEST_CASE("kernel names") {
  CHECK(to_string(KernelKind::IndexRBF) == "index_rbf");
  CHECK(kernel_from_string("categorical") == KernelKind::Categorical);
  CHECK_THROWS_AS(kernel_from_string("matern"), Error);
}
