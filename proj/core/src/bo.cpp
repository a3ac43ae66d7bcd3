#include "pded/bo.hpp"
#include "pded/error.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <numbers>

namespace pded {

std::string_view to_string(KernelKind kind) noexcept {
  return kind == KernelKind::IndexRBF ? "index_rbf" : "categorical";
}

KernelKind kernel_from_string(std::string_view name) {
  if (name == "index_rbf") return KernelKind::IndexRBF;
  if (name == "categorical") return KernelKind::Categorical;
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

double GPState::covariance(int a, int b) const noexcept {
  if (kernel_ == KernelKind::Categorical) return signal_var_ * (a == b ? 1.0 : kCategoricalCross);
  const double d = static_cast<double>(a - b) / static_cast<double>(k_);
  return signal_var_ * std::exp(-d * d / (2.0 * lengthscale_ * lengthscale_));
}

Posterior GPState::posterior(int k) const {
  const auto n = static_cast<Eigen::Index>(obs_.size());
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks(i) = covariance(k, obs_[i].strategy_id);
  const double mu_s = ks.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(ks);
  const double var_s = covariance(k, k) + noise_var_ - v.squaredNorm();
  return {y_mean_ + y_std_ * mu_s, y_std_ * std::sqrt(std::max(var_s, 0.0))};
}

GPState fit_gp_fixed(std::span<const Observation> obs, KernelKind kernel, int num_strategies,
                     double lengthscale, double noise_var) {
  if (obs.size() < 2) throw Error(ErrorCode::InsufficientData, "GP needs at least two observations");
  if (num_strategies < 1) throw Error(ErrorCode::InvalidArgument, "strategy count must be positive");
  GPState gp;
  gp.obs_.assign(obs.begin(), obs.end());
  gp.kernel_ = kernel;
  gp.k_ = num_strategies;
  gp.lengthscale_ = lengthscale;
  gp.noise_var_ = noise_var;

  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(obs[i].fitness)) throw Error(ErrorCode::InvalidArgument, "non-finite fitness");
    if (obs[i].strategy_id < 1 || obs[i].strategy_id > num_strategies)
      throw Error(ErrorCode::InvalidArgument, "strategy id out of range");
    y(i) = obs[i].fitness;
  }
  gp.y_mean_ = y.mean();
  const double sd = std::sqrt((y.array() - gp.y_mean_).square().mean());
  gp.y_std_ = sd > 1e-12 ? sd : 1.0;
  const Eigen::VectorXd ys = (y.array() - gp.y_mean_).matrix() / gp.y_std_;

  Eigen::MatrixXd kmat(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) kmat(i, j) = gp.covariance(obs[i].strategy_id, obs[j].strategy_id);
  kmat.diagonal().array() += noise_var + kGpJitter;
  gp.chol_.compute(kmat);
  if (gp.chol_.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidArgument, "kernel matrix is not positive definite");
  gp.alpha_ = gp.chol_.solve(ys);
  const double logdet_half = gp.chol_.matrixLLT().diagonal().array().log().sum();
  gp.lml_ = -0.5 * ys.dot(gp.alpha_) - logdet_half -
            0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return gp;
}

GPState fit_gp(std::span<const Observation> obs, KernelKind kernel, int num_strategies) {
  if (obs.size() < 2) throw Error(ErrorCode::InsufficientData, "GP needs at least two observations");
  std::optional<GPState> best;
  const std::span<const double> lengthscales =
      kernel == KernelKind::IndexRBF ? std::span<const double>(kLengthscaleGrid)
                                     : std::span<const double>(kLengthscaleGrid).first(1);
  for (double ell : lengthscales) {
    for (double noise : kNoiseGrid) {
      GPState gp = fit_gp_fixed(obs, kernel, num_strategies, ell, noise);
      if (!best || gp.log_marginal_likelihood() > best->log_marginal_likelihood()) best = std::move(gp);
    }
  }
  return std::move(*best);
}

double expected_improvement(double mu, double sigma, double y_star) noexcept {
  const double delta = mu - y_star;
  if (!(sigma > 0.0)) return std::max(delta, 0.0);
  const double z = delta / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(delta * cdf + sigma * pdf, 0.0);
}

int select_strategy(const GPState& gp, int num_strategies, double y_star) {
  int best_k = 1;
  double best_ei = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= num_strategies; ++k) {
    const auto post = gp.posterior(k);
    const double ei = expected_improvement(post.mu, post.sigma, y_star);
    if (ei > best_ei) {
      best_ei = ei;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace pded
