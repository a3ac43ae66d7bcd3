#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace pded {

struct Observation {
  int strategy_id = 1;  // 1-based
  double fitness = 0.0;

  bool operator==(const Observation&) const = default;
};

enum class KernelKind { IndexRBF, Categorical };

std::string_view to_string(KernelKind kind) noexcept;
KernelKind kernel_from_string(std::string_view name);

inline constexpr double kCategoricalCross = 0.1;
inline constexpr double kGpJitter = 1e-8;
inline constexpr double kLengthscaleGrid[] = {0.05, 0.1, 0.2, 0.4, 0.8};
inline constexpr double kNoiseGrid[] = {1e-4, 1e-2, 1e-1};

struct Posterior {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Exact GP over strategy indices 1..K, fitted on standardized fitness.
/// Immutable once built.
class GPState {
public:
  const std::vector<Observation>& observations() const noexcept { return obs_; }
  KernelKind kernel() const noexcept { return kernel_; }
  int num_strategies() const noexcept { return k_; }
  double lengthscale() const noexcept { return lengthscale_; }
  double signal_var() const noexcept { return signal_var_; }
  double noise_var() const noexcept { return noise_var_; }
  double y_mean() const noexcept { return y_mean_; }
  double y_std() const noexcept { return y_std_; }
  double log_marginal_likelihood() const noexcept { return lml_; }

  /// Prior covariance between two strategies (standardized units).
  double covariance(int a, int b) const noexcept;

  /// Predictive mean and standard deviation of an observation at strategy k,
  /// in the original fitness units. Sigma is clamped at zero from below.
  Posterior posterior(int k) const;

private:
  friend GPState fit_gp(std::span<const Observation>, KernelKind, int);
  friend GPState fit_gp_fixed(std::span<const Observation>, KernelKind, int, double, double);

  std::vector<Observation> obs_;
  KernelKind kernel_ = KernelKind::IndexRBF;
  int k_ = 1;
  double lengthscale_ = 0.2;
  double signal_var_ = 1.0;
  double noise_var_ = 1e-2;
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
  double lml_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

/// Selects lengthscale (IndexRBF only) and noise by maximizing the exact log
/// marginal likelihood over the fixed grids. Throws InsufficientData when
/// fewer than two observations are given.
GPState fit_gp(std::span<const Observation> obs, KernelKind kernel, int num_strategies);

/// Same model with the hyperparameters pinned.
GPState fit_gp_fixed(std::span<const Observation> obs, KernelKind kernel, int num_strategies,
                     double lengthscale, double noise_var);

/// E[max(y - y_star, 0)] for y ~ N(mu, sigma^2).
double expected_improvement(double mu, double sigma, double y_star) noexcept;

/// argmax_k EI(k) over 1..K; the lowest index wins ties.
int select_strategy(const GPState& gp, int num_strategies, double y_star);

}  // namespace pded
