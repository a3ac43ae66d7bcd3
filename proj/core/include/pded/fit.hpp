#pragma once

#include "pded/numerics.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace pded {

struct StridgeConfig {
  double ridge_alpha = 1e-5;
  double threshold = 1e-2;  // on unit-norm columns and unit-norm target
  int max_iters = 10;
  double lambda_parsimony = 0.01;

  void validate() const;
};

struct FitResult {
  Eigen::VectorXd coefficients;       // one per problem column, zero off support
  std::vector<std::size_t> support;   // retained column indices, ascending
  double nrmse_train = 0.0;
  double r2_train = 0.0;
  std::optional<double> nrmse_test;
  std::optional<double> r2_test;
  double score = 0.0;
  bool degenerate = false;            // dependent columns were dropped
  std::vector<std::size_t> support_trace;  // support size after each thresholding pass
};

/// Sequential thresholded ridge regression followed by an OLS debias on the
/// surviving support. Fills the train metrics and the composite score.
/// Throws DegenerateProblem when n_samples <= columns.
FitResult stridge(const RegressionProblem& problem, const StridgeConfig& cfg);

/// Theta * coefficients.
Eigen::VectorXd predict(const RegressionProblem& problem, const Eigen::VectorXd& coefficients);

/// Scores a fitted result on a held-out problem built from the same skeleton.
void evaluate_test(FitResult& fit, const RegressionProblem& test);

/// sqrt(mean((predicted - target)^2) / Var(target)), population variance.
/// Throws ZeroVariance.
double nrmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target);

/// 1 - SS_res / SS_tot. Throws ZeroVariance.
double r_squared(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target);

/// (1 - lambda * n_terms) / (1 + nrmse)
inline double fitness(double nrmse_train, std::size_t n_terms, double lambda) noexcept {
  return (1.0 - lambda * static_cast<double>(n_terms)) / (1.0 + nrmse_train);
}

}  // namespace pded
