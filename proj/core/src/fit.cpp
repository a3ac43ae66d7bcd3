#include "pded/fit.hpp"
#include "pded/error.hpp"

#include <algorithm>
#include <cmath>

namespace pded {

void StridgeConfig::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(ridge_alpha) || !ok(threshold) || !ok(lambda_parsimony) || max_iters < 0)
    throw Error(ErrorCode::InvalidArgument, "stridge config values must be finite and non-negative");
}

namespace {

double population_variance(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().mean();
}

void check_lengths(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target) {
  if (predicted.size() != target.size() || target.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "metric inputs must have equal length >= 2");
}

using Index = Eigen::Index;

Eigen::MatrixXd gather_cols(const Eigen::MatrixXd& m, const std::vector<Index>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = m.col(idx[k]);
  return out;
}

Eigen::VectorXd ridge_on(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                         const std::vector<Index>& support, double alpha) {
  const auto s = static_cast<Index>(support.size());
  Eigen::MatrixXd g(s, s);
  Eigen::VectorXd b(s);
  for (Index a = 0; a < s; ++a) {
    b(a) = rhs(support[a]);
    for (Index c = 0; c < s; ++c) g(a, c) = gram(support[a], support[c]);
  }
  g.diagonal().array() += alpha;
  return g.completeOrthogonalDecomposition().solve(b);
}

}  // namespace

double nrmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target) {
  check_lengths(predicted, target);
  const double var = population_variance(target);
  if (!(var > 0.0)) throw Error(ErrorCode::ZeroVariance, "target has zero variance");
  const double mse = (predicted - target).array().square().mean();
  return std::sqrt(mse / var);
}

double r_squared(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target) {
  check_lengths(predicted, target);
  const double mean = target.mean();
  const double ss_tot = (target.array() - mean).square().sum();
  if (!(ss_tot > 0.0)) throw Error(ErrorCode::ZeroVariance, "target has zero variance");
  const double ss_res = (predicted - target).array().square().sum();
  return 1.0 - ss_res / ss_tot;
}

Eigen::VectorXd predict(const RegressionProblem& problem, const Eigen::VectorXd& coefficients) {
  return problem.theta * coefficients;
}

FitResult stridge(const RegressionProblem& problem, const StridgeConfig& cfg) {
  cfg.validate();
  const Index n = problem.theta.rows();
  const Index m = problem.theta.cols();
  if (m < 1 || n <= m)
    throw Error(ErrorCode::DegenerateProblem,
                "need n_samples > columns (n=" + std::to_string(n) + ", columns=" + std::to_string(m) + ")");

  FitResult result;
  result.coefficients = Eigen::VectorXd::Zero(m);

  // Unit 2-norm columns and target; zero columns never enter the support.
  Eigen::VectorXd col_norm = problem.theta.colwise().norm().transpose();
  const double y_norm = problem.target.norm();
  const double y_scale = y_norm > 0.0 ? y_norm : 1.0;
  std::vector<Index> support;
  Eigen::MatrixXd theta_n(n, m);
  for (Index j = 0; j < m; ++j) {
    if (col_norm(j) > 0.0 && std::isfinite(col_norm(j))) {
      theta_n.col(j) = problem.theta.col(j) / col_norm(j);
      support.push_back(j);
    } else {
      theta_n.col(j).setZero();
      result.degenerate = true;
    }
  }
  const Eigen::VectorXd y_n = problem.target / y_scale;
  const Eigen::MatrixXd gram = theta_n.transpose() * theta_n;
  const Eigen::VectorXd rhs = theta_n.transpose() * y_n;

  result.support_trace.push_back(support.size());
  if (!support.empty()) {
    Eigen::VectorXd xi = ridge_on(gram, rhs, support, cfg.ridge_alpha);
    for (int it = 0; it < cfg.max_iters; ++it) {
      std::vector<Index> kept;
      for (std::size_t k = 0; k < support.size(); ++k)
        if (std::abs(xi(static_cast<Index>(k))) >= cfg.threshold) kept.push_back(support[k]);
      result.support_trace.push_back(kept.size());
      if (kept.size() == support.size()) break;
      support = std::move(kept);
      if (support.empty()) break;
      xi = ridge_on(gram, rhs, support, cfg.ridge_alpha);
    }
  }

  // Debias: least squares on the surviving columns, dropping dependent ones.
  while (!support.empty()) {
    const Eigen::MatrixXd a = gather_cols(theta_n, support);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    const Index rank = qr.rank();
    if (rank < static_cast<Index>(support.size())) {
      result.degenerate = true;
      std::vector<Index> independent;
      for (Index k = 0; k < rank; ++k) independent.push_back(support[qr.colsPermutation().indices()(k)]);
      std::sort(independent.begin(), independent.end());
      support = std::move(independent);
      continue;
    }
    const Eigen::VectorXd xi = qr.solve(y_n);
    for (std::size_t k = 0; k < support.size(); ++k)
      result.coefficients(support[k]) = xi(static_cast<Index>(k)) * y_scale / col_norm(support[k]);
    break;
  }

  result.support.assign(support.begin(), support.end());
  const Eigen::VectorXd pred = predict(problem, result.coefficients);
  result.nrmse_train = nrmse(pred, problem.target);
  result.r2_train = r_squared(pred, problem.target);
  result.score = fitness(result.nrmse_train, result.support.size(), cfg.lambda_parsimony);
  return result;
}

void evaluate_test(FitResult& fit, const RegressionProblem& test) {
  if (test.theta.cols() != fit.coefficients.size())
    throw Error(ErrorCode::InvalidArgument, "test problem has a different column count");
  const Eigen::VectorXd pred = predict(test, fit.coefficients);
  fit.nrmse_test = nrmse(pred, test.target);
  fit.r2_test = r_squared(pred, test.target);
}

}  // namespace pded
