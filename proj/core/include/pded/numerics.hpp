#pragma once

#include "pded/expr.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pded {

/// Gridded field u(x, t) on a uniform grid. Stored nx x nt: row i is x_i,
/// column j is t_j.
struct Dataset {
  Eigen::MatrixXd u;
  double x0 = 0.0, x1 = 1.0, t0 = 0.0, t1 = 1.0;
  std::string name;
  double train_frac = 0.8;

  Eigen::Index nx() const noexcept { return u.rows(); }
  Eigen::Index nt() const noexcept { return u.cols(); }
  double dx() const noexcept { return (x1 - x0) / static_cast<double>(nx() - 1); }
  double dt() const noexcept { return (t1 - t0) / static_cast<double>(nt() - 1); }
  double x(Eigen::Index i) const noexcept { return x0 + static_cast<double>(i) * dx(); }
  double t(Eigen::Index j) const noexcept { return t0 + static_cast<double>(j) * dt(); }

  /// Throws InvalidArgument when the grid or values violate the invariants
  /// (nx, nt >= 8, increasing bounds, finite entries, train_frac in (0, 1]).
  void validate() const;
};

enum class Axis { X, T };
enum class Split { Train, Test, All };

inline constexpr int kTrimX = 2;
inline constexpr int kTrimT = 1;

/// Second-order central differences in the interior, second-order one-sided
/// stencils at the edges. Axis::T supports order 1 only.
Eigen::MatrixXd differentiate(const Dataset& d, int order, Axis axis);

/// Half-open range of time columns [begin, end) belonging to a split, before
/// interior trimming.
struct TimeRange {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;
};
TimeRange split_range(const Dataset& d, Split split);

/// Regression inputs for one candidate skeleton: Theta has one column per
/// term (in canonical order) and target holds u_t, both flattened over the
/// trimmed interior of the split, x fastest.
struct RegressionProblem {
  Eigen::VectorXd target;
  Eigen::MatrixXd theta;
  std::vector<Term> terms;
  Eigen::Index n_samples = 0;
  Eigen::Index split_index = 0;  // first test time column

  Eigen::VectorXd column(const Term& term) const;
};

/// Precomputed derivative fields of one dataset. Built once, then read-only,
/// so it may be shared across threads.
class FeatureCache {
public:
  explicit FeatureCache(std::shared_ptr<const Dataset> data);

  const Dataset& dataset() const noexcept { return *data_; }
  const Eigen::MatrixXd& field(FactorKind kind) const;
  const Eigen::MatrixXd& u_t() const noexcept { return u_t_; }

  /// Pointwise product of factor fields over the whole grid.
  Eigen::MatrixXd term_field(const Term& term) const;

  /// Throws SingularFactor (1/x with x crossing zero) or EmptySplit.
  RegressionProblem build_problem(const Expression& e, Split split) const;
  /// Same for an arbitrary term library (no term-count cap).
  RegressionProblem build_problem(std::span<const Term> terms, Split split) const;

private:
  std::shared_ptr<const Dataset> data_;
  Eigen::MatrixXd u_x_, u_xx_, u_xxx_, u_t_;
  Eigen::MatrixXd x_, inv_x_, sin_u_, exp_u_;
  bool inv_x_ok_ = false;
};

/// Convenience wrapper; builds a throwaway cache.
RegressionProblem build_problem(const Dataset& d, const Expression& e, Split split);

}  // namespace pded
