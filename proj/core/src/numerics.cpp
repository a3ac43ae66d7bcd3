#include "pded/numerics.hpp"
#include "pded/error.hpp"

#include <cmath>

namespace pded {

void Dataset::validate() const {
  if (nx() < 8 || nt() < 8) throw Error(ErrorCode::InvalidArgument, "dataset grid must be at least 8 x 8");
  if (!(x1 > x0) || !(t1 > t0)) throw Error(ErrorCode::InvalidArgument, "dataset bounds must be increasing");
  if (!(train_frac > 0.0 && train_frac <= 1.0)) throw Error(ErrorCode::InvalidArgument, "train_frac must be in (0, 1]");
  if (!u.allFinite()) throw Error(ErrorCode::InvalidArgument, "dataset contains non-finite values");
}

namespace {

// Differentiates each line of `v` (length n, stride between samples) in place
// into `out`.
template <class In, class Out>
void diff_line(const In& v, Out&& out, Eigen::Index n, int order, double h) {
  switch (order) {
    case 1: {
      const double s = 1.0 / (2.0 * h);
      for (Eigen::Index i = 1; i + 1 < n; ++i) out(i) = (v(i + 1) - v(i - 1)) * s;
      out(0) = (-3.0 * v(0) + 4.0 * v(1) - v(2)) * s;
      out(n - 1) = (3.0 * v(n - 1) - 4.0 * v(n - 2) + v(n - 3)) * s;
      break;
    }
    case 2: {
      const double s = 1.0 / (h * h);
      for (Eigen::Index i = 1; i + 1 < n; ++i) out(i) = (v(i + 1) - 2.0 * v(i) + v(i - 1)) * s;
      out(0) = (2.0 * v(0) - 5.0 * v(1) + 4.0 * v(2) - v(3)) * s;
      out(n - 1) = (2.0 * v(n - 1) - 5.0 * v(n - 2) + 4.0 * v(n - 3) - v(n - 4)) * s;
      break;
    }
    case 3: {
      const double s = 1.0 / (h * h * h);
      for (Eigen::Index i = 2; i + 2 < n; ++i)
        out(i) = (-0.5 * v(i - 2) + v(i - 1) - v(i + 1) + 0.5 * v(i + 2)) * s;
      // forward/backward: (-5/2, 9, -12, 7, -3/2)
      auto fwd = [&](Eigen::Index i) {
        return (-2.5 * v(i) + 9.0 * v(i + 1) - 12.0 * v(i + 2) + 7.0 * v(i + 3) - 1.5 * v(i + 4)) * s;
      };
      auto bwd = [&](Eigen::Index i) {
        return (2.5 * v(i) - 9.0 * v(i - 1) + 12.0 * v(i - 2) - 7.0 * v(i - 3) + 1.5 * v(i - 4)) * s;
      };
      out(0) = fwd(0);
      out(1) = fwd(1);
      out(n - 2) = bwd(n - 2);
      out(n - 1) = bwd(n - 1);
      break;
    }
    default:
      throw Error(ErrorCode::UnsupportedOrder, "derivative order " + std::to_string(order));
  }
}

}  // namespace

Eigen::MatrixXd differentiate(const Dataset& d, int order, Axis axis) {
  if (order < 1 || order > 3) throw Error(ErrorCode::UnsupportedOrder, "derivative order must be 1, 2 or 3");
  if (axis == Axis::T && order != 1) throw Error(ErrorCode::UnsupportedOrder, "time derivatives support order 1 only");
  if (d.nx() < 5 || d.nt() < 5) throw Error(ErrorCode::InvalidArgument, "grid too small for the stencils");

  Eigen::MatrixXd out(d.nx(), d.nt());
  if (axis == Axis::X) {
    for (Eigen::Index j = 0; j < d.nt(); ++j) diff_line(d.u.col(j), out.col(j), d.nx(), order, d.dx());
  } else {
    for (Eigen::Index i = 0; i < d.nx(); ++i) diff_line(d.u.row(i), out.row(i), d.nt(), order, d.dt());
  }
  return out;
}

TimeRange split_range(const Dataset& d, Split split) {
  const auto n_train = static_cast<Eigen::Index>(std::ceil(d.train_frac * static_cast<double>(d.nt()) - 1e-12));
  switch (split) {
    case Split::Train: return {0, std::min(n_train, d.nt())};
    case Split::Test: return {std::min(n_train, d.nt()), d.nt()};
    case Split::All: return {0, d.nt()};
  }
  return {};
}

Eigen::VectorXd RegressionProblem::column(const Term& term) const {
  for (std::size_t k = 0; k < terms.size(); ++k)
    if (terms[k] == term) return theta.col(static_cast<Eigen::Index>(k));
  throw Error(ErrorCode::InvalidArgument, "term not in problem: " + term.to_string());
}

FeatureCache::FeatureCache(std::shared_ptr<const Dataset> data) : data_(std::move(data)) {
  const Dataset& d = *data_;
  d.validate();
  u_x_ = differentiate(d, 1, Axis::X);
  u_xx_ = differentiate(d, 2, Axis::X);
  u_xxx_ = differentiate(d, 3, Axis::X);
  u_t_ = differentiate(d, 1, Axis::T);

  Eigen::VectorXd xs(d.nx());
  for (Eigen::Index i = 0; i < d.nx(); ++i) xs(i) = d.x(i);
  x_ = xs.replicate(1, d.nt());
  inv_x_ok_ = d.x0 > 0.0 || d.x1 < 0.0;
  if (inv_x_ok_) inv_x_ = x_.cwiseInverse();
  sin_u_ = d.u.array().sin().matrix();
  exp_u_ = d.u.array().exp().matrix();
}

const Eigen::MatrixXd& FeatureCache::field(FactorKind kind) const {
  switch (kind) {
    case FactorKind::U: return data_->u;
    case FactorKind::Ux: return u_x_;
    case FactorKind::Uxx: return u_xx_;
    case FactorKind::Uxxx: return u_xxx_;
    case FactorKind::X: return x_;
    case FactorKind::InvX:
      if (!inv_x_ok_)
        throw Error(ErrorCode::SingularFactor, "1/x on a domain containing x = 0 (" + data_->name + ")");
      return inv_x_;
    case FactorKind::SinU: return sin_u_;
    case FactorKind::ExpU: return exp_u_;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown factor kind");
}

Eigen::MatrixXd FeatureCache::term_field(const Term& term) const {
  Eigen::ArrayXXd acc = Eigen::ArrayXXd::Ones(data_->nx(), data_->nt());
  for (const auto& f : term.factors()) {
    const auto& base = field(f.kind).array();
    for (int k = 0; k < f.exponent; ++k) acc *= base;
  }
  return acc.matrix();
}

RegressionProblem FeatureCache::build_problem(const Expression& e, Split split) const {
  return build_problem(std::span<const Term>(e.terms()), split);
}

RegressionProblem FeatureCache::build_problem(std::span<const Term> terms, Split split) const {
  if (terms.empty()) throw Error(ErrorCode::InvalidArgument, "empty term list");
  const Dataset& d = *data_;
  const TimeRange range = split_range(d, split);
  const Eigen::Index jb = range.begin + kTrimT;
  const Eigen::Index je = range.end - kTrimT;
  const Eigen::Index ib = kTrimX;
  const Eigen::Index ie = d.nx() - kTrimX;
  if (je <= jb || ie <= ib) throw Error(ErrorCode::EmptySplit, "split has no interior samples");

  const Eigen::Index rows = ie - ib;
  const Eigen::Index cols = je - jb;
  RegressionProblem p;
  p.n_samples = rows * cols;
  p.split_index = split_range(d, Split::Test).begin;
  p.terms.assign(terms.begin(), terms.end());
  p.target = u_t_.block(ib, jb, rows, cols).reshaped();
  p.theta.resize(p.n_samples, static_cast<Eigen::Index>(p.terms.size()));
  for (std::size_t k = 0; k < p.terms.size(); ++k) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Ones(rows, cols);
    for (const auto& f : p.terms[k].factors()) {
      const auto base = field(f.kind).block(ib, jb, rows, cols).array();
      for (int m = 0; m < f.exponent; ++m) acc *= base;
    }
    p.theta.col(static_cast<Eigen::Index>(k)) = acc.matrix().reshaped();
  }
  return p;
}

RegressionProblem build_problem(const Dataset& d, const Expression& e, Split split) {
  return FeatureCache(std::make_shared<const Dataset>(d)).build_problem(e, split);
}

}  // namespace pded
