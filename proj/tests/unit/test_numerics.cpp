#include "pded/error.hpp"
#include "pded/numerics.hpp"

#include "fields.hpp"

#include <doctest.h>

#include <cmath>

using namespace pded;
using pded::testing::make_field;

namespace {

double max_interior_error(const Eigen::MatrixXd& got, const std::function<double(double, double)>& want,
                          const Dataset& d, int margin) {
  double err = 0.0;
  for (Eigen::Index j = 0; j < d.nt(); ++j)
    for (Eigen::Index i = margin; i < d.nx() - margin; ++i)
      err = std::max(err, std::abs(got(i, j) - want(d.x(i), d.t(j))));
  return err;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("differentiate: central differences are exact on quadratics") {
  const auto d = make_field(21, 9, -1.0, 3.0, 0.0, 1.0, [](double x, double) { return x * x; });
  const Eigen::MatrixXd ux = differentiate(d, 1, Axis::X);
  CHECK(max_interior_error(ux, [](double x, double) { return 2 * x; }, d, 1) < 1e-12);
  // One-sided second-order stencils are exact on quadratics as well.
  CHECK(max_interior_error(ux, [](double x, double) { return 2 * x; }, d, 0) < 1e-11);
  const Eigen::MatrixXd uxx = differentiate(d, 2, Axis::X);
  CHECK(max_interior_error(uxx, [](double, double) { return 2.0; }, d, 0) < 1e-9);
}

TEST_CASE("differentiate: third derivative exact on cubics") {
  const auto d = make_field(30, 8, 0.0, 2.0, 0.0, 1.0, [](double x, double t) { return x * x * x + t; });
  const Eigen::MatrixXd uxxx = differentiate(d, 3, Axis::X);
  CHECK(max_interior_error(uxxx, [](double, double) { return 6.0; }, d, 0) < 1e-6);
}

TEST_CASE("differentiate: time axis") {
  const auto d = make_field(8, 40, 0.0, 1.0, 0.0, 2.0, [](double x, double t) { return x + 3 * t * t; });
  const Eigen::MatrixXd ut = differentiate(d, 1, Axis::T);
  for (Eigen::Index j = 0; j < d.nt(); ++j) CHECK(ut(3, j) == doctest::Approx(6 * d.t(j)).epsilon(1e-9));
  CHECK(code_of([&] { differentiate(d, 2, Axis::T); }) == ErrorCode::UnsupportedOrder);
  CHECK(code_of([&] { differentiate(d, 4, Axis::X); }) == ErrorCode::UnsupportedOrder);
}

TEST_CASE("differentiate: constant field has zero derivatives") {
  const auto d = make_field(16, 12, 0.0, 1.0, 0.0, 1.0, [](double, double) { return 4.25; });
  for (int order : {1, 2, 3}) CHECK(differentiate(d, order, Axis::X).cwiseAbs().maxCoeff() == 0.0);
  CHECK(differentiate(d, 1, Axis::T).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("differentiate: second-order convergence on sin") {
  auto error_at = [](Eigen::Index nx) {
    const auto d = make_field(nx, 8, 0.0, 3.0, 0.0, 1.0, [](double x, double) { return std::sin(x); });
    return max_interior_error(differentiate(d, 2, Axis::X), [](double x, double) { return -std::sin(x); }, d, 1);
  };
  const double e1 = error_at(41);
  const double e2 = error_at(81);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  // Edges are second order too.
  auto edge_error = [](Eigen::Index nx) {
    const auto d = make_field(nx, 8, 0.0, 3.0, 0.0, 1.0, [](double x, double) { return std::sin(x); });
    const Eigen::MatrixXd ux = differentiate(d, 1, Axis::X);
    return std::abs(ux(0, 0) - std::cos(0.0));
  };
  CHECK(edge_error(41) / edge_error(81) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("split ranges partition time with the 80/20 rule") {
  const auto d = make_field(10, 101, 0.0, 1.0, 0.0, 1.0, [](double x, double t) { return x * t; });
  const auto tr = split_range(d, Split::Train);
  const auto te = split_range(d, Split::Test);
  CHECK(tr.begin == 0);
  CHECK(tr.end == 81);  // ceil(0.8 * 101)
  CHECK(te.begin == 81);
  CHECK(te.end == 101);
  const auto all = split_range(d, Split::All);
  CHECK(all.begin == 0);
  CHECK(all.end == 101);
}

TEST_CASE("build_problem: shapes, trimming, powers and partition") {
  auto d = std::make_shared<Dataset>(
      make_field(20, 30, 0.5, 2.0, 0.0, 1.0, [](double x, double t) { return std::sin(x) * std::exp(-t) + 2; }));
  FeatureCache cache(d);
  const auto e = parse_equation("u_t = u + u^3 + u_x*1/x + sin(u)*exp(u)");
  const auto train = cache.build_problem(e, Split::Train);
  const auto test = cache.build_problem(e, Split::Test);
  const auto tr = split_range(*d, Split::Train);
  const auto te = split_range(*d, Split::Test);
  const Eigen::Index rows = d->nx() - 2 * kTrimX;
  CHECK(train.n_samples == rows * (tr.end - tr.begin - 2 * kTrimT));
  CHECK(test.n_samples == rows * (te.end - te.begin - 2 * kTrimT));
  CHECK(train.theta.cols() == 4);
  CHECK(train.split_index == te.begin);

  // u^3 column is the elementwise cube of the u column.
  const Eigen::VectorXd u = train.column(Term::single(FactorKind::U));
  const Eigen::VectorXd u3 = train.column(Term::single(FactorKind::U, 3));
  CHECK((u3.array() - u.array().cube()).abs().maxCoeff() < 1e-12);

  // Target is the interior u_t; spot check one sample (x fastest).
  const Eigen::MatrixXd ut = differentiate(*d, 1, Axis::T);
  CHECK(train.target(0) == ut(kTrimX, tr.begin + kTrimT));
  CHECK(train.target(1) == ut(kTrimX + 1, tr.begin + kTrimT));

  // Train and test target samples come from disjoint time columns.
  CHECK(tr.end - kTrimT <= te.begin + kTrimT);
}

TEST_CASE("build_problem: errors") {
  auto crossing = std::make_shared<Dataset>(
      make_field(20, 30, -1.0, 1.0, 0.0, 1.0, [](double x, double t) { return x + t; }));
  FeatureCache cache(crossing);
  CHECK(code_of([&] { cache.build_problem(parse_equation("u_t = u_x*1/x"), Split::Train); }) ==
        ErrorCode::SingularFactor);
  CHECK_NOTHROW(cache.build_problem(parse_equation("u_t = u_x*x"), Split::Train));

  auto tiny = std::make_shared<Dataset>(make_field(8, 8, 0.0, 1.0, 0.0, 1.0, [](double x, double t) { return x + t; }));
  tiny->train_frac = 1.0;
  FeatureCache small(tiny);
  CHECK(code_of([&] { small.build_problem(parse_equation("u_t = u"), Split::Test); }) == ErrorCode::EmptySplit);
}

TEST_CASE("feature cache is deterministic") {
  auto d = std::make_shared<Dataset>(make_field(16, 16, 0.0, 1.0, 0.0, 1.0, [](double x, double t) { return x * t; }));
  FeatureCache a(d), b(d);
  const auto e = parse_equation("u_t = u*u_xx + u_x^2");
  CHECK(a.build_problem(e, Split::All).theta == b.build_problem(e, Split::All).theta);
  CHECK(differentiate(*d, 2, Axis::X) == differentiate(*d, 2, Axis::X));
}
