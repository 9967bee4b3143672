#include <doctest.h>

#include <cmath>

#include "rsd/errors.hpp"
#include "rsd/lasso.hpp"
#include "rsd/rng.hpp"

using namespace rsd;

namespace {

lasso::Problem random_problem(RngStream& r, Eigen::Index m, Eigen::Index p, bool intercept) {
  lasso::Problem pb;
  pb.X.resize(m, p);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) pb.X(i, j) = r.normal() * (1.0 + j % 3);
  }
  if (intercept) pb.X.col(0).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; j += 3) b[j] = 2.0 * r.normal();
  pb.y = pb.X * b;
  for (Eigen::Index i = 0; i < m; ++i) pb.y[i] += r.normal();
  pb.w.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) pb.w[i] = 1.0 + static_cast<double>(r.next_u64() % 50);
  if (intercept) {
    pb.penalize.assign(static_cast<std::size_t>(p), true);
    pb.penalize[0] = false;
  }
  return pb;
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(lasso::soft_threshold(3.0, 1.0) == 2.0);
  CHECK(lasso::soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(lasso::soft_threshold(0.5, 1.0) == 0.0);
  CHECK(lasso::soft_threshold(-1.0, 1.0) == 0.0);
  CHECK(lasso::soft_threshold(2.0, 0.0) == 2.0);
}

TEST_CASE("KKT residual on random weighted problems") {
  RngStream r(1);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index m = 5 + static_cast<Eigen::Index>(r.next_u64() % 196);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(r.next_u64() % 50);
    lasso::Problem pb = random_problem(r, m, p, t % 2 == 0);
    pb.standardize = t % 3 != 0;
    pb.penalty = lasso::lambda_max(pb) * std::pow(10.0, -3.0 * r.uniform());
    const lasso::Fit f = lasso::fit(pb);
    CHECK(f.converged);
    worst = std::max(worst, lasso::kkt_residual(pb, f.beta));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("zero penalty matches weighted least squares") {
  RngStream r(2);
  for (int t = 0; t < 20; ++t) {
    lasso::Problem pb = random_problem(r, 80, 6, t % 2 == 0);
    pb.penalty = 0.0;
    const lasso::Fit f = lasso::fit(pb);
    const Eigen::MatrixXd XtW = pb.X.transpose() * pb.w.asDiagonal();
    const Eigen::VectorXd wls = (XtW * pb.X).ldlt().solve(XtW * pb.y);
    CHECK((f.beta - wls).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("objective decreases monotonically") {
  RngStream r(3);
  lasso::Problem pb = random_problem(r, 60, 12, true);
  pb.penalty = 0.1 * lasso::lambda_max(pb);
  lasso::FitOptions opts;
  opts.record_objective = true;
  const lasso::Fit f = lasso::fit(pb, opts);
  REQUIRE(f.objective.size() >= 2);
  for (std::size_t k = 1; k < f.objective.size(); ++k) {
    CHECK(f.objective[k] <= f.objective[k - 1] + 1e-12);
  }
  CHECK(lasso::objective(pb, f.beta) == doctest::Approx(f.objective.back()).epsilon(1e-12));
}

TEST_CASE("lambda_max zeroes every penalized coefficient") {
  RngStream r(4);
  for (bool intercept : {false, true}) {
    lasso::Problem pb = random_problem(r, 50, 8, intercept);
    pb.penalty = lasso::lambda_max(pb);
    const lasso::Fit at = lasso::fit(pb);
    for (Eigen::Index j = intercept ? 1 : 0; j < 8; ++j) CHECK(at.beta[j] == 0.0);
    pb.penalty *= 0.99;
    const lasso::Fit below = lasso::fit(pb);
    CHECK(below.beta.tail(intercept ? 7 : 8).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("unpenalized intercept equals the weighted mean when the rest is zero") {
  RngStream r(5);
  lasso::Problem pb = random_problem(r, 40, 4, true);
  pb.penalty = 10.0 * lasso::lambda_max(pb);
  const lasso::Fit f = lasso::fit(pb);
  CHECK(f.beta[0] == doctest::Approx(pb.w.dot(pb.y) / pb.w.sum()).epsilon(1e-10));
}

TEST_CASE("one-column closed form") {
  lasso::Problem pb;
  pb.X.resize(4, 1);
  pb.y.resize(4);
  pb.X << 1.0, -1.0, 1.0, -1.0;
  pb.y << 3.0, -3.0, 2.0, -2.0;
  pb.w = Eigen::VectorXd::Ones(4);
  pb.standardize = false;
  pb.penalty = 1.0;
  // (1/8) sum (y - x b)^2 + |b|: gradient (1/4)(-10 + 4b) + sign(b) = 0 -> b = 1.5.
  CHECK(lasso::fit(pb).beta[0] == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("validation") {
  lasso::Problem pb;
  pb.X = Eigen::MatrixXd::Ones(3, 2);
  pb.y = Eigen::VectorXd::Ones(2);
  pb.w = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(lasso::fit(pb), DomainError);
  pb.y = Eigen::VectorXd::Ones(3);
  pb.w[1] = -1.0;
  CHECK_THROWS_AS(lasso::fit(pb), DomainError);
  pb.w[1] = 1.0;
  pb.penalty = -1.0;
  CHECK_THROWS_AS(lasso::fit(pb), DomainError);
}

TEST_CASE("fold assignment") {
  RngStream r(6);
  const auto f = lasso::assign_folds(23, 5, r);
  std::vector<int> sizes(5, 0);
  for (int k : f) ++sizes[k];
  for (int s : sizes) CHECK((s == 4 || s == 5));
  RngStream r2(6);
  CHECK(lasso::assign_folds(23, 5, r2) == f);
}

TEST_CASE("cross-validation picks a sensible penalty") {
  RngStream r(7);
  lasso::Problem pb;
  const Eigen::Index m = 200, p = 20;
  pb.X.resize(m, p);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) pb.X(i, j) = r.normal();
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  b.head(3) << 3.0, -2.0, 1.5;
  pb.y = pb.X * b;
  for (Eigen::Index i = 0; i < m; ++i) pb.y[i] += 0.5 * r.normal();
  pb.w = Eigen::VectorXd::Ones(m);

  const lasso::CvResult cv = lasso::cv_select(pb, 5, 100, r);
  REQUIRE(cv.grid.size() == 100);
  CHECK(cv.grid.front() == doctest::Approx(lasso::lambda_max(pb)));
  CHECK(cv.grid.back() == doctest::Approx(lasso::lambda_max(pb) * 1e-4));
  for (std::size_t k = 1; k < cv.grid.size(); ++k) CHECK(cv.grid[k] < cv.grid[k - 1]);
  CHECK(cv.best_penalty == cv.grid[cv.best_index]);
  for (double e : cv.cv_error) CHECK(cv.cv_error[cv.best_index] <= e);
  CHECK(cv.best_index > 0);
  CHECK(cv.best_index < 99);

  pb.penalty = cv.best_penalty;
  const Eigen::VectorXd fit = lasso::fit(pb).beta;
  CHECK((fit.head(3) - b.head(3)).cwiseAbs().maxCoeff() < 0.3);
}
