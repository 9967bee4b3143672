#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rsd/metrics.hpp"

using namespace rsd;

using test::all_partitions;
using test::pair_count_ari;

TEST_CASE("ARI matches pair counting on every pair of partitions of 6 items") {
  const auto parts = all_partitions(6);
  REQUIRE(parts.size() == 203);
  double worst = 0.0;
  for (const auto& a : parts) {
    for (const auto& b : parts) worst = std::max(worst, std::abs(ari(a, b) - pair_count_ari(a, b)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("ARI properties") {
  CHECK(ari({0, 0, 1, 1}, {5, 5, 9, 9}) == 1.0);
  CHECK(ari({0, 0, 0}, {0, 0, 0}) == 1.0);
  CHECK(ari({0, 1, 2}, {0, 1, 2}) == 1.0);
  CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) < 0.0);
  CHECK(ari({0, 0, 1, 1, 2}, {1, 1, 0, 2, 2}) == doctest::Approx(ari({1, 1, 0, 2, 2}, {0, 0, 1, 1, 2})));
  CHECK_THROWS(ari({0, 1}, {0}));
}

TEST_CASE("DIFFK") {
  CHECK(diffk(5, 3).signed_diff == 2);
  CHECK(diffk(5, 3).abs_diff == 2);
  CHECK(diffk(2, 6).signed_diff == -4);
  CHECK(diffk(2, 6).abs_diff == 4);
  CHECK(diffk(3, 3).abs_diff == 0);
}

TEST_CASE("RMSPE") {
  CHECK(rmspe(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)) == 0.0);
  CHECK(rmspe(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4)) == doctest::Approx(std::sqrt(12.5)));
}

TEST_CASE("coefficient RMSE") {
  Eigen::MatrixXd truth(2, 2);
  truth << 1, 2, 3, 4;
  Eigen::MatrixXd est(2, 2);
  est << 3, 4, 1, 2;  // swapped labels
  CHECK(rmse_coeff(truth, est, {0, 1}, {1, 0}) == 0.0);
  Eigen::MatrixXd one(1, 2);
  one << 1, 2;
  // Second point: errors (2, 2).
  CHECK(rmse_coeff(truth, one, {0, 1}, {0, 0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("report JSON round trip") {
  EvalReport r{-1, 1, 0.5, 2.5, 0.25};
  const EvalReport back = EvalReport::from_json(r.to_json());
  CHECK(back.diffk_signed == -1);
  CHECK(back.diffk_abs == 1);
  CHECK(back.ari == 0.5);
  CHECK(back.rmspe == 2.5);
  CHECK(back.rmse_coeff == 0.25);
}
