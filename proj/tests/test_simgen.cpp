#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rsd/errors.hpp"
#include "rsd/postprocess.hpp"
#include "rsd/simgen.hpp"
#include "test_util.hpp"

using namespace rsd;
using namespace rsd::sim;

namespace {

double nn_agreement(const LocationDraw& loc) {
  const Eigen::Index n = loc.S.rows();
  int agree = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = 1e300;
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (loc.S.row(i) - loc.S.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    agree += loc.labels[i] == loc.labels[arg];
  }
  return agree / static_cast<double>(n);
}

}  // namespace

TEST_CASE("coefficients") {
  RngStream r(1);
  const Eigen::MatrixXd full = generate_coefficients(3, 4, 4, r);
  CHECK((full.array() != 0.0).all());
  const Eigen::MatrixXd half = generate_coefficients(6, 8, 4, r);
  for (Eigen::Index s = 0; s < 6; ++s) CHECK((half.row(s).array() == 0.0).count() == 4);
  int positive = 0, total = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::MatrixXd b = generate_coefficients(3, 8, 5, r);
    for (double v : b.reshaped()) {
      if (v == 0.0) continue;
      CHECK(std::abs(v) >= 2.0);
      CHECK(std::abs(v) <= 15.0);
      positive += v > 0.0;
      ++total;
    }
  }
  CHECK(std::abs(positive / static_cast<double>(total) - 0.5) < 0.03);
  CHECK_THROWS(generate_coefficients(3, 4, 0, r));
  CHECK_THROWS(generate_coefficients(3, 4, 5, r));
}

TEST_CASE("locations") {
  for (Level sim : {Level::high, Level::low}) {
    SimFactors f{6, sim, Level::low, 4, 4, 100.0, 3};
    RngStream r(f.seed);
    const LocationDraw loc = generate_locations(f, r);
    CHECK(loc.S.rows() == f.n());
    CHECK((loc.S.array() >= 0.0).all());
    CHECK((loc.S.array() <= 1.0).all());
    std::vector<int> counts(6, 0);
    for (int g : loc.labels) ++counts[g];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*hi - *lo <= 1);
    CHECK(loc.geometry.blobs.size() == 12);
  }
}

TEST_CASE("similarity levels separate by nearest-neighbor agreement") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimFactors hi{3, Level::high, Level::high, 4, 4, 100.0, seed};
    SimFactors lo = hi;
    lo.similarity = Level::low;
    RngStream rh(seed), rl(seed);
    const double a = nn_agreement(generate_locations(hi, rh));
    const double b = nn_agreement(generate_locations(lo, rl));
    CHECK(a > 0.9);
    CHECK(b < a);
  }
}

TEST_CASE("scenario shapes and labels") {
  const SimScenario sc = generate_scenario({3, Level::high, Level::high, 4, 4, 100.0, 5});
  CHECK(sc.train.n() == 1155);
  CHECK(sc.test.n() == 120);
  CHECK(sc.train.p() == 4);
  CHECK(sc.true_beta.rows() == 3);
  for (int g : sc.true_labels_train) CHECK((g >= 0 && g < 3));
  for (int g : sc.true_labels_test) CHECK((g >= 0 && g < 3));
  for (double n : sc.train.counts) CHECK(n >= 15.0);
  // Test truth is the label of the nearest training point.
  const auto nn = nearest_rows(sc.train.S, sc.test.S);
  for (std::size_t t = 0; t < nn.size(); ++t) {
    CHECK(sc.true_labels_test[t] == sc.true_labels_train[nn[t]]);
  }
  CHECK(sc.test.S.rows() == 120);
  CHECK((sc.test.S.array() >= 0.0).all());
  CHECK((sc.test.S.array() <= 1.0).all());
}

TEST_CASE("noiseless responses") {
  const SimScenario sc = generate_scenario({3, Level::low, Level::low, 8, 4, 0.0, 6});
  for (Eigen::Index i = 0; i < sc.test.n(); ++i) {
    CHECK(sc.test.y[i] == doctest::Approx(sc.test.X.row(i).dot(sc.true_beta.row(sc.true_labels_test[i]))));
  }
}

TEST_CASE("response variance and feature independence") {
  const SimScenario sc = generate_scenario({3, Level::high, Level::high, 4, 4, 100.0, 7});
  const Dataset& d = sc.train;
  std::vector<double> z;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double mean = d.X.row(i).dot(sc.true_beta.row(sc.true_labels_train[i]));
    z.push_back((d.y[i] - mean) * std::sqrt(d.counts[i]) / 10.0);
  }
  CHECK(test::moments(z).var == doctest::Approx(1.0).epsilon(0.05 + 0.1));
  for (int g = 0; g < 3; ++g) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      if (sc.true_labels_train[i] == g) rows.push_back(i);
    }
    const Eigen::VectorXd means = d.X(rows, Eigen::all).colwise().mean();
    CHECK(means.cwiseAbs().maxCoeff() < 3.0 / std::sqrt(static_cast<double>(rows.size())) + 0.05);

    // WLS within the segment recovers beta* within 3 standard errors.
    const Eigen::MatrixXd Xg = d.X(rows, Eigen::all);
    const Eigen::VectorXd w = d.counts(rows);
    const Eigen::MatrixXd A = Xg.transpose() * w.asDiagonal() * Xg;
    const Eigen::VectorXd b = A.ldlt().solve(Xg.transpose() * w.asDiagonal() * d.y(rows));
    const Eigen::VectorXd se = (100.0 * A.inverse().diagonal()).cwiseSqrt();
    CHECK(((b - sc.true_beta.row(g).transpose()).cwiseAbs().array() < 3.0 * se.array() + 1e-9).all());
  }
}

TEST_CASE("factor grid") {
  const auto grid = enumerate_factor_grid(42);
  REQUIRE(grid.size() == 32);
  int k3 = 0, simh = 0, denh = 0, p4 = 0, full = 0;
  std::set<std::uint64_t> seeds;
  for (const SimFactors& f : grid) {
    k3 += f.K_star == 3;
    simh += f.similarity == Level::high;
    denh += f.density == Level::high;
    p4 += f.p == 4;
    full += f.active_count == f.p;
    seeds.insert(f.seed);
  }
  CHECK(k3 == 16);
  CHECK(simh == 16);
  CHECK(denh == 16);
  CHECK(p4 == 16);
  CHECK(full == 16);
  CHECK(seeds.size() == 32);

  const auto again = enumerate_factor_grid(42);
  for (std::size_t c = 0; c < 32; ++c) CHECK(again[c].seed == grid[c].seed);
  const SimScenario a = generate_scenario(grid[7]);
  const SimScenario b = generate_scenario(again[7]);
  CHECK(a.train.y == b.train.y);
  CHECK(a.train.S == b.train.S);
}

TEST_CASE("high-dimensional preset") {
  const SimFactors f = high_dim_factors(30, 9);
  CHECK(f.K_star == 6);
  CHECK(f.similarity == Level::low);
  CHECK(f.density == Level::low);
  CHECK(f.active_count == 10);
  const SimScenario sc = generate_scenario(f);
  for (Eigen::Index s = 0; s < 6; ++s) CHECK((sc.true_beta.row(s).array() != 0.0).count() == 10);
  CHECK(level_from_string(to_string(Level::low)) == Level::low);
}
