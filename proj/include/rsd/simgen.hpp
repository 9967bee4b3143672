#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsd/model.hpp"
#include "rsd/rng.hpp"

namespace rsd::sim {

enum class Level { high, low };

std::string to_string(Level level);
Level level_from_string(const std::string& s);

inline constexpr int kHighDensityN = 1155;
inline constexpr int kLowDensityN = 563;
inline constexpr int kTestSize = 120;

struct SimFactors {
  int K_star = 3;
  Level similarity = Level::high;
  Level density = Level::high;
  int p = 4;
  int active_count = 4;
  double sigma0_sq = 100.0;
  std::uint64_t seed = 1;

  int n() const { return density == Level::high ? kHighDensityN : kLowDensityN; }
  void validate() const;
  /// Short directory-friendly name, e.g. "K3_simhigh_denhigh_p4_a4".
  std::string name() const;
};

/// Active count for a proportion of p (at least one).
int active_count_for(int p, double proportion);

/// Isotropic Gaussian blob; every segment owns two.
struct Blob {
  Eigen::Vector2d center;
  double sd;
  int segment;
};

struct Geometry {
  std::vector<Blob> blobs;

  /// Segment whose two-blob mixture has the highest density at s.
  int true_label(const Eigen::Vector2d& s) const;
};

struct LocationDraw {
  Eigen::MatrixXd S;
  std::vector<int> labels;  // zero-based
  Geometry geometry;
};

struct SimScenario {
  SimFactors factors;
  Dataset train;
  Dataset test;
  std::vector<int> true_labels_train;
  std::vector<int> true_labels_test;
  Eigen::MatrixXd true_beta;  // K* x p
  Geometry geometry;
};

/// Per segment, a uniformly chosen subset of active_count coefficients gets
/// magnitude U[2, 15] with a random sign; the rest are exactly zero.
Eigen::MatrixXd generate_coefficients(int K_star, int p, int active_count, RngStream& rng);

/// Two blobs per segment. High similarity keeps blobs of different segments at
/// least 0.35 apart; low similarity allows 0.12 and spreads each segment's
/// blobs apart so segments interleave.
LocationDraw generate_locations(const SimFactors& factors, RngStream& rng);

/// Jittered 12 x 10 grid over the unit square.
Eigen::MatrixXd test_grid(RngStream& rng);

SimScenario generate_scenario(const SimFactors& factors);

/// Full 2^5 cross of the factor levels, seeds derived from master_seed.
std::vector<SimFactors> enumerate_factor_grid(std::uint64_t master_seed);

/// High-dimensional preset: K*=6, low similarity, low density, 10 active.
SimFactors high_dim_factors(int p, std::uint64_t seed);

}  // namespace rsd::sim
