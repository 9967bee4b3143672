#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace rsd {

/// Seeded random stream. One stream belongs to one chain at a time; use
/// split() to derive independent streams for parallel work.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Child stream whose seed is derived from (seed, index) through a
  /// splitmix64 mix, so distinct indices give distinct engines.
  RngStream split(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

struct TruncBox {
  double lo = -1.0;
  double hi = 1.0;
};

// Gamma uses the shape-rate convention everywhere in this project.
double sample_gamma(double shape, double rate, RngStream& rng);
double sample_inverse_gamma(double shape, double scale, RngStream& rng);
double sample_beta(double a, double b, RngStream& rng);
double sample_exponential(double rate, RngStream& rng);
std::uint64_t sample_poisson(double mean, RngStream& rng);

/// Index j with probability w_j / sum(w). Weights need not be normalized.
std::size_t sample_categorical(std::span<const double> weights, RngStream& rng);

/// Normal(mean, sd^2) restricted to (box.lo, box.hi), by inverse CDF using
/// complementary error functions so boxes deep in a tail stay accurate.
double sample_trunc_normal(double mean, double sd, TruncBox box, RngStream& rng);

/// Two independent truncated coordinates sharing a variance.
Eigen::Vector2d sample_trunc_bvn(const Eigen::Vector2d& mean, double var, TruncBox box,
                                 RngStream& rng);

/// Inverse Gaussian with mean mu and shape lam (variance mu^3 / lam),
/// Michael-Schucany-Haas transformation.
double sample_inverse_gaussian(double mu, double lam, RngStream& rng);

/// mean + L z with covariance = L L^T. Throws NumericError if the Cholesky
/// factorization fails.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance,
                           RngStream& rng);

/// Draw from N(precision^{-1} rhs, scale * precision^{-1}) using one
/// factorization of the precision matrix. Returns the draw; the conditional
/// mean is written to *mean_out when non-null.
Eigen::VectorXd sample_mvn_canonical(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs,
                                     double scale, RngStream& rng,
                                     Eigen::VectorXd* mean_out = nullptr);

}  // namespace rsd
