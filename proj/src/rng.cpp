#include "rsd/rng.hpp"

#include <cfloat>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "rsd/errors.hpp"

namespace rsd {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be positive and finite, got " << v;
    throw DomainError(os.str());
  }
}

// Upper-tail normal probability Q(x) = P(Z > x).
double upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Inverse of upper_tail on (0, 1).
double upper_tail_inv(double q) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

// Exponential-proposal rejection for Z restricted to (a, b) with a far in the
// upper tail, where Q(a) underflows.
double tail_rejection(double a, double b, RngStream& rng) {
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.uniform()) / alpha;
    if (z >= b) continue;
    const double d = z - alpha;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

// Standard normal restricted to (a, b) with 0 <= a < b.
double std_trunc_upper(double a, double b, RngStream& rng) {
  const double qa = upper_tail(a);
  if (qa < 1e-290) return tail_rejection(a, b, rng);
  const double qb = upper_tail(b);
  const double q = qa - rng.uniform() * (qa - qb);
  return upper_tail_inv(q);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RngStream RngStream::split(std::uint64_t index) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(index + 0x5851F42D4C957F2DULL)));
}

double RngStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double sample_gamma(double shape, double rate, RngStream& rng) {
  require_positive(shape, "gamma shape");
  require_positive(rate, "gamma rate");
  if (shape < 1.0) {
    // Boost to shape + 1, then scale by U^{1/shape} in log space.
    const double g = sample_gamma(shape + 1.0, 1.0, rng);
    const double log_x = std::log(g) + std::log(rng.uniform()) / shape - std::log(rate);
    return std::max(std::exp(log_x), DBL_MIN);
  }
  // Marsaglia-Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double sample_inverse_gamma(double shape, double scale, RngStream& rng) {
  require_positive(shape, "inverse-gamma shape");
  require_positive(scale, "inverse-gamma scale");
  return scale / sample_gamma(shape, 1.0, rng);
}

double sample_beta(double a, double b, RngStream& rng) {
  require_positive(a, "beta a");
  require_positive(b, "beta b");
  const double x = sample_gamma(a, 1.0, rng);
  const double y = sample_gamma(b, 1.0, rng);
  double u = x / (x + y);
  // Keep the draw inside the open unit interval.
  if (u <= 0.0) u = DBL_MIN;
  if (u >= 1.0) u = std::nextafter(1.0, 0.0);
  return u;
}

double sample_exponential(double rate, RngStream& rng) {
  require_positive(rate, "exponential rate");
  return -std::log(rng.uniform()) / rate;
}

std::uint64_t sample_poisson(double mean, RngStream& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("poisson mean must be >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Inversion by sequential search.
    double p = std::exp(-mean);
    double cdf = p;
    const double u = rng.uniform();
    std::uint64_t k = 0;
    while (u > cdf && p > 0.0) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  // PTRS transformed rejection (Hormann 1993).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

std::size_t sample_categorical(std::span<const double> weights, RngStream& rng) {
  if (weights.empty()) throw DomainError("categorical weights are empty");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("categorical weight negative or non-finite");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("categorical weights are all zero");
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] > 0.0) last_positive = j;
    acc += weights[j];
    if (target < acc) return j;
  }
  return last_positive;
}

double sample_trunc_normal(double mean, double sd, TruncBox box, RngStream& rng) {
  require_positive(sd, "truncated normal sd");
  if (!(box.lo < box.hi)) throw DomainError("truncation box needs lo < hi");
  const double a = (box.lo - mean) / sd;
  const double b = (box.hi - mean) / sd;
  double z = 0.0;
  if (a >= 0.0) {
    z = std_trunc_upper(a, b, rng);
  } else if (b <= 0.0) {
    z = -std_trunc_upper(-b, -a, rng);
  } else {
    // Box straddles the mean: both CDF values are moderate.
    const double pa = upper_tail(-a);  // Phi(a)
    const double pb = upper_tail(-b);  // Phi(b)
    const double p = pa + rng.uniform() * (pb - pa);
    z = -upper_tail_inv(p);
  }
  double x = mean + sd * z;
  if (x <= box.lo) x = std::nextafter(box.lo, box.hi);
  if (x >= box.hi) x = std::nextafter(box.hi, box.lo);
  return x;
}

Eigen::Vector2d sample_trunc_bvn(const Eigen::Vector2d& mean, double var, TruncBox box,
                                 RngStream& rng) {
  require_positive(var, "truncated bivariate normal variance");
  const double sd = std::sqrt(var);
  const double x = sample_trunc_normal(mean[0], sd, box, rng);
  const double y = sample_trunc_normal(mean[1], sd, box, rng);
  return {x, y};
}

double sample_inverse_gaussian(double mu, double lam, RngStream& rng) {
  require_positive(mu, "inverse-Gaussian mean");
  require_positive(lam, "inverse-Gaussian shape");
  const double nu = rng.normal();
  const double r = mu * nu * nu / (2.0 * lam);
  // mu (1 + r - sqrt(r^2 + 2r)) written without cancellation.
  const double x = mu / (1.0 + r + std::sqrt(r * (r + 2.0)));
  if (rng.uniform() <= mu / (mu + x)) return x;
  return mu * mu / x;
}

namespace {

[[noreturn]] void report_not_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::ostringstream os;
  os << what << " is not symmetric positive-definite (" << m.rows() << "x" << m.cols()
     << ", eigenvalue range [" << es.eigenvalues().minCoeff() << ", "
     << es.eigenvalues().maxCoeff() << "])";
  throw NumericError(os.str());
}

Eigen::VectorXd standard_normal_vector(Eigen::Index n, RngStream& rng) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

}  // namespace

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance,
                           RngStream& rng) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw DomainError("mvn covariance shape does not match mean");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) report_not_spd(covariance, "covariance");
  return mean + llt.matrixL() * standard_normal_vector(mean.size(), rng);
}

Eigen::VectorXd sample_mvn_canonical(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs,
                                     double scale, RngStream& rng, Eigen::VectorXd* mean_out) {
  require_positive(scale, "mvn scale");
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) report_not_spd(precision, "precision");
  Eigen::VectorXd mean = llt.solve(rhs);
  // precision = L L^T, so L^{-T} z has covariance precision^{-1}.
  Eigen::VectorXd z = standard_normal_vector(rhs.size(), rng);
  Eigen::VectorXd draw = mean + std::sqrt(scale) * llt.matrixU().solve(z);
  if (mean_out != nullptr) *mean_out = std::move(mean);
  return draw;
}

}  // namespace rsd
