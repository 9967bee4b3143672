#include "rsd/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <sstream>

#include "rsd/errors.hpp"
#include "rsd/postprocess.hpp"

namespace rsd::sim {

namespace {

struct LevelGeometry {
  double blob_sd;
  double cross_min;     // minimum distance between blobs of different segments
  double pair_min;      // distance range between a segment's own two blobs
  double pair_max;
};

LevelGeometry geometry_for(Level similarity) {
  if (similarity == Level::high) return {0.05, 0.35, 0.10, 0.20};
  return {0.05, 0.12, 0.35, 1.5};
}

constexpr double kCenterLo = 0.05;
constexpr double kCenterHi = 0.95;
constexpr int kMaxAttempts = 10000;
constexpr int kPlacementBudget = 2000000;
// Low similarity: every blob has a blob of another segment this close.
constexpr double kInterleave = 0.2;

bool far_from_others(const std::vector<Blob>& blobs, const Eigen::Vector2d& c, int segment,
                     double cross_min) {
  for (const Blob& b : blobs) {
    if (b.segment != segment && (b.center - c).norm() < cross_min) return false;
  }
  return true;
}

bool interleaved(const std::vector<Blob>& blobs) {
  for (const Blob& a : blobs) {
    bool near = false;
    for (const Blob& b : blobs) {
      if (b.segment != a.segment && (b.center - a.center).norm() <= kInterleave) near = true;
    }
    if (!near) return false;
  }
  return true;
}

Eigen::Vector2d uniform_center(RngStream& rng) {
  const double w = kCenterHi - kCenterLo;
  return {kCenterLo + w * rng.uniform(), kCenterLo + w * rng.uniform()};
}

bool inside_centers(const Eigen::Vector2d& c) {
  return c.x() >= kCenterLo && c.x() <= kCenterHi && c.y() >= kCenterLo && c.y() <= kCenterHi;
}

Geometry place_blobs(int K, Level similarity, RngStream& rng) {
  const LevelGeometry lg = geometry_for(similarity);
  int attempts = 0;
  while (attempts < kPlacementBudget) {
    std::vector<Blob> blobs;
    bool ok = true;
    for (int s = 0; s < K && ok; ++s) {
      ok = false;
      for (int tries = 0; tries < 200 && !ok; ++tries, ++attempts) {
        const Eigen::Vector2d a = uniform_center(rng);
        if (!far_from_others(blobs, a, s, lg.cross_min)) continue;
        Eigen::Vector2d b;
        if (similarity == Level::high) {
          const double angle = 2.0 * 3.141592653589793 * rng.uniform();
          const double dist = lg.pair_min + (lg.pair_max - lg.pair_min) * rng.uniform();
          b = a + dist * Eigen::Vector2d(std::cos(angle), std::sin(angle));
        } else {
          b = uniform_center(rng);
        }
        const double own = (b - a).norm();
        if (!inside_centers(b) || own < lg.pair_min || own > lg.pair_max) continue;
        if (!far_from_others(blobs, b, s, lg.cross_min)) continue;
        blobs.push_back({a, lg.blob_sd, s});
        blobs.push_back({b, lg.blob_sd, s});
        ok = true;
      }
    }
    if (ok && K > 1 && similarity == Level::low && !interleaved(blobs)) ok = false;
    if (ok) return {blobs};
  }
  throw NumericError("could not place segment blobs within the attempt budget");
}

Eigen::Vector2d draw_in_unit_square(const Blob& blob, RngStream& rng) {
  for (int k = 0; k < kMaxAttempts; ++k) {
    const Eigen::Vector2d s = blob.center + blob.sd * Eigen::Vector2d(rng.normal(), rng.normal());
    if (s.x() >= 0.0 && s.x() <= 1.0 && s.y() >= 0.0 && s.y() <= 1.0) return s;
  }
  throw NumericError("location rejection sampling exceeded its cap");
}

std::vector<int> even_split(int total, int parts) {
  std::vector<int> out(static_cast<std::size_t>(parts), total / parts);
  for (int k = 0; k < total % parts; ++k) ++out[k];
  return out;
}

Dataset make_dataset(const Eigen::MatrixXd& S, const std::vector<int>& labels,
                     const Eigen::MatrixXd& beta, double sigma0_sq, const std::string& prefix,
                     RngStream& feat_rng, RngStream& count_rng, RngStream& noise_rng) {
  const Eigen::Index n = S.rows();
  const Eigen::Index p = beta.cols();
  Dataset d;
  d.S = S;
  d.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.X(i, j) = feat_rng.normal();
  }
  d.counts.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.counts[i] = 15.0 + static_cast<double>(sample_poisson(20.0, count_rng));
  }
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = d.X.row(i).dot(beta.row(labels[i]));
    const double noise = std::sqrt(sigma0_sq / d.counts[i]) * noise_rng.normal();
    d.y[i] = mean + noise;
  }
  d.has_intercept = false;
  for (Eigen::Index j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < n; ++i) d.ids.push_back(prefix + std::to_string(i + 1));
  return d;
}

}  // namespace

std::string to_string(Level level) { return level == Level::high ? "high" : "low"; }

Level level_from_string(const std::string& s) {
  if (s == "high") return Level::high;
  if (s == "low") return Level::low;
  throw ValidationError("factor level must be 'high' or 'low', got '" + s + "'");
}

void SimFactors::validate() const {
  if (K_star < 1) throw ValidationError("K* must be at least 1");
  if (p < 1) throw ValidationError("p must be at least 1");
  if (active_count < 1 || active_count > p) throw ValidationError("active count must lie in [1, p]");
  if (!(sigma0_sq >= 0.0)) throw ValidationError("sigma0^2 must be non-negative");
}

std::string SimFactors::name() const {
  std::ostringstream os;
  os << "K" << K_star << "_sim" << to_string(similarity) << "_den" << to_string(density) << "_p"
     << p << "_a" << active_count;
  return os.str();
}

int active_count_for(int p, double proportion) {
  return std::max(1, static_cast<int>(std::lround(p * proportion)));
}

int Geometry::true_label(const Eigen::Vector2d& s) const {
  int best = 0;
  double best_density = -1.0;
  int segments = 0;
  for (const Blob& b : blobs) segments = std::max(segments, b.segment + 1);
  for (int seg = 0; seg < segments; ++seg) {
    double dens = 0.0;
    for (const Blob& b : blobs) {
      if (b.segment != seg) continue;
      const double z2 = (s - b.center).squaredNorm() / (b.sd * b.sd);
      dens += std::exp(-0.5 * z2) / (b.sd * b.sd);
    }
    if (dens > best_density) {
      best_density = dens;
      best = seg;
    }
  }
  if (best_density <= 0.0) {
    // Far from everything: nearest blob center decides.
    double nearest = std::numeric_limits<double>::infinity();
    for (const Blob& b : blobs) {
      const double dist = (s - b.center).norm() / b.sd;
      if (dist < nearest) {
        nearest = dist;
        best = b.segment;
      }
    }
  }
  return best;
}

Eigen::MatrixXd generate_coefficients(int K_star, int p, int active_count, RngStream& rng) {
  if (active_count < 1 || active_count > p) throw DomainError("active count must lie in [1, p]");
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(K_star, p);
  std::vector<int> cols(static_cast<std::size_t>(p));
  for (int s = 0; s < K_star; ++s) {
    std::iota(cols.begin(), cols.end(), 0);
    // Partial Fisher-Yates: the first active_count entries form the subset.
    for (int k = 0; k < active_count; ++k) {
      const auto r = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(p - k));
      std::swap(cols[k], cols[k + r]);
    }
    for (int k = 0; k < active_count; ++k) {
      const double magnitude = 2.0 + 13.0 * rng.uniform();
      const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
      beta(s, cols[k]) = sign * magnitude;
    }
  }
  return beta;
}

LocationDraw generate_locations(const SimFactors& factors, RngStream& rng) {
  factors.validate();
  LocationDraw out;
  out.geometry = place_blobs(factors.K_star, factors.similarity, rng);
  const int n = factors.n();
  out.S.resize(n, 2);
  out.labels.reserve(static_cast<std::size_t>(n));
  const std::vector<int> per_segment = even_split(n, factors.K_star);
  Eigen::Index row = 0;
  for (int s = 0; s < factors.K_star; ++s) {
    const std::vector<int> per_blob = even_split(per_segment[s], 2);
    for (int b = 0; b < 2; ++b) {
      const Blob& blob = out.geometry.blobs[2 * s + b];
      for (int k = 0; k < per_blob[b]; ++k) {
        out.S.row(row++) = draw_in_unit_square(blob, rng).transpose();
        out.labels.push_back(s);
      }
    }
  }
  // Shuffle rows so file order carries no label information.
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  Eigen::MatrixXd S(n, 2);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    S.row(i) = out.S.row(perm[i]);
    labels[i] = out.labels[perm[i]];
  }
  out.S = std::move(S);
  out.labels = std::move(labels);
  return out;
}

Eigen::MatrixXd test_grid(RngStream& rng) {
  constexpr int cols = 12;
  constexpr int rows = 10;
  Eigen::MatrixXd S(cols * rows, 2);
  Eigen::Index k = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double jx = 0.5 * (rng.uniform() - 0.5);
      const double jy = 0.5 * (rng.uniform() - 0.5);
      S(k, 0) = (c + 0.5 + jx) / cols;
      S(k, 1) = (r + 0.5 + jy) / rows;
      ++k;
    }
  }
  return S;
}

SimScenario generate_scenario(const SimFactors& factors) {
  factors.validate();
  const RngStream root(factors.seed);
  RngStream coef_rng = root.split(1);
  RngStream loc_rng = root.split(2);
  RngStream feat_rng = root.split(3);
  RngStream count_rng = root.split(4);
  RngStream noise_rng = root.split(5);
  RngStream test_rng = root.split(6);

  SimScenario sc;
  sc.factors = factors;
  sc.true_beta = generate_coefficients(factors.K_star, factors.p, factors.active_count, coef_rng);
  LocationDraw loc = generate_locations(factors, loc_rng);
  sc.geometry = loc.geometry;
  sc.true_labels_train = loc.labels;
  sc.train = make_dataset(loc.S, loc.labels, sc.true_beta, factors.sigma0_sq, "train_", feat_rng,
                          count_rng, noise_rng);

  const Eigen::MatrixXd test_S = test_grid(test_rng);
  // A test point belongs to the segment of its nearest training location.
  sc.true_labels_test.resize(static_cast<std::size_t>(test_S.rows()));
  const std::vector<Eigen::Index> nn = nearest_rows(loc.S, test_S);
  for (Eigen::Index t = 0; t < test_S.rows(); ++t) {
    sc.true_labels_test[t] = loc.labels[nn[t]];
  }
  sc.test = make_dataset(test_S, sc.true_labels_test, sc.true_beta, factors.sigma0_sq, "test_",
                         feat_rng, count_rng, noise_rng);
  return sc;
}

std::vector<SimFactors> enumerate_factor_grid(std::uint64_t master_seed) {
  const RngStream master(master_seed);
  std::vector<SimFactors> grid;
  std::uint64_t cell = 0;
  for (int K : {3, 6}) {
    for (Level sim : {Level::high, Level::low}) {
      for (Level den : {Level::high, Level::low}) {
        for (int p : {4, 8}) {
          for (double prop : {1.0, 0.5}) {
            SimFactors f;
            f.K_star = K;
            f.similarity = sim;
            f.density = den;
            f.p = p;
            f.active_count = active_count_for(p, prop);
            f.seed = master.split(cell++).seed();
            grid.push_back(f);
          }
        }
      }
    }
  }
  return grid;
}

SimFactors high_dim_factors(int p, std::uint64_t seed) {
  SimFactors f;
  f.K_star = 6;
  f.similarity = Level::low;
  f.density = Level::low;
  f.p = p;
  f.active_count = std::min(10, p);
  f.seed = seed;
  return f;
}

}  // namespace rsd::sim
