#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsd/rng.hpp"

namespace rsd {

/// Point-referenced observations. Row i holds the mean response y_i of
/// counts[i] ratings, its features X.row(i) and its location S.row(i).
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;       // n x p, intercept column first when has_intercept
  Eigen::MatrixXd S;       // n x 2, rescaled to the unit square
  Eigen::VectorXd counts;  // N_i >= 1
  bool has_intercept = false;
  std::vector<std::string> ids;
  std::vector<std::string> feature_names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }

  /// Throws ValidationError on shape mismatch, non-finite entries, counts
  /// below one or locations outside [0,1]^2.
  void validate() const;

  /// Rows in `rows`, in order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

enum class PriorKind { ridge, lasso };

std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

struct GammaPrior {
  double shape;
  double rate;
};

struct HyperParams {
  int K = 20;
  int M = 10;
  // Precision of the truncated normal prior on component means.
  double tau0_sq = 1e-3;
  double a_tau = 0.1;
  double b_tau = 0.1;
  double a_sigma = 0.1;
  double b_sigma = 0.1;
  double c = 0.01;  // ridge: psi = 1 / c
  double lambda = 0.03;
  GammaPrior bU_prior{0.1, 0.1};
  GammaPrior bV_prior{1.0, 4.0};
  PriorKind prior_kind = PriorKind::ridge;
  // When false, b_U and b_V stay at their initial values.
  bool update_dp_rates = true;

  double ridge_psi() const { return 1.0 / c; }
  void validate() const;
};

/// One configuration of every latent variable. Indices are zero-based:
/// g[i] in [0, K), h[i] in [0, M).
struct MCMCState {
  std::vector<int> g;
  std::vector<int> h;
  Eigen::VectorXd U;       // K segment sticks, U[K-1] == 1
  Eigen::VectorXd q;       // K segment probabilities
  Eigen::MatrixXd V;       // K x M component sticks, V(g, M-1) == 1
  Eigen::MatrixXd P;       // K x M component probabilities
  Eigen::MatrixXd mu_x;    // K x M component mean, first coordinate
  Eigen::MatrixXd mu_y;    // K x M component mean, second coordinate
  Eigen::VectorXd tau_sq;  // K spatial precisions
  Eigen::MatrixXd beta;    // K x p
  Eigen::VectorXd sigma_sq;
  Eigen::MatrixXd psi;     // K x p prior variance scales
  double bU = 1.0;
  double bV = 0.25;

  int K() const { return static_cast<int>(q.size()); }
  int M() const { return static_cast<int>(P.cols()); }
  Eigen::Vector2d mu(int seg, int comp) const { return {mu_x(seg, comp), mu_y(seg, comp)}; }

  /// Empty string when every invariant holds, otherwise the first violation.
  std::string check_invariants(std::size_t n) const;
};

/// Starting memberships: uniform over all K segments, or k-means clusters of
/// the locations with K centers. automatic picks uniform when n >= 2 p K
/// (every random segment can pin down its coefficients) and spatial otherwise.
enum class InitKind { uniform, spatial, automatic };

std::string to_string(InitKind kind);
InitKind init_kind_from_string(const std::string& s);
InitKind resolve_init(InitKind kind, Eigen::Index n, Eigen::Index p, int K);

struct ChainConfig {
  int n_iters = 10000;
  int burn_in = 5000;
  int thin = 10;
  std::uint64_t seed = 1;
  InitKind init = InitKind::automatic;
  int chains = 1;

  /// Stored draws per chain.
  int stored_count() const { return (n_iters - burn_in) / thin; }
  void validate() const;

  static ChainConfig desk() { return {4000, 2000, 5, 1, InitKind::automatic, 5}; }
};

/// q_1 = U_1, q_g = U_g prod_{k<g} (1 - U_k). The final stick is treated as
/// one so the result sums to one.
Eigen::VectorXd stick_break(const Eigen::VectorXd& sticks);

/// Starting state: memberships per `kind`, sticks and component means from
/// their priors, pooled weighted least squares coefficients with small noise.
MCMCState init_state(const Dataset& data, const HyperParams& hp, RngStream& rng,
                     InitKind kind = InitKind::uniform);

/// Lloyd's k-means on the rows of S with k-means++ seeding; returns the
/// cluster index per row. Clusters may end up empty.
std::vector<int> kmeans_labels(const Eigen::MatrixXd& S, int k, RngStream& rng,
                               int max_rounds = 100);

}  // namespace rsd
