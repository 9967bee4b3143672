#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "rsd/kernels.hpp"
#include "rsd/model.hpp"
#include "rsd/rng.hpp"

namespace rsd {

/// Counters for numerical fallbacks taken during a chain. None is fatal.
struct Diagnostics {
  long membership_fallbacks = 0;  // regression term underflowed for all segments
  long zero_beta_clamps = 0;      // lasso: |beta| raised to 1e-10 before the IG draw
  long stick_clamps = 0;          // stick numerically at 1, pulled to 1 - 1e-12
};

/// Membership tallies for the current g and h.
struct Occupancy {
  Eigen::VectorXi n_seg;   // K
  Eigen::MatrixXi n_comp;  // K x M
  Eigen::MatrixXd sum_x;   // K x M sums of member locations
  Eigen::MatrixXd sum_y;
  std::vector<std::vector<Eigen::Index>> members;  // per segment, ascending

  Occupancy(const MCMCState& st, const Dataset& data);
};

// Full-conditional parameters. These are what the update steps sample from
// and are exposed so tests can check them against direct evaluation.

struct TruncNormal2Params {
  Eigen::Vector2d mean;
  double var;  // per coordinate, before truncation to (-1, 1)^2
};

struct GammaParams {
  double shape;
  double rate;
};

struct InvGammaParams {
  double shape;
  double scale;
};

/// N(precision^{-1} rhs, scale * precision^{-1}).
struct GaussianCanonical {
  Eigen::MatrixXd precision;
  Eigen::VectorXd rhs;
  double scale;
  Eigen::VectorXd mean() const { return precision.llt().solve(rhs); }
};

TruncNormal2Params component_mean_conditional(const MCMCState& st, const Occupancy& occ,
                                              const HyperParams& hp, int seg, int comp);
GammaParams spatial_precision_conditional(const MCMCState& st, const Dataset& data,
                                          const Occupancy& occ, const HyperParams& hp, int seg);
GaussianCanonical coefficient_conditional(const MCMCState& st, const Dataset& data,
                                          const Occupancy& occ, int seg);
InvGammaParams error_variance_conditional(const MCMCState& st, const Dataset& data,
                                          const Occupancy& occ, const HyperParams& hp, int seg);
/// Mean of the inverse-Gaussian conditional of 1/psi_gj, sqrt(lambda^2 sigma^2 / beta^2).
double psi_inverse_mean(const MCMCState& st, const HyperParams& hp, int seg, Eigen::Index j,
                        Diagnostics* diag = nullptr);

/// Gamma conditional of a stick-breaking rate b given its free sticks u_k
/// (each Beta(1, b) a priori): shape + count, rate - sum log(1 - u_k).
GammaParams dp_rate_conditional(const Eigen::Ref<const Eigen::MatrixXd>& sticks,
                                const GammaPrior& prior);

/// True when column j carries the unpenalized intercept.
bool is_intercept(const Dataset& data, Eigen::Index j);

// Sweep steps, in the order run_chain applies them.
void update_segment_memberships(MCMCState& st, const Dataset& data, RngStream& rng,
                                Diagnostics* diag = nullptr);
void update_component_memberships(MCMCState& st, const Dataset& data, RngStream& rng);
void update_component_means(MCMCState& st, const Dataset& data, const HyperParams& hp,
                            RngStream& rng);
void update_spatial_precisions(MCMCState& st, const Dataset& data, const HyperParams& hp,
                               RngStream& rng);
void update_segment_sticks(MCMCState& st, const HyperParams& hp, RngStream& rng,
                           Diagnostics* diag = nullptr);
void update_component_sticks(MCMCState& st, const HyperParams& hp, RngStream& rng,
                             Diagnostics* diag = nullptr);
/// Non-empty segments draw beta from its Gaussian conditional. Empty segments
/// draw (psi, sigma^2, beta) jointly from the prior.
void update_coefficients(MCMCState& st, const Dataset& data, const HyperParams& hp,
                         RngStream& rng);
/// Non-empty segments only; empty ones were refreshed by update_coefficients.
void update_error_variances(MCMCState& st, const Dataset& data, const HyperParams& hp,
                            RngStream& rng);
/// Ridge: psi = 1/c everywhere. Lasso: 1/psi_gj ~ InvGaussian(mu', lambda^2)
/// for non-empty segments, intercept pinned at 1/c.
void update_psi(MCMCState& st, const Dataset& data, const HyperParams& hp, RngStream& rng,
                Diagnostics* diag = nullptr);

/// Every step after the segment memberships, in sweep order.
void update_parameters(MCMCState& st, const Dataset& data, const HyperParams& hp, RngStream& rng,
                       Diagnostics* diag = nullptr);

/// One full Gibbs sweep.
void sweep(MCMCState& st, const Dataset& data, const HyperParams& hp, RngStream& rng,
           Diagnostics* diag = nullptr);

int count_nonempty(const std::vector<int>& g, int K);

/// Stored draws of one or more chains, chain by chain.
struct ChainTrace {
  LabelMatrix stored_g;  // L x n, zero-based segment ids
  std::vector<Eigen::MatrixXd> stored_beta;
  std::vector<Eigen::VectorXd> stored_sigma_sq;
  std::vector<int> stored_iters;  // iteration within its chain
  std::vector<int> stored_chain;
  std::vector<std::vector<int>> k_nonempty;  // per chain, every iteration
  Diagnostics diagnostics;

  Eigen::Index L() const { return stored_g.rows(); }
  Eigen::Index n() const { return stored_g.cols(); }
  int stored_k_nonempty(Eigen::Index l, int K) const;
};

/// Called after every sweep. With several chains, calls are serialized but
/// interleave across chains.
using IterationCallback = std::function<void(int chain, int iter, const MCMCState& state)>;

/// Runs cfg.chains independent chains in parallel and pools their stored
/// draws. Chain 0 uses RngStream(cfg.seed), chain c > 0 the stream
/// RngStream(cfg.seed).split(100 + c). Each chain starts by drawing every
/// parameter block given the initial memberships, then runs full sweeps.
ChainTrace run_chain(const Dataset& data, const HyperParams& hp, const ChainConfig& cfg,
                     const IterationCallback& on_iteration = {});

/// Concatenates traces in order, summing diagnostics.
ChainTrace pool_traces(const std::vector<ChainTrace>& parts);

}  // namespace rsd
