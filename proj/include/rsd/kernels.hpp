#pragma once

// Data-parallel inner loops of the sampler and the post-processing. Each
// kernel has a straightforward serial reference and an OpenMP version; the
// two must agree (tests compare them) and neither reduces floating-point
// values across threads, so results do not depend on the thread count.

#include <Eigen/Dense>

#include "rsd/model.hpp"

namespace rsd {

/// Stored memberships: row l is the partition of iteration l.
using LabelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace serial {

/// n x K log of q_g N(y_i; x_i b_g, s_g^2 / N_i) sum_h p_gh N2(s_i; mu_gh, tau_g^-2 I).
Eigen::MatrixXd segment_log_weights(const MCMCState& st, const Dataset& data);

/// Spatial part only (log q_g plus the location mixture); the fallback when
/// the regression term underflows for every segment.
Eigen::MatrixXd segment_spatial_log_weights(const MCMCState& st, const Dataset& data);

/// n x M log of p_{g_i h} N2(s_i; mu_{g_i h}, tau_{g_i}^-2 I).
Eigen::MatrixXd component_log_weights(const MCMCState& st, const Dataset& data);

/// d_ij = fraction of stored iterations with i and j in the same segment.
Eigen::MatrixXd coclustering(const LabelMatrix& labels);

/// Binder loss sum_ij (I(g_i^l = g_j^l) - d_ij)^2 for every stored iteration.
Eigen::VectorXd binder_losses(const LabelMatrix& labels, const Eigen::MatrixXd& d);

}  // namespace serial

namespace parallel {

Eigen::MatrixXd segment_log_weights(const MCMCState& st, const Dataset& data);
Eigen::MatrixXd component_log_weights(const MCMCState& st, const Dataset& data);
Eigen::MatrixXd coclustering(const LabelMatrix& labels);
Eigen::VectorXd binder_losses(const LabelMatrix& labels, const Eigen::MatrixXd& d);

}  // namespace parallel

/// exp(w - max w) normalized to sum one. All entries -inf yields an empty
/// vector so the caller can fall back.
Eigen::VectorXd normalize_log_weights(const Eigen::Ref<const Eigen::VectorXd>& log_w);

int omp_threads();

}  // namespace rsd
