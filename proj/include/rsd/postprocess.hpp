#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rsd/gibbs.hpp"
#include "rsd/model.hpp"

namespace rsd {

/// Final segmentation. Labels are zero-based and compact: every value in
/// [0, K_hat) occurs.
struct SegmentationResult {
  std::vector<int> labels;
  int K_hat = 0;
  Eigen::MatrixXd beta_hat;       // K_hat x p
  Eigen::VectorXd sigma_hat_sq;   // K_hat
  Eigen::MatrixXd lower;          // K_hat x p, 95% bounds (ridge)
  Eigen::MatrixXd upper;
  bool has_intervals = false;
  std::vector<bool> ridge_fallback;  // lasso segments too small for CV
  Eigen::Index selected_iter = 0;    // index into the stored iterations
};

Eigen::MatrixXd coclustering_matrix(const ChainTrace& trace);

/// Stored iteration minimizing sum_ij (I(g_i^l = g_j^l) - d_ij)^2; ties go
/// to the smallest index.
Eigen::Index dahl_select(const ChainTrace& trace, const Eigen::MatrixXd& d);
Eigen::Index dahl_select(const LabelMatrix& labels, const Eigen::MatrixXd& d);

struct Relabeled {
  std::vector<int> labels;
  int K_hat = 0;
};

/// Renumber by order of first appearance.
Relabeled relabel(const std::vector<int>& raw);

struct RidgeEstimate {
  Eigen::MatrixXd beta_hat;
  Eigen::VectorXd sigma_hat_sq;
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
};

inline constexpr double kZ975 = 1.959963984540054;

/// Posterior mean (X'WX + D^-1)^-1 X'WY with D = I / c per segment, the
/// conditional posterior mean of sigma^2 given that estimate, and marginal
/// 95% intervals from sigma^2 (X'WX + D^-1)^-1.
RidgeEstimate reestimate_ridge(const Dataset& data, const std::vector<int>& labels, int K_hat,
                               const HyperParams& hp);

struct LassoEstimate {
  Eigen::MatrixXd beta_hat;
  std::vector<bool> ridge_fallback;
  std::vector<double> penalty;
};

/// Weighted lasso per segment with the penalty chosen by k-fold CV. Folds
/// shrink to the segment size (minimum 2); smaller segments fall back to the
/// ridge estimate.
LassoEstimate reestimate_lasso(const Dataset& data, const std::vector<int>& labels, int K_hat,
                               const HyperParams& hp, int cv_folds, RngStream& rng,
                               int grid_size = 100);

/// Dahl selection, relabeling and re-estimation in one call.
SegmentationResult postprocess(const ChainTrace& trace, const Dataset& data,
                               const HyperParams& hp, RngStream& rng, int cv_folds = 5);

struct Prediction {
  std::vector<int> labels;
  Eigen::VectorXd y_hat;
};

/// Each point takes the label of its nearest training location (ties to the
/// smallest index) and predicts x . beta_hat[label].
Prediction predict(const SegmentationResult& result, const Eigen::MatrixXd& train_S,
                   const Eigen::MatrixXd& X, const Eigen::MatrixXd& S);

/// Index of the nearest row of `from` for each row of `to`.
std::vector<Eigen::Index> nearest_rows(const Eigen::MatrixXd& from, const Eigen::MatrixXd& to);

}  // namespace rsd
