#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rsd/rng.hpp"

namespace rsd::lasso {

/// Minimize (1 / 2 sum w) sum_i w_i (y_i - x_i b)^2 + penalty sum_{j penalized} s_j |b_j|
/// where s_j is the weighted scale of column j when standardize is set (so
/// the penalty applies to standardized coefficients) and 1 otherwise.
/// An unpenalized constant column acts as the intercept: the other columns
/// are then centered by their weighted means.
struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  double penalty = 0.0;
  std::vector<bool> penalize;  // empty means every column is penalized
  bool standardize = true;

  void validate() const;
};

struct Fit {
  Eigen::VectorXd beta;
  bool converged = false;
  int sweeps = 0;
  std::vector<double> objective;  // per sweep, filled when requested
};

struct FitOptions {
  double tol = 1e-10;
  int max_sweeps = 100000;
  bool record_objective = false;
  const Eigen::VectorXd* warm_start = nullptr;
};

Fit fit(const Problem& problem, const FitOptions& opts = {});

/// Objective value at beta in original coordinates.
double objective(const Problem& problem, const Eigen::VectorXd& beta);

/// Largest violation of the stationarity conditions at beta:
/// |grad_j| <= penalty s_j for zero coefficients, grad_j = penalty s_j sign(b_j)
/// otherwise, grad_j = 0 for unpenalized coefficients.
double kkt_residual(const Problem& problem, const Eigen::VectorXd& beta);

/// Smallest penalty at which every penalized coefficient is zero.
double lambda_max(const Problem& problem);

/// soft_threshold(z, t) = sign(z) max(|z| - t, 0).
double soft_threshold(double z, double t);

struct CvResult {
  std::vector<double> grid;  // descending
  std::vector<double> cv_error;
  std::size_t best_index = 0;
  double best_penalty = 0.0;
};

/// k-fold cross-validation over a log-spaced grid from lambda_max down to
/// lambda_max * min_ratio. Fold assignment is a seeded permutation; the
/// error is the weighted mean squared error over all held-out rows.
CvResult cv_select(const Problem& base, int folds, int grid_size, RngStream& rng,
                   double min_ratio = 1e-4);

/// Same as cv_select but over a caller-supplied descending penalty grid.
CvResult cv_select_grid(const Problem& base, int folds, const std::vector<double>& grid,
                        RngStream& rng);

/// Fold index per row: a seeded permutation dealt round-robin.
std::vector<int> assign_folds(Eigen::Index m, int folds, RngStream& rng);

}  // namespace rsd::lasso
