#pragma once

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace rsd {

struct DiffK {
  int signed_diff;
  int abs_diff;
};

DiffK diffk(int K_hat, int K_star);

/// Hubert-Arabie adjusted Rand index. May be negative. Two trivial identical
/// partitions (zero denominator) score 1.
double ari(const std::vector<int>& a, const std::vector<int>& b);

double rmspe(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);

/// Root mean square over test points and coefficients of
/// beta_true[true_label] - beta_hat[est_label].
double rmse_coeff(const Eigen::MatrixXd& beta_true, const Eigen::MatrixXd& beta_hat,
                  const std::vector<int>& true_labels, const std::vector<int>& est_labels);

struct EvalReport {
  int diffk_signed = 0;
  int diffk_abs = 0;
  double ari = 0.0;
  double rmspe = 0.0;
  double rmse_coeff = 0.0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

}  // namespace rsd
