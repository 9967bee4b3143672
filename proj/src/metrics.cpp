#include "rsd/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <map>

#include "rsd/errors.hpp"

namespace rsd {

namespace {

double choose2(double n) { return 0.5 * n * (n - 1.0); }

}  // namespace

DiffK diffk(int K_hat, int K_star) {
  if (K_hat < 1 || K_star < 1) throw DomainError("segment counts must be at least 1");
  const int d = K_hat - K_star;
  return {d, std::abs(d)};
}

double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DomainError("ARI needs partitions of equal length");
  if (a.size() < 2) throw DomainError("ARI needs at least two items");
  std::map<std::pair<int, int>, long> cells;
  std::map<int, long> rows;
  std::map<int, long> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++cells[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  double index = 0.0;
  for (const auto& [key, c] : cells) index += choose2(static_cast<double>(c));
  double sum_a = 0.0;
  for (const auto& [key, c] : rows) sum_a += choose2(static_cast<double>(c));
  double sum_b = 0.0;
  for (const auto& [key, c] : cols) sum_b += choose2(static_cast<double>(c));
  const double expected = sum_a * sum_b / choose2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double rmspe(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
  if (y.size() != y_hat.size() || y.size() == 0) throw DomainError("RMSPE needs aligned, non-empty vectors");
  return std::sqrt((y - y_hat).squaredNorm() / static_cast<double>(y.size()));
}

double rmse_coeff(const Eigen::MatrixXd& beta_true, const Eigen::MatrixXd& beta_hat,
                  const std::vector<int>& true_labels, const std::vector<int>& est_labels) {
  if (true_labels.size() != est_labels.size() || true_labels.empty()) {
    throw DomainError("coefficient RMSE needs aligned, non-empty label vectors");
  }
  if (beta_true.cols() != beta_hat.cols()) throw DomainError("coefficient matrices differ in width");
  double ss = 0.0;
  for (std::size_t t = 0; t < true_labels.size(); ++t) {
    ss += (beta_true.row(true_labels[t]) - beta_hat.row(est_labels[t])).squaredNorm();
  }
  return std::sqrt(ss / (static_cast<double>(true_labels.size()) * static_cast<double>(beta_true.cols())));
}

nlohmann::json EvalReport::to_json() const {
  return {{"diffk_signed", diffk_signed},
          {"diffk_abs", diffk_abs},
          {"ari", ari},
          {"rmspe", rmspe},
          {"rmse_coeff", rmse_coeff}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.diffk_signed = j.at("diffk_signed").get<int>();
  r.diffk_abs = j.at("diffk_abs").get<int>();
  r.ari = j.at("ari").get<double>();
  r.rmspe = j.at("rmspe").get<double>();
  r.rmse_coeff = j.at("rmse_coeff").get<double>();
  return r;
}

}  // namespace rsd
