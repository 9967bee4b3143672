#include <cmath>
#include <limits>
#include <numbers>

#include "rsd/kernels.hpp"

namespace rsd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp_add(double acc, double term) {
  if (term == kNegInf) return acc;
  if (acc == kNegInf) return term;
  const double hi = std::max(acc, term);
  return hi + std::log(std::exp(acc - hi) + std::exp(term - hi));
}

double log_spatial_mixture(const MCMCState& st, int seg, double sx, double sy) {
  const double tau = st.tau_sq[seg];
  const double log_norm = std::log(tau) - std::log(2.0 * std::numbers::pi);
  double acc = kNegInf;
  for (int c = 0; c < st.M(); ++c) {
    const double dx = sx - st.mu_x(seg, c);
    const double dy = sy - st.mu_y(seg, c);
    const double term = std::log(st.P(seg, c)) + log_norm - 0.5 * tau * (dx * dx + dy * dy);
    acc = log_sum_exp_add(acc, term);
  }
  return acc;
}

}  // namespace

namespace serial {

Eigen::MatrixXd segment_spatial_log_weights(const MCMCState& st, const Dataset& data) {
  const Eigen::Index n = data.n();
  Eigen::MatrixXd out(n, st.K());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int s = 0; s < st.K(); ++s) {
      out(i, s) = std::log(st.q[s]) + log_spatial_mixture(st, s, data.S(i, 0), data.S(i, 1));
    }
  }
  return out;
}

Eigen::MatrixXd segment_log_weights(const MCMCState& st, const Dataset& data) {
  const Eigen::Index n = data.n();
  Eigen::MatrixXd out(n, st.K());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int s = 0; s < st.K(); ++s) {
      double fit = 0.0;
      for (Eigen::Index j = 0; j < data.p(); ++j) fit += data.X(i, j) * st.beta(s, j);
      const double var = st.sigma_sq[s] / data.counts[i];
      const double r = data.y[i] - fit;
      const double log_lik = -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * r * r / var;
      out(i, s) = std::log(st.q[s]) + log_lik +
                  log_spatial_mixture(st, s, data.S(i, 0), data.S(i, 1));
    }
  }
  return out;
}

Eigen::MatrixXd component_log_weights(const MCMCState& st, const Dataset& data) {
  const Eigen::Index n = data.n();
  Eigen::MatrixXd out(n, st.M());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int s = st.g[i];
    const double tau = st.tau_sq[s];
    for (int c = 0; c < st.M(); ++c) {
      const double dx = data.S(i, 0) - st.mu_x(s, c);
      const double dy = data.S(i, 1) - st.mu_y(s, c);
      out(i, c) = std::log(st.P(s, c)) + std::log(tau) - std::log(2.0 * std::numbers::pi) -
                  0.5 * tau * (dx * dx + dy * dy);
    }
  }
  return out;
}

Eigen::MatrixXd coclustering(const LabelMatrix& labels) {
  const Eigen::Index L = labels.rows();
  const Eigen::Index n = labels.cols();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index l = 0; l < L; ++l) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (labels(l, i) == labels(l, j)) d(i, j) += 1.0;
      }
    }
  }
  return d / static_cast<double>(L);
}

Eigen::VectorXd binder_losses(const LabelMatrix& labels, const Eigen::MatrixXd& d) {
  const Eigen::Index L = labels.rows();
  const Eigen::Index n = labels.cols();
  Eigen::VectorXd loss = Eigen::VectorXd::Zero(L);
  for (Eigen::Index l = 0; l < L; ++l) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double same = labels(l, i) == labels(l, j) ? 1.0 : 0.0;
        loss[l] += (same - d(i, j)) * (same - d(i, j));
      }
    }
  }
  return loss;
}

}  // namespace serial

Eigen::VectorXd normalize_log_weights(const Eigen::Ref<const Eigen::VectorXd>& log_w) {
  const double hi = log_w.maxCoeff();
  if (!std::isfinite(hi)) return {};
  Eigen::VectorXd w = (log_w.array() - hi).exp();
  w /= w.sum();
  return w;
}

}  // namespace rsd
