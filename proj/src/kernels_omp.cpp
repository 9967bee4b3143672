#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rsd/kernels.hpp"

namespace rsd {

int omp_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

namespace {

// Per-segment constants hoisted out of the observation loop.
struct SpatialTables {
  Eigen::MatrixXd log_p;  // K x M
  Eigen::VectorXd log_norm;

  explicit SpatialTables(const MCMCState& st)
      : log_p(st.P.array().log().matrix()),
        log_norm((st.tau_sq.array().log() - std::log(2.0 * std::numbers::pi)).matrix()) {}
};

double log_mixture(const MCMCState& st, const SpatialTables& tab, int seg, double sx, double sy,
                   double* scratch) {
  const int M = st.M();
  const double tau = st.tau_sq[seg];
  double hi = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < M; ++c) {
    const double dx = sx - st.mu_x(seg, c);
    const double dy = sy - st.mu_y(seg, c);
    scratch[c] = tab.log_p(seg, c) - 0.5 * tau * (dx * dx + dy * dy);
    hi = std::max(hi, scratch[c]);
  }
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (int c = 0; c < M; ++c) sum += std::exp(scratch[c] - hi);
  return tab.log_norm[seg] + hi + std::log(sum);
}

}  // namespace

Eigen::MatrixXd segment_log_weights(const MCMCState& st, const Dataset& data) {
  const Eigen::Index n = data.n();
  const int K = st.K();
  const int M = st.M();
  const Eigen::MatrixXd fitted = data.X * st.beta.transpose();
  const Eigen::VectorXd log_q = st.q.array().log();
  const Eigen::VectorXd log_2pi_sigma =
      (2.0 * std::numbers::pi * st.sigma_sq.array()).log().matrix();
  const Eigen::VectorXd inv_sigma = st.sigma_sq.cwiseInverse();
  const SpatialTables tab(st);

  Eigen::MatrixXd out(n, K);
#pragma omp parallel
  {
    std::vector<double> scratch(static_cast<std::size_t>(M));
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = data.counts[i];
      const double half_log_w = 0.5 * std::log(w);
      for (int s = 0; s < K; ++s) {
        const double r = data.y[i] - fitted(i, s);
        const double log_lik = half_log_w - 0.5 * log_2pi_sigma[s] - 0.5 * w * r * r * inv_sigma[s];
        out(i, s) = log_q[s] + log_lik +
                    log_mixture(st, tab, s, data.S(i, 0), data.S(i, 1), scratch.data());
      }
    }
  }
  return out;
}

Eigen::MatrixXd component_log_weights(const MCMCState& st, const Dataset& data) {
  const Eigen::Index n = data.n();
  const int M = st.M();
  const SpatialTables tab(st);
  Eigen::MatrixXd out(n, M);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const int s = st.g[i];
    const double tau = st.tau_sq[s];
    for (int c = 0; c < M; ++c) {
      const double dx = data.S(i, 0) - st.mu_x(s, c);
      const double dy = data.S(i, 1) - st.mu_y(s, c);
      out(i, c) = tab.log_p(s, c) + tab.log_norm[s] - 0.5 * tau * (dx * dx + dy * dy);
    }
  }
  return out;
}

Eigen::MatrixXd coclustering(const LabelMatrix& labels) {
  const Eigen::Index L = labels.rows();
  const Eigen::Index n = labels.cols();
  Eigen::MatrixXd d(n, n);
  // Row i owns the upper-triangle entries (i, j >= i); counts are integers.
#pragma omp parallel
  {
    std::vector<int> count(static_cast<std::size_t>(n));
#pragma omp for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) {
      std::fill(count.begin() + i, count.end(), 0);
      for (Eigen::Index l = 0; l < L; ++l) {
        const int* row = labels.row(l).data();
        const int gi = row[i];
        for (Eigen::Index j = i; j < n; ++j) count[j] += (row[j] == gi);
      }
      for (Eigen::Index j = i; j < n; ++j) d(i, j) = count[j] / static_cast<double>(L);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) d(i, j) = d(j, i);
  }
  return d;
}

Eigen::VectorXd binder_losses(const LabelMatrix& labels, const Eigen::MatrixXd& d) {
  const Eigen::Index L = labels.rows();
  const Eigen::Index n = labels.cols();
  Eigen::VectorXd loss(L);
#pragma omp parallel for schedule(static)
  for (Eigen::Index l = 0; l < L; ++l) {
    const int* row = labels.row(l).data();
    double acc = 0.0;
    // Diagonal terms vanish (same = 1 = d_ii); off-diagonal pairs count twice.
    for (Eigen::Index j = 1; j < n; ++j) {
      const double* dcol = d.col(j).data();
      const int gj = row[j];
      for (Eigen::Index i = 0; i < j; ++i) {
        const double diff = (row[i] == gj ? 1.0 : 0.0) - dcol[i];
        acc += diff * diff;
      }
    }
    loss[l] = 2.0 * acc;
  }
  return loss;
}

}  // namespace parallel
}  // namespace rsd
