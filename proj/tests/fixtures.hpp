#pragma once

#include <cmath>
#include <numbers>

#include "rsd/gibbs.hpp"
#include "rsd/model.hpp"

namespace rsd::test {

// Dataset from explicit rows. No intercept unless asked.
inline Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& S, const Eigen::VectorXd& counts,
                            bool intercept = false) {
  Dataset d;
  d.X = X;
  d.y = y;
  d.S = S;
  d.counts = counts;
  d.has_intercept = intercept;
  return d;
}

// Random data on the unit square with standard normal features.
inline Dataset random_dataset(Eigen::Index n, Eigen::Index p, RngStream& rng) {
  Dataset d;
  d.X.resize(n, p);
  d.y.resize(n);
  d.S.resize(n, 2);
  d.counts.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.X(i, j) = rng.normal();
    d.y[i] = 3.0 * rng.normal();
    d.S(i, 0) = rng.uniform();
    d.S(i, 1) = rng.uniform();
    d.counts[i] = 1.0 + static_cast<double>(rng.next_u64() % 30);
  }
  return d;
}

// A valid state with every field set to simple values.
inline MCMCState blank_state(int K, int M, Eigen::Index p, std::size_t n) {
  MCMCState st;
  st.g.assign(n, 0);
  st.h.assign(n, 0);
  st.U = Eigen::VectorXd::Constant(K, 0.5);
  st.U[K - 1] = 1.0;
  st.q = stick_break(st.U);
  st.V = Eigen::MatrixXd::Constant(K, M, 0.5);
  st.V.col(M - 1).setOnes();
  st.P.resize(K, M);
  for (int s = 0; s < K; ++s) st.P.row(s) = stick_break(st.V.row(s).transpose()).transpose();
  st.mu_x = Eigen::MatrixXd::Constant(K, M, 0.5);
  st.mu_y = Eigen::MatrixXd::Constant(K, M, 0.5);
  st.tau_sq = Eigen::VectorXd::Constant(K, 10.0);
  st.beta = Eigen::MatrixXd::Zero(K, p);
  st.sigma_sq = Eigen::VectorXd::Ones(K);
  st.psi = Eigen::MatrixXd::Constant(K, p, 100.0);
  return st;
}

inline double log_normal_pdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

// Direct evaluation of the unnormalized segment log weight.
inline double direct_segment_log_weight(const MCMCState& st, const Dataset& d, Eigen::Index i,
                                        int g) {
  const double reg = log_normal_pdf(d.y[i], d.X.row(i).dot(st.beta.row(g)),
                                    st.sigma_sq[g] / d.counts[i]);
  double spatial = 0.0;
  for (int h = 0; h < st.M(); ++h) {
    const double var = 1.0 / st.tau_sq[g];
    spatial += st.P(g, h) * std::exp(log_normal_pdf(d.S(i, 0), st.mu_x(g, h), var) +
                                     log_normal_pdf(d.S(i, 1), st.mu_y(g, h), var));
  }
  return std::log(st.q[g]) + reg + std::log(spatial);
}

}  // namespace rsd::test
