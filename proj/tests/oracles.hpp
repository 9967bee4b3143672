#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "rsd/kernels.hpp"

namespace rsd::test {

// Every set partition of n items as a restricted growth string.
inline std::vector<std::vector<int>> all_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (int k = 0; k <= used; ++k) {
      cur[static_cast<std::size_t>(i)] = k;
      rec(i + 1, std::max(used, k + 1));
    }
  };
  if (n == 0) return {{}};
  rec(1, 1);
  return out;
}

// ARI from the four pair counts.
inline double pair_count_ari(const std::vector<int>& a, const std::vector<int>& b) {
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) ++n11;
      else if (sa) ++n10;
      else if (sb) ++n01;
      else ++n00;
    }
  }
  const double den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
  if (den == 0.0) return 1.0;
  return 2.0 * (n00 * n11 - n01 * n10) / den;
}

// Binder-type loss of stored row l against d, by the definition.
inline double brute_binder_loss(const LabelMatrix& g, Eigen::Index l, const Eigen::MatrixXd& d) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < g.cols(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      const double e = (g(l, i) == g(l, j) ? 1.0 : 0.0) - d(i, j);
      s += e * e;
    }
  }
  return s;
}

// Co-clustering frequencies by the definition.
inline Eigen::MatrixXd brute_coclustering(const LabelMatrix& g) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(g.cols(), g.cols());
  for (Eigen::Index l = 0; l < g.rows(); ++l) {
    for (Eigen::Index i = 0; i < g.cols(); ++i) {
      for (Eigen::Index j = 0; j < g.cols(); ++j) d(i, j) += g(l, i) == g(l, j);
    }
  }
  return d / static_cast<double>(g.rows());
}

}  // namespace rsd::test
