#include "rsd/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rsd/errors.hpp"

namespace rsd {

void Dataset::validate() const {
  const Eigen::Index rows = y.size();
  std::ostringstream os;
  if (X.rows() != rows || S.rows() != rows || counts.size() != rows) {
    os << "row counts disagree: y=" << rows << " X=" << X.rows() << " S=" << S.rows()
       << " counts=" << counts.size();
    throw ValidationError(os.str());
  }
  if (S.cols() != 2) throw ValidationError("locations must have two columns");
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != rows) {
    throw ValidationError("id column length disagrees with the data");
  }
  if (!feature_names.empty() && static_cast<Eigen::Index>(feature_names.size()) != X.cols()) {
    throw ValidationError("feature name count disagrees with X");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const bool finite = std::isfinite(y[i]) && X.row(i).allFinite() && S.row(i).allFinite() &&
                        std::isfinite(counts[i]);
    if (!finite) {
      os << "row " << i + 1 << ": non-finite value";
      throw ValidationError(os.str());
    }
    if (counts[i] < 1.0) {
      os << "row " << i + 1 << ": rating count " << counts[i] << " is below 1";
      throw ValidationError(os.str());
    }
    for (int c = 0; c < 2; ++c) {
      if (S(i, c) < 0.0 || S(i, c) > 1.0) {
        os << "row " << i + 1 << ": location coordinate " << S(i, c) << " outside [0,1]";
        throw ValidationError(os.str());
      }
    }
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.y.resize(m);
  out.X.resize(m, X.cols());
  out.S.resize(m, 2);
  out.counts.resize(m);
  out.has_intercept = has_intercept;
  out.feature_names = feature_names;
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[r];
    out.y[r] = y[i];
    out.X.row(r) = X.row(i);
    out.S.row(r) = S.row(i);
    out.counts[r] = counts[i];
    if (!ids.empty()) out.ids.push_back(ids[i]);
  }
  return out;
}

std::string to_string(PriorKind kind) { return kind == PriorKind::ridge ? "ridge" : "lasso"; }

PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "ridge") return PriorKind::ridge;
  if (s == "lasso") return PriorKind::lasso;
  throw ValidationError("prior must be 'ridge' or 'lasso', got '" + s + "'");
}

void HyperParams::validate() const {
  if (K < 2) throw ValidationError("K must be at least 2");
  if (M < 1) throw ValidationError("M must be at least 1");
  const double positives[] = {tau0_sq,  a_tau,          b_tau,          a_sigma,
                              b_sigma,  c,              lambda,         bU_prior.shape,
                              bU_prior.rate, bV_prior.shape, bV_prior.rate};
  for (double v : positives) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("hyperparameters must be positive");
  }
}

std::string MCMCState::check_invariants(std::size_t n) const {
  const int k = K();
  const int m = M();
  if (g.size() != n || h.size() != n) return "membership vectors have wrong length";
  for (std::size_t i = 0; i < n; ++i) {
    if (g[i] < 0 || g[i] >= k) return "segment membership out of range";
    if (h[i] < 0 || h[i] >= m) return "component membership out of range";
  }
  if ((q.array() < 0.0).any()) return "negative segment probability";
  if (std::abs(q.sum() - 1.0) > 1e-9) return "segment probabilities do not sum to one";
  for (int s = 0; s < k; ++s) {
    if ((P.row(s).array() < 0.0).any()) return "negative component probability";
    if (std::abs(P.row(s).sum() - 1.0) > 1e-9) return "component probabilities do not sum to one";
  }
  if (!(tau_sq.array() > 0.0).all()) return "non-positive spatial precision";
  if (!(sigma_sq.array() > 0.0).all()) return "non-positive error variance";
  if (!(psi.array() > 0.0).all()) return "non-positive prior variance";
  if (!(bU > 0.0) || !(bV > 0.0)) return "non-positive DP rate";
  const bool inside = (mu_x.array() > -1.0).all() && (mu_x.array() < 1.0).all() &&
                      (mu_y.array() > -1.0).all() && (mu_y.array() < 1.0).all();
  if (!inside) return "component mean outside (-1, 1)^2";
  return {};
}

void ChainConfig::validate() const {
  if (n_iters <= 0 || burn_in < 0 || burn_in >= n_iters) {
    throw ValidationError("need 0 <= burn_in < n_iters");
  }
  if (thin < 1) throw ValidationError("thin must be at least 1");
  if (chains < 1) throw ValidationError("chains must be at least 1");
  if (stored_count() < 50) {
    throw ValidationError("(n_iters - burn_in) / thin must be at least 50");
  }
}

Eigen::VectorXd stick_break(const Eigen::VectorXd& sticks) {
  const Eigen::Index k = sticks.size();
  Eigen::VectorXd q(k);
  double remaining = 1.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double u = sticks[j];
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("stick values must lie in [0, 1]");
    if (j + 1 == k) {
      q[j] = remaining;
    } else {
      q[j] = u * remaining;
      remaining *= 1.0 - u;
    }
  }
  return q;
}

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::uniform: return "uniform";
    case InitKind::spatial: return "spatial";
    case InitKind::automatic: break;
  }
  return "auto";
}

InitKind init_kind_from_string(const std::string& s) {
  if (s == "uniform") return InitKind::uniform;
  if (s == "spatial") return InitKind::spatial;
  if (s == "auto") return InitKind::automatic;
  throw ValidationError("init must be 'auto', 'uniform' or 'spatial', got '" + s + "'");
}

InitKind resolve_init(InitKind kind, Eigen::Index n, Eigen::Index p, int K) {
  if (kind != InitKind::automatic) return kind;
  return n >= 2 * p * K ? InitKind::uniform : InitKind::spatial;
}

std::vector<int> kmeans_labels(const Eigen::MatrixXd& S, int k, RngStream& rng, int max_rounds) {
  const Eigen::Index n = S.rows();
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  if (n == 0 || k <= 1) return labels;

  std::vector<Eigen::RowVectorXd> centers;
  centers.push_back(S.row(static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (S.row(i) - centers.back()).squaredNorm());
      total += d2[i];
    }
    if (!(total > 0.0)) break;  // fewer distinct points than centers
    centers.push_back(S.row(static_cast<Eigen::Index>(sample_categorical(d2, rng))));
  }

  const auto kc = static_cast<int>(centers.size());
  for (int round = 0; round < max_rounds; ++round) {
    bool changed = round == 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (S.row(i) - centers[0]).squaredNorm();
      for (int c = 1; c < kc; ++c) {
        const double dc = (S.row(i) - centers[c]).squaredNorm();
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Eigen::RowVectorXd> sums(kc, Eigen::RowVectorXd::Zero(S.cols()));
    std::vector<int> counts(kc, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums[labels[i]] += S.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < kc; ++c) {
      if (counts[c] > 0) centers[c] = sums[c] / counts[c];
    }
  }
  return labels;
}

MCMCState init_state(const Dataset& data, const HyperParams& hp, RngStream& rng, InitKind kind) {
  hp.validate();
  const auto n = static_cast<std::size_t>(data.n());
  const Eigen::Index p = data.p();
  const int K = hp.K;
  const int M = hp.M;

  MCMCState st;
  st.bU = hp.bU_prior.shape / hp.bU_prior.rate;
  st.bV = hp.bV_prior.shape / hp.bV_prior.rate;

  st.g.resize(n);
  st.h.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    st.g[i] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(K));
    st.h[i] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(M));
  }
  if (resolve_init(kind, data.n(), p, K) == InitKind::spatial) st.g = kmeans_labels(data.S, K, rng);

  st.U.resize(K);
  for (int s = 0; s + 1 < K; ++s) st.U[s] = sample_beta(1.0, st.bU, rng);
  st.U[K - 1] = 1.0;
  st.q = stick_break(st.U);

  st.V.resize(K, M);
  st.P.resize(K, M);
  for (int s = 0; s < K; ++s) {
    for (int c = 0; c + 1 < M; ++c) st.V(s, c) = sample_beta(1.0, st.bV, rng);
    st.V(s, M - 1) = 1.0;
    st.P.row(s) = stick_break(st.V.row(s).transpose()).transpose();
  }

  st.mu_x.resize(K, M);
  st.mu_y.resize(K, M);
  const double prior_var = 1.0 / hp.tau0_sq;
  for (int s = 0; s < K; ++s) {
    for (int c = 0; c < M; ++c) {
      const Eigen::Vector2d m = sample_trunc_bvn(Eigen::Vector2d::Zero(), prior_var, {}, rng);
      st.mu_x(s, c) = m[0];
      st.mu_y(s, c) = m[1];
    }
  }

  // Pooled spatial precision: the data's own spread around its centroid.
  double tau_init = hp.a_tau / hp.b_tau;
  if (n > 1) {
    const Eigen::RowVector2d centroid = data.S.colwise().mean();
    const double ss = (data.S.rowwise() - centroid).squaredNorm();
    if (ss > 0.0) tau_init = 2.0 * static_cast<double>(n) / ss;
  }
  st.tau_sq = Eigen::VectorXd::Constant(K, tau_init);

  st.psi.resize(K, p);
  const double lasso_start = 1.0;
  st.psi.setConstant(hp.prior_kind == PriorKind::ridge ? hp.ridge_psi() : lasso_start);
  if (data.has_intercept && p > 0) st.psi.col(0).setConstant(hp.ridge_psi());

  // Pooled weighted least squares with the ridge prior for conditioning.
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(p);
  double sigma_init = hp.b_sigma / std::max(hp.a_sigma - 1.0, 1.0);
  if (n > 0 && p > 0) {
    const Eigen::MatrixXd XtW = data.X.transpose() * data.counts.asDiagonal();
    Eigen::MatrixXd A = XtW * data.X;
    A.diagonal().array() += 1.0 / hp.ridge_psi();
    pooled = A.llt().solve(XtW * data.y);
    const Eigen::VectorXd r = data.y - data.X * pooled;
    const double ss = (data.counts.array() * r.array().square()).sum();
    if (ss > 0.0) sigma_init = ss / static_cast<double>(n);
  }
  st.sigma_sq = Eigen::VectorXd::Constant(K, sigma_init);

  st.beta.resize(K, p);
  for (int s = 0; s < K; ++s) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double noise_sd = 1e-3 * std::sqrt(st.psi(s, j) * sigma_init);
      st.beta(s, j) = pooled[j] + noise_sd * rng.normal();
    }
  }
  return st;
}

}  // namespace rsd
