#include "rsd/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "rsd/errors.hpp"

namespace rsd {

namespace {

constexpr double kStickCap = 1.0 - 1e-12;
constexpr double kBetaFloor = 1e-10;

double clamp_stick(double u, Diagnostics* diag) {
  if (u > kStickCap) {
    if (diag != nullptr) ++diag->stick_clamps;
    return kStickCap;
  }
  return u;
}

}  // namespace

Occupancy::Occupancy(const MCMCState& st, const Dataset& data)
    : n_seg(Eigen::VectorXi::Zero(st.K())),
      n_comp(Eigen::MatrixXi::Zero(st.K(), st.M())),
      sum_x(Eigen::MatrixXd::Zero(st.K(), st.M())),
      sum_y(Eigen::MatrixXd::Zero(st.K(), st.M())),
      members(static_cast<std::size_t>(st.K())) {
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const int s = st.g[i];
    const int c = st.h[i];
    ++n_seg[s];
    ++n_comp(s, c);
    sum_x(s, c) += data.S(i, 0);
    sum_y(s, c) += data.S(i, 1);
    members[s].push_back(i);
  }
}

bool is_intercept(const Dataset& data, Eigen::Index j) { return data.has_intercept && j == 0; }

TruncNormal2Params component_mean_conditional(const MCMCState& st, const Occupancy& occ,
                                              const HyperParams& hp, int seg, int comp) {
  const double tau = st.tau_sq[seg];
  const double prec = hp.tau0_sq + tau * occ.n_comp(seg, comp);
  return {Eigen::Vector2d(tau * occ.sum_x(seg, comp), tau * occ.sum_y(seg, comp)) / prec,
          1.0 / prec};
}

GammaParams spatial_precision_conditional(const MCMCState& st, const Dataset& data,
                                          const Occupancy& occ, const HyperParams& hp, int seg) {
  double ss = 0.0;
  for (Eigen::Index i : occ.members[seg]) {
    const int c = st.h[i];
    const double dx = data.S(i, 0) - st.mu_x(seg, c);
    const double dy = data.S(i, 1) - st.mu_y(seg, c);
    ss += dx * dx + dy * dy;
  }
  // Each member contributes a bivariate density, hence a full power of tau^2.
  return {hp.a_tau + occ.n_seg[seg], hp.b_tau + 0.5 * ss};
}

GaussianCanonical coefficient_conditional(const MCMCState& st, const Dataset& data,
                                          const Occupancy& occ, int seg) {
  const Eigen::Index p = data.p();
  const auto& rows = occ.members[seg];
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd Xg(m, p);
  Eigen::VectorXd yg(m);
  Eigen::VectorXd wg(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    Xg.row(r) = data.X.row(rows[r]);
    yg[r] = data.y[rows[r]];
    wg[r] = data.counts[rows[r]];
  }
  GaussianCanonical out;
  out.precision = Xg.transpose() * wg.asDiagonal() * Xg;
  out.precision.diagonal() += st.psi.row(seg).transpose().cwiseInverse();
  out.rhs = Xg.transpose() * (wg.array() * yg.array()).matrix();
  out.scale = st.sigma_sq[seg];
  return out;
}

InvGammaParams error_variance_conditional(const MCMCState& st, const Dataset& data,
                                          const Occupancy& occ, const HyperParams& hp, int seg) {
  const Eigen::VectorXd b = st.beta.row(seg).transpose();
  double ss = 0.0;
  for (Eigen::Index i : occ.members[seg]) {
    const double r = data.y[i] - data.X.row(i).dot(b);
    ss += data.counts[i] * r * r;
  }
  // The coefficient prior N(0, sigma^2 D) also carries sigma^2.
  const double prior_quad = (b.array().square() / st.psi.row(seg).transpose().array()).sum();
  const double p = static_cast<double>(data.p());
  return {hp.a_sigma + 0.5 * occ.n_seg[seg] + 0.5 * p, hp.b_sigma + 0.5 * ss + 0.5 * prior_quad};
}

GammaParams dp_rate_conditional(const Eigen::Ref<const Eigen::MatrixXd>& sticks,
                                const GammaPrior& prior) {
  double log_rest = 0.0;
  for (Eigen::Index r = 0; r < sticks.rows(); ++r) {
    for (Eigen::Index c = 0; c < sticks.cols(); ++c) log_rest += std::log1p(-sticks(r, c));
  }
  return {prior.shape + static_cast<double>(sticks.size()), prior.rate - log_rest};
}

double psi_inverse_mean(const MCMCState& st, const HyperParams& hp, int seg, Eigen::Index j,
                        Diagnostics* diag) {
  double b = std::abs(st.beta(seg, j));
  if (b < kBetaFloor) {
    b = kBetaFloor;
    if (diag != nullptr) ++diag->zero_beta_clamps;
  }
  return hp.lambda * std::sqrt(st.sigma_sq[seg]) / b;
}

void update_segment_memberships(MCMCState& st, const Dataset& data, RngStream& rng,
                                Diagnostics* diag) {
  const Eigen::MatrixXd log_w = parallel::segment_log_weights(st, data);
  Eigen::MatrixXd spatial_only;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    Eigen::VectorXd prob = normalize_log_weights(log_w.row(i).transpose());
    if (prob.size() == 0) {
      if (diag != nullptr) ++diag->membership_fallbacks;
      if (spatial_only.size() == 0) spatial_only = serial::segment_spatial_log_weights(st, data);
      prob = normalize_log_weights(spatial_only.row(i).transpose());
      if (prob.size() == 0) prob = st.q;
    }
    st.g[i] = static_cast<int>(sample_categorical({prob.data(), static_cast<std::size_t>(prob.size())}, rng));
  }
}

void update_component_memberships(MCMCState& st, const Dataset& data, RngStream& rng) {
  const Eigen::MatrixXd log_w = parallel::component_log_weights(st, data);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    Eigen::VectorXd prob = normalize_log_weights(log_w.row(i).transpose());
    if (prob.size() == 0) prob = st.P.row(st.g[i]).transpose();
    st.h[i] = static_cast<int>(sample_categorical({prob.data(), static_cast<std::size_t>(prob.size())}, rng));
  }
}

void update_component_means(MCMCState& st, const Dataset& data, const HyperParams& hp,
                            RngStream& rng) {
  const Occupancy occ(st, data);
  for (int s = 0; s < st.K(); ++s) {
    for (int c = 0; c < st.M(); ++c) {
      const TruncNormal2Params cond = component_mean_conditional(st, occ, hp, s, c);
      const Eigen::Vector2d m = sample_trunc_bvn(cond.mean, cond.var, {-1.0, 1.0}, rng);
      st.mu_x(s, c) = m[0];
      st.mu_y(s, c) = m[1];
    }
  }
}

void update_spatial_precisions(MCMCState& st, const Dataset& data, const HyperParams& hp,
                               RngStream& rng) {
  const Occupancy occ(st, data);
  for (int s = 0; s < st.K(); ++s) {
    const GammaParams cond = spatial_precision_conditional(st, data, occ, hp, s);
    st.tau_sq[s] = sample_gamma(cond.shape, cond.rate, rng);
  }
}

void update_segment_sticks(MCMCState& st, const HyperParams& hp, RngStream& rng,
                           Diagnostics* diag) {
  const int K = st.K();
  std::vector<long> counts(static_cast<std::size_t>(K), 0);
  for (int s : st.g) ++counts[s];
  long tail = 0;
  for (int s = K - 1; s >= 0; --s) {
    const long after = tail;
    tail += counts[s];
    if (s == K - 1) {
      st.U[s] = 1.0;
      continue;
    }
    st.U[s] = clamp_stick(sample_beta(1.0 + counts[s], st.bU + after, rng), diag);
  }
  st.q = stick_break(st.U);
  if (hp.update_dp_rates) {
    const GammaParams cond = dp_rate_conditional(st.U.head(K - 1), hp.bU_prior);
    st.bU = sample_gamma(cond.shape, cond.rate, rng);
  }
}

void update_component_sticks(MCMCState& st, const HyperParams& hp, RngStream& rng,
                             Diagnostics* diag) {
  const int K = st.K();
  const int M = st.M();
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(K, M);
  for (std::size_t i = 0; i < st.g.size(); ++i) ++counts(st.g[i], st.h[i]);
  for (int s = 0; s < K; ++s) {
    long tail = 0;
    for (int c = M - 1; c >= 0; --c) {
      const long after = tail;
      tail += counts(s, c);
      if (c == M - 1) {
        st.V(s, c) = 1.0;
        continue;
      }
      st.V(s, c) = clamp_stick(sample_beta(1.0 + counts(s, c), st.bV + after, rng), diag);
    }
    st.P.row(s) = stick_break(st.V.row(s).transpose()).transpose();
  }
  if (hp.update_dp_rates) {
    const GammaParams cond = dp_rate_conditional(st.V.leftCols(M - 1), hp.bV_prior);
    st.bV = sample_gamma(cond.shape, cond.rate, rng);
  }
}

void update_coefficients(MCMCState& st, const Dataset& data, const HyperParams& hp,
                         RngStream& rng) {
  const Occupancy occ(st, data);
  const Eigen::Index p = data.p();
  for (int s = 0; s < st.K(); ++s) {
    if (occ.n_seg[s] > 0) {
      const GaussianCanonical cond = coefficient_conditional(st, data, occ, s);
      st.beta.row(s) = sample_mvn_canonical(cond.precision, cond.rhs, cond.scale, rng).transpose();
      continue;
    }
    // Empty segment: exact joint draw of (psi, sigma^2, beta) from the prior.
    for (Eigen::Index j = 0; j < p; ++j) {
      if (hp.prior_kind == PriorKind::lasso && !is_intercept(data, j)) {
        st.psi(s, j) = sample_exponential(0.5 * hp.lambda * hp.lambda, rng);
      } else {
        st.psi(s, j) = hp.ridge_psi();
      }
    }
    st.sigma_sq[s] = sample_inverse_gamma(hp.a_sigma, hp.b_sigma, rng);
    for (Eigen::Index j = 0; j < p; ++j) {
      st.beta(s, j) = std::sqrt(st.sigma_sq[s] * st.psi(s, j)) * rng.normal();
    }
  }
}

void update_error_variances(MCMCState& st, const Dataset& data, const HyperParams& hp,
                            RngStream& rng) {
  const Occupancy occ(st, data);
  for (int s = 0; s < st.K(); ++s) {
    if (occ.n_seg[s] == 0) continue;
    const InvGammaParams cond = error_variance_conditional(st, data, occ, hp, s);
    st.sigma_sq[s] = sample_inverse_gamma(cond.shape, cond.scale, rng);
  }
}

void update_psi(MCMCState& st, const Dataset& data, const HyperParams& hp, RngStream& rng,
                Diagnostics* diag) {
  if (hp.prior_kind == PriorKind::ridge) {
    st.psi.setConstant(hp.ridge_psi());
    return;
  }
  std::vector<bool> occupied(static_cast<std::size_t>(st.K()), false);
  for (int s : st.g) occupied[s] = true;
  const double shape = hp.lambda * hp.lambda;
  for (int s = 0; s < st.K(); ++s) {
    if (!occupied[s]) continue;
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      if (is_intercept(data, j)) {
        st.psi(s, j) = hp.ridge_psi();
        continue;
      }
      const double mu = psi_inverse_mean(st, hp, s, j, diag);
      st.psi(s, j) = 1.0 / sample_inverse_gaussian(mu, shape, rng);
    }
  }
}

void update_parameters(MCMCState& st, const Dataset& data, const HyperParams& hp, RngStream& rng,
                       Diagnostics* diag) {
  update_component_memberships(st, data, rng);
  update_component_means(st, data, hp, rng);
  update_spatial_precisions(st, data, hp, rng);
  update_segment_sticks(st, hp, rng, diag);
  update_component_sticks(st, hp, rng, diag);
  update_coefficients(st, data, hp, rng);
  update_error_variances(st, data, hp, rng);
  update_psi(st, data, hp, rng, diag);
}

void sweep(MCMCState& st, const Dataset& data, const HyperParams& hp, RngStream& rng,
           Diagnostics* diag) {
  update_segment_memberships(st, data, rng, diag);
  update_parameters(st, data, hp, rng, diag);
}

int count_nonempty(const std::vector<int>& g, int K) {
  std::vector<bool> seen(static_cast<std::size_t>(K), false);
  int k = 0;
  for (int s : g) {
    if (!seen[s]) {
      seen[s] = true;
      ++k;
    }
  }
  return k;
}

int ChainTrace::stored_k_nonempty(Eigen::Index l, int K) const {
  std::vector<int> row(stored_g.row(l).data(), stored_g.row(l).data() + stored_g.cols());
  return count_nonempty(row, K);
}

namespace {

ChainTrace run_single(const Dataset& data, const HyperParams& hp, const ChainConfig& cfg, int chain,
                      const IterationCallback& on_iteration) {
  RngStream rng = chain == 0 ? RngStream(cfg.seed) : RngStream(cfg.seed).split(100 + chain);
  RngStream init_rng = rng.split(0);
  MCMCState st = init_state(data, hp, init_rng, cfg.init);

  ChainTrace trace;
  update_parameters(st, data, hp, init_rng, &trace.diagnostics);

  const int L = cfg.stored_count();
  trace.stored_g.resize(L, data.n());
  trace.stored_beta.reserve(static_cast<std::size_t>(L));
  trace.stored_sigma_sq.reserve(static_cast<std::size_t>(L));
  trace.k_nonempty.resize(1);
  trace.k_nonempty[0].reserve(static_cast<std::size_t>(cfg.n_iters));

  int stored = 0;
  for (int it = 0; it < cfg.n_iters; ++it) {
    sweep(st, data, hp, rng, &trace.diagnostics);
    trace.k_nonempty[0].push_back(count_nonempty(st.g, hp.K));
    if (it >= cfg.burn_in && (it - cfg.burn_in + 1) % cfg.thin == 0 && stored < L) {
      for (Eigen::Index i = 0; i < data.n(); ++i) trace.stored_g(stored, i) = st.g[i];
      trace.stored_beta.push_back(st.beta);
      trace.stored_sigma_sq.push_back(st.sigma_sq);
      trace.stored_iters.push_back(it);
      trace.stored_chain.push_back(chain);
      ++stored;
    }
    if (on_iteration) {
#pragma omp critical(rsd_chain_callback)
      on_iteration(chain, it, st);
    }
  }
  return trace;
}

}  // namespace

ChainTrace pool_traces(const std::vector<ChainTrace>& parts) {
  if (parts.size() == 1) return parts.front();
  ChainTrace out;
  Eigen::Index rows = 0, n = 0;
  for (const ChainTrace& t : parts) {
    rows += t.L();
    n = t.n();
  }
  out.stored_g.resize(rows, n);
  Eigen::Index at = 0;
  for (const ChainTrace& t : parts) {
    if (t.n() != n) throw ValidationError("traces disagree on the number of observations");
    out.stored_g.middleRows(at, t.L()) = t.stored_g;
    at += t.L();
    out.stored_beta.insert(out.stored_beta.end(), t.stored_beta.begin(), t.stored_beta.end());
    out.stored_sigma_sq.insert(out.stored_sigma_sq.end(), t.stored_sigma_sq.begin(),
                               t.stored_sigma_sq.end());
    out.stored_iters.insert(out.stored_iters.end(), t.stored_iters.begin(), t.stored_iters.end());
    out.stored_chain.insert(out.stored_chain.end(), t.stored_chain.begin(), t.stored_chain.end());
    out.k_nonempty.insert(out.k_nonempty.end(), t.k_nonempty.begin(), t.k_nonempty.end());
    out.diagnostics.membership_fallbacks += t.diagnostics.membership_fallbacks;
    out.diagnostics.zero_beta_clamps += t.diagnostics.zero_beta_clamps;
    out.diagnostics.stick_clamps += t.diagnostics.stick_clamps;
  }
  return out;
}

ChainTrace run_chain(const Dataset& data, const HyperParams& hp, const ChainConfig& cfg,
                     const IterationCallback& on_iteration) {
  hp.validate();
  cfg.validate();
  if (data.n() == 0) throw ValidationError("dataset is empty");

  std::vector<ChainTrace> parts(static_cast<std::size_t>(cfg.chains));
  std::vector<std::exception_ptr> errors(parts.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < cfg.chains; ++c) {
    try {
      parts[static_cast<std::size_t>(c)] = run_single(data, hp, cfg, c, on_iteration);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return pool_traces(parts);
}

}  // namespace rsd
