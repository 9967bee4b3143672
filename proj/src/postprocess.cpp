#include "rsd/postprocess.hpp"

#include <cmath>
#include <limits>

#include "rsd/errors.hpp"
#include "rsd/lasso.hpp"

namespace rsd {

namespace {

std::vector<std::vector<Eigen::Index>> group_rows(const std::vector<int>& labels, int K_hat) {
  std::vector<std::vector<Eigen::Index>> rows(static_cast<std::size_t>(K_hat));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    rows[labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

}  // namespace

Eigen::MatrixXd coclustering_matrix(const ChainTrace& trace) {
  if (trace.L() < 1) throw DomainError("trace has no stored iterations");
  return parallel::coclustering(trace.stored_g);
}

Eigen::Index dahl_select(const LabelMatrix& labels, const Eigen::MatrixXd& d) {
  if (labels.rows() < 1) throw DomainError("no stored iterations to select from");
  const Eigen::VectorXd loss = parallel::binder_losses(labels, d);
  const double best = loss.minCoeff();
  // Equal partitions give bitwise-equal losses; the slack only absorbs
  // summation-order noise between different partitions with equal loss.
  const double slack = 1e-9 * std::max(1.0, best);
  for (Eigen::Index l = 0; l < loss.size(); ++l) {
    if (loss[l] <= best + slack) return l;
  }
  return 0;
}

Eigen::Index dahl_select(const ChainTrace& trace, const Eigen::MatrixXd& d) {
  return dahl_select(trace.stored_g, d);
}

Relabeled relabel(const std::vector<int>& raw) {
  Relabeled out;
  out.labels.resize(raw.size());
  std::vector<std::pair<int, int>> seen;  // raw -> compact
  for (std::size_t i = 0; i < raw.size(); ++i) {
    int compact = -1;
    for (const auto& [r, c] : seen) {
      if (r == raw[i]) {
        compact = c;
        break;
      }
    }
    if (compact < 0) {
      compact = static_cast<int>(seen.size());
      seen.emplace_back(raw[i], compact);
    }
    out.labels[i] = compact;
  }
  out.K_hat = static_cast<int>(seen.size());
  return out;
}

RidgeEstimate reestimate_ridge(const Dataset& data, const std::vector<int>& labels, int K_hat,
                               const HyperParams& hp) {
  const Eigen::Index p = data.p();
  const auto rows = group_rows(labels, K_hat);
  RidgeEstimate out;
  out.beta_hat.resize(K_hat, p);
  out.sigma_hat_sq.resize(K_hat);
  out.lower.resize(K_hat, p);
  out.upper.resize(K_hat, p);
  const double d_inv = 1.0 / hp.ridge_psi();
  for (int s = 0; s < K_hat; ++s) {
    const auto& idx = rows[s];
    if (idx.empty()) throw DomainError("re-estimation needs every segment non-empty");
    const Eigen::MatrixXd Xg = data.X(idx, Eigen::all);
    const Eigen::VectorXd yg = data.y(idx);
    const Eigen::VectorXd wg = data.counts(idx);
    Eigen::MatrixXd A = Xg.transpose() * wg.asDiagonal() * Xg;
    A.diagonal().array() += d_inv;
    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw NumericError("ridge system is not positive definite");
    const Eigen::VectorXd b = llt.solve(Xg.transpose() * (wg.array() * yg.array()).matrix());
    out.beta_hat.row(s) = b.transpose();

    const Eigen::VectorXd r = yg - Xg * b;
    const double ss = (wg.array() * r.array().square()).sum();
    const double shape = hp.a_sigma + 0.5 * static_cast<double>(idx.size()) + 0.5 * static_cast<double>(p);
    const double scale = hp.b_sigma + 0.5 * ss + 0.5 * d_inv * b.squaredNorm();
    // Posterior mean of the inverse gamma; fall back to the mode when the mean is undefined.
    const double sigma_sq = shape > 1.0 ? scale / (shape - 1.0) : scale / (shape + 1.0);
    out.sigma_hat_sq[s] = sigma_sq;

    const Eigen::VectorXd var = llt.solve(Eigen::MatrixXd::Identity(p, p)).diagonal() * sigma_sq;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double half = kZ975 * std::sqrt(var[j]);
      out.lower(s, j) = b[j] - half;
      out.upper(s, j) = b[j] + half;
    }
  }
  return out;
}

LassoEstimate reestimate_lasso(const Dataset& data, const std::vector<int>& labels, int K_hat,
                               const HyperParams& hp, int cv_folds, RngStream& rng,
                               int grid_size) {
  const Eigen::Index p = data.p();
  const auto rows = group_rows(labels, K_hat);
  LassoEstimate out;
  out.beta_hat.resize(K_hat, p);
  out.ridge_fallback.assign(static_cast<std::size_t>(K_hat), false);
  out.penalty.assign(static_cast<std::size_t>(K_hat), 0.0);
  RidgeEstimate ridge;
  bool have_ridge = false;
  for (int s = 0; s < K_hat; ++s) {
    const auto& idx = rows[s];
    const auto m = static_cast<int>(idx.size());
    if (m < 2) {
      if (!have_ridge) {
        ridge = reestimate_ridge(data, labels, K_hat, hp);
        have_ridge = true;
      }
      out.beta_hat.row(s) = ridge.beta_hat.row(s);
      out.ridge_fallback[s] = true;
      continue;
    }
    lasso::Problem pb;
    pb.X = data.X(idx, Eigen::all);
    pb.y = data.y(idx);
    pb.w = data.counts(idx);
    pb.penalize.assign(static_cast<std::size_t>(p), true);
    if (data.has_intercept && p > 0) pb.penalize[0] = false;
    RngStream seg_rng = rng.split(static_cast<std::uint64_t>(s));
    const lasso::CvResult cv = lasso::cv_select(pb, std::min(cv_folds, m), grid_size, seg_rng);
    pb.penalty = cv.best_penalty;
    out.penalty[s] = cv.best_penalty;
    out.beta_hat.row(s) = lasso::fit(pb).beta.transpose();
  }
  return out;
}

SegmentationResult postprocess(const ChainTrace& trace, const Dataset& data,
                               const HyperParams& hp, RngStream& rng, int cv_folds) {
  const Eigen::MatrixXd d = coclustering_matrix(trace);
  SegmentationResult res;
  res.selected_iter = dahl_select(trace, d);
  const auto row = trace.stored_g.row(res.selected_iter);
  const Relabeled rl = relabel(std::vector<int>(row.data(), row.data() + row.size()));
  res.labels = rl.labels;
  res.K_hat = rl.K_hat;

  const RidgeEstimate ridge = reestimate_ridge(data, res.labels, res.K_hat, hp);
  res.sigma_hat_sq = ridge.sigma_hat_sq;
  if (hp.prior_kind == PriorKind::ridge) {
    res.beta_hat = ridge.beta_hat;
    res.lower = ridge.lower;
    res.upper = ridge.upper;
    res.has_intervals = true;
    res.ridge_fallback.assign(static_cast<std::size_t>(res.K_hat), false);
  } else {
    LassoEstimate lasso = reestimate_lasso(data, res.labels, res.K_hat, hp, cv_folds, rng);
    res.beta_hat = std::move(lasso.beta_hat);
    res.ridge_fallback = std::move(lasso.ridge_fallback);
  }
  return res;
}

std::vector<Eigen::Index> nearest_rows(const Eigen::MatrixXd& from, const Eigen::MatrixXd& to) {
  if (from.rows() == 0) throw DomainError("nearest-neighbor search over an empty training set");
  std::vector<Eigen::Index> out(static_cast<std::size_t>(to.rows()));
#pragma omp parallel for schedule(static)
  for (Eigen::Index t = 0; t < to.rows(); ++t) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      const double dx = from(i, 0) - to(t, 0);
      const double dy = from(i, 1) - to(t, 1);
      const double dist = dx * dx + dy * dy;
      if (dist < best) {
        best = dist;
        arg = i;
      }
    }
    out[t] = arg;
  }
  return out;
}

Prediction predict(const SegmentationResult& result, const Eigen::MatrixXd& train_S,
                   const Eigen::MatrixXd& X, const Eigen::MatrixXd& S) {
  if (static_cast<Eigen::Index>(result.labels.size()) != train_S.rows()) {
    throw DomainError("result labels do not align with the training locations");
  }
  const auto nn = nearest_rows(train_S, S);
  Prediction out;
  out.labels.resize(nn.size());
  out.y_hat.resize(static_cast<Eigen::Index>(nn.size()));
  for (std::size_t t = 0; t < nn.size(); ++t) {
    const int lab = result.labels[nn[t]];
    out.labels[t] = lab;
    out.y_hat[static_cast<Eigen::Index>(t)] = X.row(static_cast<Eigen::Index>(t)).dot(result.beta_hat.row(lab));
  }
  return out;
}

}  // namespace rsd
