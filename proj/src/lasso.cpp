#include "rsd/lasso.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "rsd/errors.hpp"

namespace rsd::lasso {

namespace {

// Centered and scaled copy of the problem in which coordinate descent runs.
struct Transformed {
  Eigen::MatrixXd Z;
  Eigen::VectorXd r0;     // centered response
  Eigen::VectorXd wn;     // normalized weights
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  Eigen::VectorXd v;      // sum wn z_j^2
  std::vector<double> pen_factor;  // 0 for unpenalized columns
  Eigen::Index intercept = -1;
  double y_mean = 0.0;

  explicit Transformed(const Problem& pb) {
    const Eigen::Index m = pb.X.rows();
    const Eigen::Index p = pb.X.cols();
    wn = pb.w / pb.w.sum();
    pen_factor.assign(static_cast<std::size_t>(p), 1.0);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!pb.penalize.empty() && !pb.penalize[j]) pen_factor[j] = 0.0;
    }
    for (Eigen::Index j = 0; j < p && intercept < 0; ++j) {
      if (pen_factor[j] != 0.0 || m == 0) continue;
      const double x0 = pb.X(0, j);
      if (x0 != 0.0 && (pb.X.col(j).array() == x0).all()) intercept = j;
    }
    center = Eigen::VectorXd::Zero(p);
    scale = Eigen::VectorXd::Ones(p);
    if (intercept >= 0) {
      center = pb.X.transpose() * wn;
      y_mean = wn.dot(pb.y);
    }
    Z = pb.X.rowwise() - center.transpose();
    if (intercept >= 0) Z.col(intercept).setZero();
    if (pb.standardize) {
      for (Eigen::Index j = 0; j < p; ++j) {
        if (j == intercept) continue;
        const double s = std::sqrt(wn.dot(Z.col(j).cwiseAbs2()));
        if (s > 0.0) {
          scale[j] = s;
          Z.col(j) /= s;
        }
      }
    }
    v = (Z.cwiseAbs2().transpose() * wn);
    r0 = pb.y.array() - y_mean;
  }

  Eigen::VectorXd to_original(const Eigen::VectorXd& b, const Problem& pb) const {
    Eigen::VectorXd beta = b.cwiseQuotient(scale);
    if (intercept >= 0) {
      beta[intercept] = 0.0;
      const double shift = center.dot(beta);
      beta[intercept] = (y_mean - shift) / pb.X(0, intercept);
    }
    return beta;
  }

  Eigen::VectorXd to_internal(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd b = beta.cwiseProduct(scale);
    if (intercept >= 0) b[intercept] = 0.0;
    return b;
  }

  double objective(const Eigen::VectorXd& b, const Eigen::VectorXd& r, double penalty) const {
    double pen = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) pen += pen_factor[j] * std::abs(b[j]);
    return 0.5 * wn.dot(r.cwiseAbs2()) + penalty * pen;
  }
};

}  // namespace

void Problem::validate() const {
  if (y.size() != X.rows() || w.size() != X.rows()) {
    throw DomainError("lasso problem dimensions are inconsistent");
  }
  if (!penalize.empty() && static_cast<Eigen::Index>(penalize.size()) != X.cols()) {
    throw DomainError("penalize mask length must equal the column count");
  }
  if (X.rows() == 0) throw DomainError("lasso problem has no rows");
  if (!(w.array() > 0.0).all()) throw DomainError("lasso weights must be positive");
  if (!(penalty >= 0.0)) throw DomainError("lasso penalty must be non-negative");
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

Fit fit(const Problem& problem, const FitOptions& opts) {
  problem.validate();
  if (!(opts.tol > 0.0)) throw DomainError("lasso tolerance must be positive");
  const Transformed tr(problem);
  const Eigen::Index p = problem.X.cols();

  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  if (opts.warm_start != nullptr) b = tr.to_internal(*opts.warm_start);
  Eigen::VectorXd r = tr.r0 - tr.Z * b;
  const Eigen::MatrixXd WZ = tr.wn.asDiagonal() * tr.Z;

  Fit out;
  if (opts.record_objective) out.objective.push_back(tr.objective(b, r, problem.penalty));
  for (out.sweeps = 0; out.sweeps < opts.max_sweeps;) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (tr.v[j] <= 0.0) {
        b[j] = 0.0;
        continue;
      }
      const double rho = WZ.col(j).dot(r) + tr.v[j] * b[j];
      const double updated = soft_threshold(rho, problem.penalty * tr.pen_factor[j]) / tr.v[j];
      const double delta = updated - b[j];
      if (delta != 0.0) {
        r.noalias() -= delta * tr.Z.col(j);
        b[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    ++out.sweeps;
    if (opts.record_objective) out.objective.push_back(tr.objective(b, r, problem.penalty));
    if (max_change < opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.beta = tr.to_original(b, problem);
  return out;
}

double objective(const Problem& problem, const Eigen::VectorXd& beta) {
  const Transformed tr(problem);
  const Eigen::VectorXd r = problem.y - problem.X * beta;
  double pen = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    pen += tr.pen_factor[j] * tr.scale[j] * std::abs(beta[j]);
  }
  return 0.5 * tr.wn.dot(r.cwiseAbs2()) + problem.penalty * pen;
}

double kkt_residual(const Problem& problem, const Eigen::VectorXd& beta) {
  const Transformed tr(problem);
  const Eigen::VectorXd r = problem.y - problem.X * beta;
  // Gradient of the smooth part in original coordinates.
  const Eigen::VectorXd grad = -(problem.X.transpose() * (tr.wn.array() * r.array()).matrix());
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double t = problem.penalty * tr.pen_factor[j] * tr.scale[j];
    double viol = 0.0;
    if (t == 0.0) {
      viol = std::abs(grad[j]);
    } else if (beta[j] == 0.0) {
      viol = std::max(0.0, std::abs(grad[j]) - t);
    } else {
      viol = std::abs(grad[j] + t * (beta[j] > 0.0 ? 1.0 : -1.0));
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

double lambda_max(const Problem& problem) {
  problem.validate();
  Problem unpen_only = problem;
  unpen_only.penalty = std::numeric_limits<double>::max();
  const Fit base = fit(unpen_only);
  const Transformed tr(problem);
  const Eigen::VectorXd r = problem.y - problem.X * base.beta;
  double hi = 0.0;
  for (Eigen::Index j = 0; j < problem.X.cols(); ++j) {
    if (tr.pen_factor[j] == 0.0) continue;
    hi = std::max(hi, std::abs((tr.wn.array() * tr.Z.col(j).array() * r.array()).sum()));
  }
  return hi;
}

std::vector<int> assign_folds(Eigen::Index m, int folds, RngStream& rng) {
  if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
  if (m < folds) throw DomainError("fewer rows than cross-validation folds");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (Eigen::Index i = m - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> fold(static_cast<std::size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r) fold[perm[r]] = static_cast<int>(r % folds);
  return fold;
}

CvResult cv_select_grid(const Problem& base, int folds, const std::vector<double>& grid,
                        RngStream& rng) {
  base.validate();
  if (grid.empty()) throw DomainError("empty penalty grid");
  const Eigen::Index m = base.X.rows();
  const std::vector<int> fold = assign_folds(m, folds, rng);

  CvResult out;
  out.grid = grid;
  std::vector<double> sse(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
    for (Eigen::Index i = 0; i < m; ++i) (fold[i] == f ? test : train).push_back(i);
    Problem sub;
    sub.X = base.X(train, Eigen::all);
    sub.y = base.y(train);
    sub.w = base.w(train);
    sub.penalize = base.penalize;
    sub.standardize = base.standardize;
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(base.X.cols());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      sub.penalty = grid[k];
      FitOptions opts;
      opts.tol = 1e-7;
      opts.warm_start = &warm;
      warm = fit(sub, opts).beta;
      for (Eigen::Index i : test) {
        const double e = base.y[i] - base.X.row(i).dot(warm);
        sse[k] += base.w[i] * e * e;
      }
    }
  }
  const double wsum = base.w.sum();
  out.cv_error.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.cv_error[k] = sse[k] / wsum;
    if (out.cv_error[k] < out.cv_error[out.best_index]) out.best_index = k;
  }
  out.best_penalty = grid[out.best_index];
  return out;
}

CvResult cv_select(const Problem& base, int folds, int grid_size, RngStream& rng,
                   double min_ratio) {
  if (grid_size < 1) throw DomainError("grid size must be positive");
  const double hi = lambda_max(base);
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  if (grid_size == 1 || hi <= 0.0) {
    std::fill(grid.begin(), grid.end(), hi);
  } else {
    const double step = std::log(min_ratio) / (grid_size - 1);
    for (int k = 0; k < grid_size; ++k) grid[k] = hi * std::exp(step * k);
  }
  return cv_select_grid(base, folds, grid, rng);
}

}  // namespace rsd::lasso
