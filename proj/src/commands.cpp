#include "rsd/commands.hpp"

#include <algorithm>
#include <cstdio>

#include "rsd/errors.hpp"
#include "rsd/gibbs.hpp"
#include "rsd/postprocess.hpp"

namespace rsd::cmd {

namespace {

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw ValidationError("missing file " + p.string());
}

io::CsvTable labels_table(const std::vector<std::string>& ids, const std::vector<int>& labels) {
  io::CsvTable t;
  t.header = {"id", "segment"};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t.rows.push_back({ids[i], std::to_string(labels[i] + 1)});
  }
  return t;
}

io::CsvTable coefficient_table(const SegmentationResult& r,
                               const std::vector<std::string>& names) {
  io::CsvTable t;
  t.header = {"segment", "feature", "estimate", "lower95", "upper95"};
  for (int s = 0; s < r.K_hat; ++s) {
    for (Eigen::Index j = 0; j < r.beta_hat.cols(); ++j) {
      t.rows.push_back({std::to_string(s + 1), names[j], io::format_number(r.beta_hat(s, j)),
                        r.has_intervals ? io::format_number(r.lower(s, j)) : "",
                        r.has_intervals ? io::format_number(r.upper(s, j)) : ""});
    }
  }
  return t;
}

Eigen::MatrixXd slope_block(const io::FittedModel& m) {
  const Eigen::MatrixXd& b = m.result.beta_hat;
  return m.intercept ? Eigen::MatrixXd(b.rightCols(b.cols() - 1)) : b;
}

struct TestSet {
  Dataset data;
  io::ScenarioTruth truth;
};

TestSet load_test(const fs::path& scenario_dir, const io::LocationTransform& tf, bool intercept) {
  require_file(scenario_dir / "test.csv");
  TestSet t;
  const io::RawData raw = io::read_records(scenario_dir / "test.csv");
  t.data = io::to_dataset(raw, tf, intercept, false);
  t.truth = io::read_truth(scenario_dir);
  if (t.truth.test_ids != t.data.ids) {
    throw ValidationError(scenario_dir.string() + ": test ids do not match truth_labels_test.csv");
  }
  return t;
}

}  // namespace

FitSummary fit(const fs::path& data_csv, const io::RunConfig& cfg, const fs::path& out,
               std::ostream& log) {
  cfg.validate();
  const io::RawData raw = io::read_records(data_csv);
  const io::LocationTransform tf = io::fit_transform(raw.records);
  const Dataset data = io::to_dataset(raw, tf, cfg.intercept);
  if (data.n() < 2) throw ValidationError("need at least two observations");

  const int report_every = std::max(1, cfg.chain.n_iters / 10);
  const ChainTrace trace =
      run_chain(data, cfg.hp, cfg.chain, [&](int chain, int it, const MCMCState& st) {
        if ((it + 1) % report_every == 0) {
          log << "chain " << chain + 1 << " iter " << it + 1 << "/" << cfg.chain.n_iters
              << "  non-empty segments " << count_nonempty(st.g, st.K()) << '\n';
    }
  });
  RngStream post_rng = RngStream(cfg.chain.seed).split(1);
  const SegmentationResult result = postprocess(trace, data, cfg.hp, post_rng, cfg.cv_folds);

  fs::create_directories(out);
  io::write_csv(out / "labels.csv", labels_table(data.ids, result.labels));
  io::write_csv(out / "coefficients.csv", coefficient_table(result, data.feature_names));

  io::CsvTable tr;
  tr.header = {"chain", "iter", "k_nonempty"};
  for (std::size_t c = 0; c < trace.k_nonempty.size(); ++c) {
    for (std::size_t it = 0; it < trace.k_nonempty[c].size(); ++it) {
      tr.rows.push_back({std::to_string(c + 1), std::to_string(it + 1),
                         std::to_string(trace.k_nonempty[c][it])});
    }
  }
  io::write_csv(out / "trace.csv", tr);

  std::vector<int> fallback_segments;
  for (std::size_t s = 0; s < result.ridge_fallback.size(); ++s) {
    if (result.ridge_fallback[s]) fallback_segments.push_back(static_cast<int>(s) + 1);
  }
  const Diagnostics& d = trace.diagnostics;
  const nlohmann::json run = {
      {"version", kVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                    "." + std::to_string(EIGEN_MINOR_VERSION)},
      {"seed", cfg.chain.seed},
      {"data", data_csv.filename().string()},
      {"n", data.n()},
      {"config", cfg.to_json()},
      {"K_hat", result.K_hat},
      {"selected_chain", trace.stored_chain.at(static_cast<std::size_t>(result.selected_iter)) + 1},
      {"selected_iter", trace.stored_iters.at(static_cast<std::size_t>(result.selected_iter)) + 1},
      {"ridge_fallback_segments", fallback_segments},
      {"diagnostics",
       {{"membership_fallbacks", d.membership_fallbacks},
        {"zero_beta_clamps", d.zero_beta_clamps},
        {"stick_clamps", d.stick_clamps}}}};
  io::write_json(out / "run.json", run);

  io::FittedModel model;
  model.transform = tf;
  model.intercept = cfg.intercept;
  model.feature_names = raw.feature_names;
  model.train_S = data.S;
  model.result = result;
  model.prior = cfg.hp.prior_kind;
  io::write_json(out / "model.json", model.to_json());

  log << "K_hat " << result.K_hat << '\n';
  return {result.K_hat, data.n()};
}

std::string cell_dir_name(int cell, const sim::SimFactors& f) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "cell%02d_", cell);
  return buf + f.name();
}

int simulate(const SimulateOptions& opts) {
  std::vector<std::pair<std::string, sim::SimFactors>> cells;
  if (opts.high_dim_p) {
    const sim::SimFactors f = sim::high_dim_factors(*opts.high_dim_p, opts.seed);
    cells.emplace_back("highdim_" + f.name(), f);
  } else {
    const auto grid = sim::enumerate_factor_grid(opts.seed);
    if (opts.grid_cell) {
      const int c = *opts.grid_cell;
      if (c < 1 || c > static_cast<int>(grid.size())) {
        throw ValidationError("--grid-cell must lie in [1, " + std::to_string(grid.size()) + "]");
      }
      cells.emplace_back(cell_dir_name(c, grid[c - 1]), grid[c - 1]);
    } else {
      for (std::size_t c = 0; c < grid.size(); ++c) {
        cells.emplace_back(cell_dir_name(static_cast<int>(c) + 1, grid[c]), grid[c]);
      }
    }
  }
  for (auto& [name, f] : cells) {
    if (opts.sigma0_sq) f.sigma0_sq = *opts.sigma0_sq;
    f.validate();
  }
  fs::create_directories(opts.out);

  std::vector<std::string> errors(cells.size());
  const auto count = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < count; ++c) {
    try {
      const auto& [name, f] = cells[static_cast<std::size_t>(c)];
      io::write_scenario(opts.out / name, sim::generate_scenario(f));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(c)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  return static_cast<int>(cells.size());
}

EvalReport evaluate_fit(const fs::path& scenario_dir, const fs::path& fit_dir) {
  require_file(fit_dir / "model.json");
  const io::FittedModel model = io::FittedModel::from_json(io::read_json(fit_dir / "model.json"));
  const TestSet test = load_test(scenario_dir, model.transform, model.intercept);
  if (test.data.p() != model.result.beta_hat.cols()) {
    throw ValidationError("feature count of test.csv does not match the fitted model");
  }
  const Prediction pred = rsd::predict(model.result, model.train_S, test.data.X, test.data.S);
  const Eigen::MatrixXd slopes = slope_block(model);
  if (slopes.cols() != test.truth.beta.cols()) {
    throw ValidationError("fitted coefficients and truth_beta.csv have different widths");
  }
  EvalReport r;
  const DiffK dk = diffk(model.result.K_hat, test.truth.factors.at("K_star").get<int>());
  r.diffk_signed = dk.signed_diff;
  r.diffk_abs = dk.abs_diff;
  r.ari = ari(test.truth.labels_test, pred.labels);
  r.rmspe = rmspe(test.data.y, pred.y_hat);
  r.rmse_coeff = rmse_coeff(test.truth.beta, slopes, test.truth.labels_test, pred.labels);
  return r;
}

EvalReport evaluate_truth(const fs::path& scenario_dir) {
  const TestSet test = load_test(scenario_dir, io::LocationTransform{}, false);
  const auto& labels = test.truth.labels_test;
  Eigen::VectorXd y_hat(test.data.n());
  for (Eigen::Index i = 0; i < test.data.n(); ++i) {
    y_hat[i] = test.data.X.row(i).dot(test.truth.beta.row(labels[i]));
  }
  EvalReport r;
  const int K_star = test.truth.factors.at("K_star").get<int>();
  const DiffK dk = diffk(static_cast<int>(test.truth.beta.rows()), K_star);
  r.diffk_signed = dk.signed_diff;
  r.diffk_abs = dk.abs_diff;
  r.ari = ari(labels, labels);
  r.rmspe = rmspe(test.data.y, y_hat);
  r.rmse_coeff = rmse_coeff(test.truth.beta, test.truth.beta, labels, labels);
  return r;
}

int evaluate_aggregate(const fs::path& scenario_root, const fs::path& fit_root,
                       const std::optional<fs::path>& reference_root, const fs::path& out_csv) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(scenario_root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "factors.json") &&
        fs::exists(fit_root / entry.path().filename() / "model.json")) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw ValidationError("no scenario directories with matching fits found");

  std::vector<EvalReport> own(names.size());
  std::vector<EvalReport> ref(names.size());
  std::vector<std::string> errors(names.size());
  const auto count = static_cast<long>(names.size());
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < count; ++c) {
    const auto k = static_cast<std::size_t>(c);
    try {
      own[k] = evaluate_fit(scenario_root / names[k], fit_root / names[k]);
      if (reference_root) ref[k] = evaluate_fit(scenario_root / names[k], *reference_root / names[k]);
    } catch (const std::exception& e) {
      errors[k] = names[k] + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (e.empty()) continue;
    throw ValidationError(e);
  }

  io::CsvTable t;
  t.header = {"cell", "diffk_signed", "diffk_abs", "ari", "rmspe", "rmse_coeff"};
  if (reference_root) {
    for (const char* h : {"delta_diffk_abs", "delta_ari", "delta_rmspe", "delta_rmse_coeff"}) {
      t.header.emplace_back(h);
    }
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    const EvalReport& r = own[k];
    std::vector<std::string> row = {names[k], std::to_string(r.diffk_signed),
                                    std::to_string(r.diffk_abs), io::format_number(r.ari),
                                    io::format_number(r.rmspe), io::format_number(r.rmse_coeff)};
    if (reference_root) {
      const EvalReport& b = ref[k];
      row.push_back(std::to_string(r.diffk_abs - b.diffk_abs));
      row.push_back(io::format_number(r.ari - b.ari));
      row.push_back(io::format_number(r.rmspe - b.rmspe));
      row.push_back(io::format_number(r.rmse_coeff - b.rmse_coeff));
    }
    t.rows.push_back(std::move(row));
  }
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  io::write_csv(out_csv, t);
  return static_cast<int>(names.size());
}

int predict(const fs::path& model_dir, const fs::path& data_csv, const fs::path& out_csv,
            std::ostream& log) {
  require_file(model_dir / "model.json");
  const io::FittedModel model = io::FittedModel::from_json(io::read_json(model_dir / "model.json"));
  const io::RawData raw = io::read_records(data_csv);
  if (raw.feature_names != model.feature_names) {
    throw ValidationError("feature columns differ from the fitted model");
  }
  int outside = 0;
  const Dataset data = io::to_dataset(raw, model.transform, model.intercept, false, &outside);
  if (outside > 0) {
    log << "warning: " << outside
        << " point(s) fall outside the training box and are extrapolated\n";
  }
  const Prediction pred = rsd::predict(model.result, model.train_S, data.X, data.S);
  io::CsvTable t;
  t.header = {"id", "segment", "y_hat"};
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    t.rows.push_back({data.ids[i], std::to_string(pred.labels[i] + 1),
                      io::format_number(pred.y_hat[i])});
  }
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  io::write_csv(out_csv, t);
  return outside;
}

}  // namespace rsd::cmd
