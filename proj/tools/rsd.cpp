#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rsd/commands.hpp"
#include "rsd/errors.hpp"

namespace {

namespace fs = std::filesystem;

// Exit codes.
constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct FitFlags {
  std::string data, config, out, prior, init;
  std::optional<int> iters, burnin, thin, K, M, cv_folds, chains;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  bool no_intercept = false;
  bool quiet = false;
};

rsd::io::RunConfig build_config(const FitFlags& f) {
  rsd::io::RunConfig cfg;
  if (!f.config.empty()) cfg = rsd::io::load_config(f.config);
  if (!f.prior.empty()) cfg.hp.prior_kind = rsd::prior_kind_from_string(f.prior);
  if (f.iters) cfg.chain.n_iters = *f.iters;
  if (f.burnin) cfg.chain.burn_in = *f.burnin;
  if (f.thin) cfg.chain.thin = *f.thin;
  if (f.K) cfg.hp.K = *f.K;
  if (f.M) cfg.hp.M = *f.M;
  if (f.lambda) cfg.hp.lambda = *f.lambda;
  if (f.seed) cfg.chain.seed = *f.seed;
  if (f.cv_folds) cfg.cv_folds = *f.cv_folds;
  if (f.chains) cfg.chain.chains = *f.chains;
  if (!f.init.empty()) cfg.chain.init = rsd::init_kind_from_string(f.init);
  if (f.no_intercept) cfg.intercept = false;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial market segmentation with a regularized Bayesian mixture regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rsd::cmd::kVersion);

  FitFlags ff;
  auto* fit = app.add_subcommand("fit", "Run the sampler and post-processing on a data CSV");
  fit->add_option("--data", ff.data, "Observation CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--config", ff.config, "JSON config; flags override it")->check(CLI::ExistingFile);
  fit->add_option("--prior", ff.prior, "Coefficient prior")->check(CLI::IsMember({"ridge", "lasso"}));
  fit->add_option("--iters", ff.iters, "Total iterations");
  fit->add_option("--burnin", ff.burnin, "Burn-in iterations");
  fit->add_option("--thin", ff.thin, "Thinning interval");
  fit->add_option("--K", ff.K, "Segment truncation level");
  fit->add_option("--M", ff.M, "Component truncation level");
  fit->add_option("--lambda", ff.lambda, "Lasso prior rate");
  fit->add_option("--seed", ff.seed, "Random seed");
  fit->add_option("--init", ff.init, "Starting memberships")->check(CLI::IsMember({"auto", "spatial", "uniform"}));
  fit->add_option("--chains", ff.chains, "Independent chains pooled before selection");
  fit->add_option("--cv-folds", ff.cv_folds, "Folds for lasso re-estimation");
  fit->add_flag("--no-intercept", ff.no_intercept, "Do not prepend an intercept column");
  fit->add_flag("--quiet", ff.quiet, "No progress output");
  fit->add_option("--out", ff.out, "Output directory")->required();

  rsd::cmd::SimulateOptions so;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Write synthetic scenarios");
  simulate->add_option("--out", so.out, "Output directory")->required();
  simulate->add_option("--seed", sim_seed, "Master seed");
  simulate->add_option("--grid-cell", so.grid_cell, "Single cell of the 32-cell grid (1-based)");
  simulate->add_option("--high-dim", so.high_dim_p, "High-dimensional preset with this many features")
      ->excludes("--grid-cell");
  simulate->add_option("--sigma0-sq", so.sigma0_sq, "Override the noise variance");

  std::string scenario, fit_dir, truth_dir, scenario_root, fit_root, reference_root, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score fits against scenario truth");
  auto* o_scen = evaluate->add_option("--scenario", scenario, "Scenario directory");
  evaluate->add_option("--fit", fit_dir, "Fit output directory")->needs(o_scen);
  auto* o_truth = evaluate->add_option("--truth", truth_dir, "Score the truth of this scenario");
  auto* o_sroot = evaluate->add_option("--scenario-root", scenario_root, "Directory of scenarios");
  auto* o_froot = evaluate->add_option("--fit-root", fit_root, "Directory of fits")->needs(o_sroot);
  evaluate->add_option("--reference", reference_root, "Fit root to compute deltas against")
      ->needs(o_froot);
  evaluate->add_option("--out", eval_out, "Output file (JSON, or CSV in aggregate mode)");
  o_sroot->needs(o_froot);
  o_scen->excludes(o_truth)->excludes(o_sroot);
  o_truth->excludes(o_sroot);

  std::string model_dir, pred_data, pred_out;
  auto* predict = app.add_subcommand("predict", "Label and predict new points");
  predict->add_option("--model", model_dir, "Fit output directory")->required();
  predict->add_option("--data", pred_data, "CSV of new points")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pred_out, "Predictions CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*fit) {
      const auto cfg = build_config(ff);
      std::ostream null_stream(nullptr);
      std::ostream& log = ff.quiet ? null_stream : std::cerr;
      const auto summary = rsd::cmd::fit(ff.data, cfg, ff.out, log);
      std::cout << "fit: n=" << summary.n << " K_hat=" << summary.K_hat << " -> " << ff.out << '\n';
    } else if (*simulate) {
      if (sim_seed) so.seed = *sim_seed;
      const int count = rsd::cmd::simulate(so);
      std::cout << "simulate: wrote " << count << " scenario(s) to " << so.out.string() << '\n';
    } else if (*evaluate) {
      if (!scenario_root.empty()) {
        const fs::path out = eval_out.empty() ? fs::path(fit_root) / "evaluation.csv" : fs::path(eval_out);
        std::optional<fs::path> ref;
        if (!reference_root.empty()) ref = reference_root;
        const int rows = rsd::cmd::evaluate_aggregate(scenario_root, fit_root, ref, out);
        std::cout << "evaluate: " << rows << " cell(s) -> " << out.string() << '\n';
      } else {
        rsd::EvalReport report;
        if (!truth_dir.empty()) {
          report = rsd::cmd::evaluate_truth(truth_dir);
        } else if (!scenario.empty() && !fit_dir.empty()) {
          report = rsd::cmd::evaluate_fit(scenario, fit_dir);
        } else {
          throw rsd::ValidationError("evaluate needs --scenario with --fit, --truth, or --scenario-root with --fit-root");
        }
        const std::string text = report.to_json().dump(2);
        if (eval_out.empty()) {
          std::cout << text << '\n';
        } else {
          rsd::io::write_json(eval_out, report.to_json());
        }
      }
    } else if (*predict) {
      rsd::cmd::predict(model_dir, pred_data, pred_out, std::cerr);
    }
  } catch (const rsd::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const rsd::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
