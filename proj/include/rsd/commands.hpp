#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "rsd/io.hpp"
#include "rsd/metrics.hpp"

// The four CLI commands as library calls. ValidationError means bad input
// (exit code 1); anything else thrown is a runtime failure (exit code 2).
namespace rsd::cmd {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

struct FitSummary {
  int K_hat = 0;
  Eigen::Index n = 0;
};

/// Reads the observation CSV, runs the chain and post-processing, and writes
/// labels.csv, coefficients.csv, trace.csv, run.json and model.json to out.
FitSummary fit(const fs::path& data_csv, const io::RunConfig& cfg, const fs::path& out,
               std::ostream& log);

struct SimulateOptions {
  fs::path out;
  std::uint64_t seed = 1;
  std::optional<int> grid_cell;  // 1-based; all 32 cells when empty
  std::optional<int> high_dim_p;
  std::optional<double> sigma0_sq;
};

/// Writes one directory per scenario; returns how many were written.
int simulate(const SimulateOptions& opts);

/// Directory name of a scenario cell, e.g. "cell07_K3_simlow_denhigh_p4_a4".
std::string cell_dir_name(int cell, const sim::SimFactors& f);

/// Metrics of a fitted model on the scenario's test points.
EvalReport evaluate_fit(const fs::path& scenario_dir, const fs::path& fit_dir);

/// Metrics of the true labels and coefficients on the test points.
EvalReport evaluate_truth(const fs::path& scenario_dir);

/// Per-cell table over every scenario directory under scenario_root that has
/// a matching fit directory. With a reference root, adds delta columns
/// (this run minus reference). Returns the row count.
int evaluate_aggregate(const fs::path& scenario_root, const fs::path& fit_root,
                       const std::optional<fs::path>& reference_root, const fs::path& out_csv);

/// Nearest-neighbour labels and predictions for new points; writes
/// id, segment, y_hat. Returns the number of points outside the stored box.
int predict(const fs::path& model_dir, const fs::path& data_csv, const fs::path& out_csv,
            std::ostream& log);

}  // namespace rsd::cmd
