#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rsd/model.hpp"
#include "rsd/postprocess.hpp"
#include "rsd/simgen.hpp"

namespace rsd::io {

namespace fs = std::filesystem;

/// Parsed CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws ValidationError
};

CsvTable read_csv(const fs::path& path);
void write_csv(const fs::path& path, const CsvTable& table);

/// Shortest round-trip representation of a double.
std::string format_number(double v);

/// One input row: id, lat, lon, rating_mean, rating_count, then features.
struct RawRecord {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  double rating_mean = 0.0;
  double rating_count = 1.0;
  std::vector<double> features;
};

struct RawData {
  std::vector<std::string> feature_names;
  std::vector<RawRecord> records;
};

/// Reads the observation schema; errors name the offending row.
RawData read_records(const fs::path& path);
void write_records(const fs::path& path, const RawData& data);

/// lon -> x, lat -> y. Both axes are shifted to the bounding-box minimum and
/// divided by the larger of the two ranges.
struct LocationTransform {
  double lon_min = 0.0;
  double lat_min = 0.0;
  double range = 1.0;

  Eigen::Vector2d apply(double lat, double lon) const;
  nlohmann::json to_json() const;
  static LocationTransform from_json(const nlohmann::json& j);
};

/// Fit the transform to the records' bounding box. Needs two distinct points.
LocationTransform fit_transform(const std::vector<RawRecord>& records);

/// Records to a Dataset, prepending an intercept column when requested.
/// `outside` (optional) receives the count of mapped points outside [0,1]^2,
/// which are clamped only when `clamp` is set.
Dataset to_dataset(const RawData& raw, const LocationTransform& tf, bool intercept,
                   bool validate = true, int* outside = nullptr);

/// Category spanning score: 0 for a single category, numcate * dbar otherwise.
double cspan(int numcate, double dbar);

/// Every knob of a run. Defaults are the model's stated constants.
struct RunConfig {
  HyperParams hp;
  ChainConfig chain{ChainConfig::desk()};
  bool intercept = true;
  int cv_folds = 5;

  nlohmann::json to_json() const;
  /// Overlay keys present in j onto this config.
  void merge_json(const nlohmann::json& j);
  void validate() const;
};

RunConfig load_config(const fs::path& path);

// Scenario files.
void write_scenario(const fs::path& dir, const sim::SimScenario& sc);

struct ScenarioTruth {
  std::vector<std::string> train_ids;
  std::vector<int> labels_train;
  std::vector<std::string> test_ids;
  std::vector<int> labels_test;
  Eigen::MatrixXd beta;  // K* x p, zero-based segment rows
  std::vector<std::string> feature_names;
  nlohmann::json factors;
};

ScenarioTruth read_truth(const fs::path& dir);

/// Fitted model persisted for predict/evaluate.
struct FittedModel {
  LocationTransform transform;
  bool intercept = true;
  std::vector<std::string> feature_names;  // excluding the intercept
  Eigen::MatrixXd train_S;
  SegmentationResult result;
  PriorKind prior = PriorKind::ridge;

  nlohmann::json to_json() const;
  static FittedModel from_json(const nlohmann::json& j);
};

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

}  // namespace rsd::io
