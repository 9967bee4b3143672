#include "rsd/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rsd/errors.hpp"

namespace rsd::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          field.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  if (quoted) throw ValidationError("line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(std::move(field));
  return out;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

double parse_number(const std::string& s, std::size_t row, const std::string& column) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && *(last - 1) == ' ') --last;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ValidationError("row " + std::to_string(row) + ": column '" + column +
                          "' is not a number: '" + s + "'");
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

std::vector<int> read_label_file(const fs::path& path, std::vector<std::string>* ids) {
  const CsvTable t = read_csv(path);
  const std::size_t id_col = t.column("id");
  const std::size_t seg_col = t.column("segment");
  std::vector<int> labels;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double v = parse_number(t.rows[r][seg_col], r + 2, "segment");
    labels.push_back(static_cast<int>(v) - 1);
    if (ids != nullptr) ids->push_back(t.rows[r][id_col]);
  }
  return labels;
}

void write_label_file(const fs::path& path, const std::vector<std::string>& ids,
                      const std::vector<int>& labels) {
  CsvTable t;
  t.header = {"id", "segment"};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t.rows.push_back({ids[i], std::to_string(labels[i] + 1)});
  }
  write_csv(path, t);
}

RawData raw_from_dataset(const Dataset& d) {
  RawData raw;
  raw.feature_names = d.feature_names;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    RawRecord r;
    r.id = d.ids.empty() ? std::to_string(i + 1) : d.ids[i];
    r.lon = d.S(i, 0);
    r.lat = d.S(i, 1);
    r.rating_mean = d.y[i];
    r.rating_count = d.counts[i];
    for (Eigen::Index j = 0; j < d.p(); ++j) r.features.push_back(d.X(i, j));
    raw.records.push_back(std::move(r));
  }
  return raw;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw ValidationError("missing required column '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line, line_no);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ValidationError(path.filename().string() + " line " + std::to_string(line_no) +
                            ": expected " + std::to_string(t.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw ValidationError(path.string() + " has no header row");
  return t;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k > 0) out << ',';
      out << quote_if_needed(fields[k]);
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

RawData read_records(const fs::path& path) {
  const CsvTable t = read_csv(path);
  static const char* kRequired[] = {"id", "lat", "lon", "rating_mean", "rating_count"};
  for (std::size_t k = 0; k < 5; ++k) {
    if (t.header.size() <= k || t.header[k] != kRequired[k]) {
      throw ValidationError("header must start with id,lat,lon,rating_mean,rating_count");
    }
  }
  RawData raw;
  raw.feature_names.assign(t.header.begin() + 5, t.header.end());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::size_t row_no = r + 2;  // header is line 1
    RawRecord rec;
    rec.id = f[0];
    if (rec.id.empty()) throw ValidationError("row " + std::to_string(row_no) + ": empty id");
    rec.lat = parse_number(f[1], row_no, "lat");
    rec.lon = parse_number(f[2], row_no, "lon");
    rec.rating_mean = parse_number(f[3], row_no, "rating_mean");
    rec.rating_count = parse_number(f[4], row_no, "rating_count");
    if (rec.rating_count < 1.0 || rec.rating_count != std::floor(rec.rating_count)) {
      throw ValidationError("row " + std::to_string(row_no) +
                            ": rating_count must be a positive integer");
    }
    for (std::size_t k = 5; k < f.size(); ++k) {
      rec.features.push_back(parse_number(f[k], row_no, t.header[k]));
    }
    const bool finite = std::isfinite(rec.lat) && std::isfinite(rec.lon) &&
                        std::isfinite(rec.rating_mean);
    if (!finite) throw ValidationError("row " + std::to_string(row_no) + ": non-finite value");
    raw.records.push_back(std::move(rec));
  }
  return raw;
}

void write_records(const fs::path& path, const RawData& data) {
  CsvTable t;
  t.header = {"id", "lat", "lon", "rating_mean", "rating_count"};
  t.header.insert(t.header.end(), data.feature_names.begin(), data.feature_names.end());
  for (const RawRecord& r : data.records) {
    std::vector<std::string> row = {r.id, format_number(r.lat), format_number(r.lon),
                                    format_number(r.rating_mean), format_number(r.rating_count)};
    for (double v : r.features) row.push_back(format_number(v));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

Eigen::Vector2d LocationTransform::apply(double lat, double lon) const {
  return {(lon - lon_min) / range, (lat - lat_min) / range};
}

nlohmann::json LocationTransform::to_json() const {
  return {{"lon_min", lon_min}, {"lat_min", lat_min}, {"range", range}};
}

LocationTransform LocationTransform::from_json(const nlohmann::json& j) {
  return {j.at("lon_min").get<double>(), j.at("lat_min").get<double>(), j.at("range").get<double>()};
}

LocationTransform fit_transform(const std::vector<RawRecord>& records) {
  if (records.size() < 2) throw ValidationError("need at least two locations to rescale");
  double lon_lo = records[0].lon, lon_hi = records[0].lon;
  double lat_lo = records[0].lat, lat_hi = records[0].lat;
  for (const RawRecord& r : records) {
    lon_lo = std::min(lon_lo, r.lon);
    lon_hi = std::max(lon_hi, r.lon);
    lat_lo = std::min(lat_lo, r.lat);
    lat_hi = std::max(lat_hi, r.lat);
  }
  const double range = std::max(lon_hi - lon_lo, lat_hi - lat_lo);
  if (!(range > 0.0)) throw ValidationError("locations have zero spatial extent");
  return {lon_lo, lat_lo, range};
}

Dataset to_dataset(const RawData& raw, const LocationTransform& tf, bool intercept, bool validate,
                   int* outside) {
  const auto n = static_cast<Eigen::Index>(raw.records.size());
  const auto q = static_cast<Eigen::Index>(raw.feature_names.size());
  const Eigen::Index p = q + (intercept ? 1 : 0);
  Dataset d;
  d.y.resize(n);
  d.X.resize(n, p);
  d.S.resize(n, 2);
  d.counts.resize(n);
  d.has_intercept = intercept;
  if (intercept) d.feature_names.push_back("intercept");
  d.feature_names.insert(d.feature_names.end(), raw.feature_names.begin(), raw.feature_names.end());
  int out_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const RawRecord& r = raw.records[i];
    if (static_cast<Eigen::Index>(r.features.size()) != q) {
      throw ValidationError("row " + std::to_string(i + 2) + ": wrong number of features");
    }
    d.ids.push_back(r.id);
    d.y[i] = r.rating_mean;
    d.counts[i] = r.rating_count;
    Eigen::Index col = 0;
    if (intercept) d.X(i, col++) = 1.0;
    for (double v : r.features) d.X(i, col++) = v;
    Eigen::Vector2d s = tf.apply(r.lat, r.lon);
    if ((s.array() < 0.0).any() || (s.array() > 1.0).any()) {
      ++out_count;
      if (validate) s = s.cwiseMax(0.0).cwiseMin(1.0);
    }
    d.S.row(i) = s.transpose();
  }
  if (outside != nullptr) *outside = out_count;
  if (validate) d.validate();
  return d;
}

double cspan(int numcate, double dbar) {
  if (numcate < 1) throw DomainError("numcate must be at least 1");
  if (!(dbar >= 0.0 && dbar <= 1.0)) throw DomainError("mean cosine distance must lie in [0, 1]");
  return numcate == 1 ? 0.0 : numcate * dbar;
}

nlohmann::json RunConfig::to_json() const {
  return {{"prior", to_string(hp.prior_kind)},
          {"K", hp.K},
          {"M", hp.M},
          {"tau0_sq", hp.tau0_sq},
          {"a_tau", hp.a_tau},
          {"b_tau", hp.b_tau},
          {"a_sigma", hp.a_sigma},
          {"b_sigma", hp.b_sigma},
          {"c", hp.c},
          {"lambda", hp.lambda},
          {"bU_prior", {hp.bU_prior.shape, hp.bU_prior.rate}},
          {"bV_prior", {hp.bV_prior.shape, hp.bV_prior.rate}},
          {"update_dp_rates", hp.update_dp_rates},
          {"iters", chain.n_iters},
          {"burnin", chain.burn_in},
          {"thin", chain.thin},
          {"seed", chain.seed},
          {"init", to_string(chain.init)},
          {"chains", chain.chains},
          {"intercept", intercept},
          {"cv_folds", cv_folds}};
}

void RunConfig::merge_json(const nlohmann::json& j) {
  try {
    if (j.contains("prior")) hp.prior_kind = prior_kind_from_string(j["prior"].get<std::string>());
    if (j.contains("K")) hp.K = j["K"].get<int>();
    if (j.contains("M")) hp.M = j["M"].get<int>();
    if (j.contains("tau0_sq")) hp.tau0_sq = j["tau0_sq"].get<double>();
    if (j.contains("a_tau")) hp.a_tau = j["a_tau"].get<double>();
    if (j.contains("b_tau")) hp.b_tau = j["b_tau"].get<double>();
    if (j.contains("a_sigma")) hp.a_sigma = j["a_sigma"].get<double>();
    if (j.contains("b_sigma")) hp.b_sigma = j["b_sigma"].get<double>();
    if (j.contains("c")) hp.c = j["c"].get<double>();
    if (j.contains("lambda")) hp.lambda = j["lambda"].get<double>();
    if (j.contains("bU_prior")) hp.bU_prior = {j["bU_prior"][0].get<double>(), j["bU_prior"][1].get<double>()};
    if (j.contains("bV_prior")) hp.bV_prior = {j["bV_prior"][0].get<double>(), j["bV_prior"][1].get<double>()};
    if (j.contains("update_dp_rates")) hp.update_dp_rates = j["update_dp_rates"].get<bool>();
    if (j.contains("iters")) chain.n_iters = j["iters"].get<int>();
    if (j.contains("burnin")) chain.burn_in = j["burnin"].get<int>();
    if (j.contains("thin")) chain.thin = j["thin"].get<int>();
    if (j.contains("seed")) chain.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("init")) chain.init = init_kind_from_string(j["init"].get<std::string>());
    if (j.contains("chains")) chain.chains = j["chains"].get<int>();
    if (j.contains("intercept")) intercept = j["intercept"].get<bool>();
    if (j.contains("cv_folds")) cv_folds = j["cv_folds"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
}

void RunConfig::validate() const {
  hp.validate();
  chain.validate();
  if (cv_folds < 2) throw ValidationError("cv_folds must be at least 2");
}

RunConfig load_config(const fs::path& path) {
  RunConfig cfg;
  cfg.merge_json(read_json(path));
  return cfg;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_scenario(const fs::path& dir, const sim::SimScenario& sc) {
  fs::create_directories(dir);
  write_records(dir / "train.csv", raw_from_dataset(sc.train));
  write_records(dir / "test.csv", raw_from_dataset(sc.test));
  write_label_file(dir / "truth_labels_train.csv", sc.train.ids, sc.true_labels_train);
  write_label_file(dir / "truth_labels_test.csv", sc.test.ids, sc.true_labels_test);
  CsvTable beta;
  beta.header = {"segment"};
  beta.header.insert(beta.header.end(), sc.train.feature_names.begin(), sc.train.feature_names.end());
  for (Eigen::Index s = 0; s < sc.true_beta.rows(); ++s) {
    std::vector<std::string> row = {std::to_string(s + 1)};
    for (Eigen::Index j = 0; j < sc.true_beta.cols(); ++j) row.push_back(format_number(sc.true_beta(s, j)));
    beta.rows.push_back(std::move(row));
  }
  write_csv(dir / "truth_beta.csv", beta);
  const sim::SimFactors& f = sc.factors;
  write_json(dir / "factors.json", {{"name", f.name()},
                                    {"K_star", f.K_star},
                                    {"similarity", sim::to_string(f.similarity)},
                                    {"density", sim::to_string(f.density)},
                                    {"n", f.n()},
                                    {"p", f.p},
                                    {"active_count", f.active_count},
                                    {"sigma0_sq", f.sigma0_sq},
                                    {"seed", f.seed}});
}

ScenarioTruth read_truth(const fs::path& dir) {
  ScenarioTruth t;
  t.labels_train = read_label_file(dir / "truth_labels_train.csv", &t.train_ids);
  t.labels_test = read_label_file(dir / "truth_labels_test.csv", &t.test_ids);
  const CsvTable beta = read_csv(dir / "truth_beta.csv");
  t.feature_names.assign(beta.header.begin() + 1, beta.header.end());
  t.beta.resize(static_cast<Eigen::Index>(beta.rows.size()), static_cast<Eigen::Index>(t.feature_names.size()));
  for (std::size_t r = 0; r < beta.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.feature_names.size(); ++c) {
      t.beta(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_number(beta.rows[r][c + 1], r + 2, beta.header[c + 1]);
    }
  }
  t.factors = read_json(dir / "factors.json");
  return t;
}

nlohmann::json FittedModel::to_json() const {
  const SegmentationResult& r = result;
  nlohmann::json j = {{"transform", transform.to_json()},
                      {"intercept", intercept},
                      {"prior", to_string(prior)},
                      {"feature_names", feature_names},
                      {"K_hat", r.K_hat},
                      {"selected_iter", r.selected_iter},
                      {"labels", r.labels},
                      {"train_S", matrix_to_json(train_S)},
                      {"beta_hat", matrix_to_json(r.beta_hat)},
                      {"sigma_hat_sq", std::vector<double>(r.sigma_hat_sq.data(), r.sigma_hat_sq.data() + r.sigma_hat_sq.size())}};
  return j;
}

FittedModel FittedModel::from_json(const nlohmann::json& j) {
  try {
    FittedModel m;
    m.transform = LocationTransform::from_json(j.at("transform"));
    m.intercept = j.at("intercept").get<bool>();
    m.prior = prior_kind_from_string(j.at("prior").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.result.K_hat = j.at("K_hat").get<int>();
    m.result.selected_iter = j.at("selected_iter").get<Eigen::Index>();
    m.result.labels = j.at("labels").get<std::vector<int>>();
    m.train_S = matrix_from_json(j.at("train_S"));
    m.result.beta_hat = matrix_from_json(j.at("beta_hat"));
    const auto sig = j.at("sigma_hat_sq").get<std::vector<double>>();
    m.result.sigma_hat_sq = Eigen::Map<const Eigen::VectorXd>(sig.data(), static_cast<Eigen::Index>(sig.size()));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace rsd::io
