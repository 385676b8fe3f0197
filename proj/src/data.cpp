#include "dropal/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "dropal/error.hpp"
#include "dropal/rng.hpp"

namespace dropal {

void Dataset::validate() const {
  if (features.rows() != targets.size()) {
    throw Error("dataset feature rows and target count differ");
  }
  if (!features.allFinite() || !targets.allFinite()) {
    throw Error("dataset contains non-finite values");
  }
  if (!feature_names.empty() && feature_names.size() != dim()) {
    throw Error("dataset feature name count does not match columns");
  }
}

Eigen::MatrixXd Dataset::rows(const std::vector<std::size_t>& idx) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), features.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

Eigen::VectorXd Dataset::target_rows(const std::vector<std::size_t>& idx) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = targets[static_cast<Eigen::Index>(idx[i])];
  }
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == delim && !quoted) {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

CsvLoadReport load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error("dataset file is empty: " + path.string());
  std::vector<std::string> header = split_fields(line, options.delimiter);
  for (auto& h : header) h = trim(h);

  const auto target_it = std::find(header.begin(), header.end(), options.target_column);
  if (target_it == header.end()) {
    throw Error("target column '" + options.target_column + "' not found in " + path.string());
  }
  const auto target_col = static_cast<std::size_t>(target_it - header.begin());

  CsvLoadReport report;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != target_col) report.data.feature_names.push_back(header[c]);
  }
  const std::size_t dim = header.size() - 1;

  std::vector<double> values;
  std::vector<double> targets;
  std::vector<double> row(header.size());
  while (std::getline(in, line)) {
    if (trim(line).empty() || line == "\r") continue;
    const auto fields = split_fields(line, options.delimiter);
    bool ok = fields.size() == header.size();
    for (std::size_t c = 0; ok && c < fields.size(); ++c) ok = parse_double(fields[c], row[c]);
    if (!ok) {
      ++report.rejected_rows;
      continue;
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == target_col) {
        targets.push_back(row[c]);
      } else {
        values.push_back(row[c]);
      }
    }
  }
  if (targets.empty()) throw Error("no usable rows in " + path.string());

  const auto n = static_cast<Eigen::Index>(targets.size());
  report.data.features.resize(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(dim); ++c) {
      report.data.features(r, c) = values[static_cast<std::size_t>(r) * dim + static_cast<std::size_t>(c)];
    }
  }
  report.data.targets = Eigen::Map<Eigen::VectorXd>(targets.data(), n);
  report.data.provenance = "csv:" + path.string();
  return report;
}

void write_csv(const std::filesystem::path& path, const Dataset& ds,
               const std::string& target_name) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t c = 0; c < ds.dim(); ++c) {
    out << (c < ds.feature_names.size() ? ds.feature_names[c] : "x" + std::to_string(c)) << ',';
  }
  out << target_name << '\n';
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) out << ds.features(r, c) << ',';
    out << ds.targets[r] << '\n';
  }
}

void SplitSpec::validate() const {
  if (!(train > 0.0 && pool > 0.0 && test > 0.0)) {
    throw ConfigError("split fractions must be positive");
  }
  if (std::abs(train + pool + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Stream stream(derive_seed({seed, 0x5b1177ULL}));
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[stream.below(i)]);
  return perm;
}

SplitIndices partition(const std::vector<std::size_t>& perm, std::size_t n_train,
                       std::size_t n_test) {
  SplitIndices s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.end() - static_cast<std::ptrdiff_t>(n_test), perm.end());
  s.pool.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                perm.end() - static_cast<std::ptrdiff_t>(n_test));
  return s;
}

}  // namespace

SplitIndices split(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 5) throw ConfigError("need at least 5 rows to split, got " + std::to_string(n));
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test * static_cast<double>(n)));
  if (n_train == 0 || n_test == 0 || n_train + n_test >= n) {
    throw ConfigError("split fractions leave an empty bucket for N=" + std::to_string(n));
  }
  return partition(shuffled(n, spec.seed), n_train, n_test);
}

SplitIndices split_with_initial_size(std::size_t n, std::size_t initial_size,
                                     double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  if (n < 5) throw ConfigError("need at least 5 rows to split, got " + std::to_string(n));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (initial_size == 0 || n_test == 0 || initial_size + n_test >= n) {
    throw ConfigError("initial size " + std::to_string(initial_size) +
                      " leaves no pool for N=" + std::to_string(n));
  }
  return partition(shuffled(n, seed), initial_size, n_test);
}

Standardizer Standardizer::fit(const Dataset& ds, const std::vector<std::size_t>& train_idx,
                               bool standardize_target) {
  if (train_idx.empty()) throw ConfigError("standardizer needs at least one training row");
  const Eigen::MatrixXd x = ds.rows(train_idx);
  const Eigen::VectorXd y = ds.target_rows(train_idx);
  const double n = static_cast<double>(train_idx.size());

  Standardizer s;
  s.feature_mean = x.colwise().mean().transpose();
  s.feature_std.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.feature_mean[c]).square().sum() / n;
    const double sd = std::sqrt(var);
    s.feature_std[c] = sd > 0.0 ? sd : 1.0;
  }
  if (standardize_target) {
    s.target_mean = y.mean();
    const double sd = std::sqrt((y.array() - s.target_mean).square().sum() / n);
    s.target_std = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::transform_features(const Eigen::MatrixXd& x) const {
  if (x.cols() != feature_mean.size()) throw ShapeError("standardizer feature count mismatch");
  return (x.rowwise() - feature_mean.transpose()).array().rowwise() /
         feature_std.transpose().array();
}

Eigen::VectorXd Standardizer::transform_targets(const Eigen::VectorXd& y) const {
  return (y.array() - target_mean) / target_std;
}

Eigen::VectorXd Standardizer::inverse_targets(const Eigen::VectorXd& y) const {
  return y.array() * target_std + target_mean;
}

Dataset Standardizer::apply(const Dataset& ds) const {
  Dataset out = ds;
  out.features = transform_features(ds.features);
  out.targets = transform_targets(ds.targets);
  return out;
}

double rosenbrock(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 2) throw ConfigError("rosenbrock needs dimension >= 2");
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    sum += 100.0 * a * a + b * b;
  }
  return sum;
}

Dataset generate_rosenbrock(const RosenbrockSpec& spec) {
  if (spec.samples == 0) throw ConfigError("rosenbrock sample count must be positive");
  if (spec.dim < 2) throw ConfigError("rosenbrock needs dimension >= 2");
  if (!(std::isfinite(spec.lo) && std::isfinite(spec.hi) && spec.lo < spec.hi)) {
    throw ConfigError("invalid rosenbrock box bounds");
  }
  Stream stream(derive_seed({spec.seed, 0x2055ULL}));
  Dataset ds;
  const auto n = static_cast<Eigen::Index>(spec.samples);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  ds.features.resize(n, d);
  ds.targets.resize(n);
  Eigen::VectorXd x(d);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) x[c] = stream.uniform(spec.lo, spec.hi);
    ds.features.row(r) = x.transpose();
    ds.targets[r] = rosenbrock(x);
  }
  for (std::size_t c = 0; c < spec.dim; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  std::ostringstream tag;
  tag << "rosenbrock:" << spec.samples << "x" << spec.dim << ":[" << spec.lo << ',' << spec.hi
      << "]:seed=" << spec.seed;
  ds.provenance = tag.str();
  return ds;
}

}  // namespace dropal
