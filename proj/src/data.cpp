#include "gcp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gcp/rng.hpp"

namespace gcp {

namespace {

// Fixed stream ids keep the generators independent of each other under a
// shared seed.
enum StreamId : std::uint64_t {
  kStreamCubic = 1,
  kStreamSine = 2,
  kStreamContaminate = 3,
  kStreamFolds = 4,
};

template <typename T>
void fisher_yates(std::vector<T>& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.below(i)]);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double std_of(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / v.size());
}

}  // namespace

Dataset gen_cubic(int n, std::uint64_t seed) {
  if (n < 1) throw std::domain_error("gen_cubic: n >= 1");
  CounterRng rng(seed, kStreamCubic);
  Dataset ds;
  ds.provenance = "gen_cubic(n=" + std::to_string(n) + ", seed=" + std::to_string(seed) + ")";
  ds.inputs.reserve(n);
  ds.targets.reserve(n);
  for (int i = 0; i < n; ++i) {
    double x = rng.uniform(2.0, 4.0);
    if (rng.uniform() < 0.5) x = -x;
    ds.inputs.push_back({x});
    ds.targets.push_back(rng.normal(x * x * x, 3.0));
  }
  return ds;
}

Dataset gen_sine_outliers(int n, double outlier_prob, std::uint64_t seed) {
  if (n < 1) throw std::domain_error("gen_sine_outliers: n >= 1");
  if (!(outlier_prob >= 0.0 && outlier_prob < 1.0))
    throw std::domain_error("gen_sine_outliers: outlier_prob in [0,1)");
  CounterRng rng(seed, kStreamSine);
  Dataset ds;
  ds.provenance = "gen_sine_outliers(n=" + std::to_string(n) +
                  ", p=" + std::to_string(outlier_prob) +
                  ", seed=" + std::to_string(seed) + ")";
  ds.inputs.reserve(n);
  ds.targets.reserve(n);
  ds.outlier_flags.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    ds.inputs.push_back({x});
    const bool outlier = rng.uniform() < outlier_prob;
    ds.outlier_flags.push_back(outlier);
    if (outlier) {
      ds.targets.push_back(rng.uniform(-4.0, 16.0));
    } else {
      const double c = std::cos(x);
      ds.targets.push_back(rng.normal(std::sin(3.0 * x), 0.5 * c * c * c * c));
    }
  }
  return ds;
}

Dataset contaminate(const Dataset& train, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw std::domain_error("contaminate: fraction in [0,1)");
  Dataset out = train;
  const std::size_t n = train.size();
  const std::size_t k = static_cast<std::size_t>(std::llround(fraction * n));
  if (k == 0) return out;

  const double mu = mean_of(train.targets);
  const double sd = std_of(train.targets, mu);

  CounterRng rng(seed, kStreamContaminate);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  fisher_yates(idx, rng);
  out.outlier_flags.assign(n, false);
  for (std::size_t i = 0; i < k; ++i) {
    out.targets[idx[i]] = rng.normal(mu, 10.0 * sd);
    out.outlier_flags[idx[i]] = true;
  }
  out.provenance = train.provenance + " + contaminate(" + std::to_string(fraction) + ")";
  return out;
}

Dataset normalize(const Dataset& ds) {
  if (ds.size() == 0) throw std::domain_error("normalize: empty dataset");
  const std::size_t d = ds.dim();
  Normalization norm;
  norm.input_mean.assign(d, 0.0);
  norm.input_std.assign(d, 0.0);
  for (const auto& row : ds.inputs)
    for (std::size_t j = 0; j < d; ++j) norm.input_mean[j] += row[j];
  for (std::size_t j = 0; j < d; ++j) norm.input_mean[j] /= ds.size();
  for (const auto& row : ds.inputs)
    for (std::size_t j = 0; j < d; ++j) {
      const double r = row[j] - norm.input_mean[j];
      norm.input_std[j] += r * r;
    }
  for (std::size_t j = 0; j < d; ++j) {
    norm.input_std[j] = std::sqrt(norm.input_std[j] / ds.size());
    if (norm.input_std[j] <= 0.0)
      throw DataError("normalize: zero-variance input column " + std::to_string(j));
  }
  norm.target_mean = mean_of(ds.targets);
  norm.target_std = std_of(ds.targets, norm.target_mean);
  if (norm.target_std <= 0.0) throw DataError("normalize: zero-variance targets");
  Dataset out = apply_normalization(ds, norm);
  out.normalization = norm;
  return out;
}

Dataset apply_normalization(const Dataset& ds, const Normalization& norm) {
  Dataset out = ds;
  const std::size_t d = ds.dim();
  if (norm.input_mean.size() != d)
    throw std::domain_error("apply_normalization: dimension mismatch");
  for (auto& row : out.inputs)
    for (std::size_t j = 0; j < d; ++j)
      row[j] = (row[j] - norm.input_mean[j]) / norm.input_std[j];
  for (auto& y : out.targets) y = (y - norm.target_mean) / norm.target_std;
  out.normalization = norm;
  return out;
}

Dataset denormalize(const Dataset& ds) {
  if (!ds.normalization)
    throw std::domain_error("denormalize: no normalization record attached");
  const Normalization& norm = *ds.normalization;
  Dataset out = ds;
  const std::size_t d = ds.dim();
  for (auto& row : out.inputs)
    for (std::size_t j = 0; j < d; ++j)
      row[j] = row[j] * norm.input_std[j] + norm.input_mean[j];
  for (auto& y : out.targets) y = y * norm.target_std + norm.target_mean;
  out.normalization.reset();
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

Dataset load_csv_impl(const std::string& path, int target_index,
                      const std::string* target_name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path);
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    header = split_line(line);
    break;
  }
  if (header.empty()) throw DataError("CSV has no header row: " + path);

  if (target_name) {
    auto it = std::find(header.begin(), header.end(), *target_name);
    if (it == header.end())
      throw DataError("target column '" + *target_name + "' not found in " + path);
    target_index = static_cast<int>(it - header.begin());
  }
  if (target_index < 0 || target_index >= static_cast<int>(header.size()))
    throw DataError("target column index out of range in " + path);

  Dataset ds;
  ds.provenance = "csv:" + path;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    std::vector<double> row;
    double target = 0.0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v;
      try {
        std::size_t pos = 0;
        v = std::stod(cells[j], &pos);
        if (pos != cells[j].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError("row " + std::to_string(line_no) + ", column '" +
                        header[j] + "': cannot parse '" + cells[j] + "'");
      }
      if (!std::isfinite(v))
        throw DataError("row " + std::to_string(line_no) + ", column '" +
                        header[j] + "': non-finite value");
      if (static_cast<int>(j) == target_index)
        target = v;
      else
        row.push_back(v);
    }
    ds.inputs.push_back(std::move(row));
    ds.targets.push_back(target);
  }
  if (ds.size() == 0) throw DataError("CSV has no data rows: " + path);
  return ds;
}

}  // namespace

Dataset load_csv_and_normalize(const std::string& path,
                               const std::string& target_column) {
  return normalize(load_csv_impl(path, -1, &target_column));
}

Dataset load_csv_and_normalize(const std::string& path, int target_index) {
  return normalize(load_csv_impl(path, target_index, nullptr));
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.precision(17);
  if (!ds.provenance.empty()) out << "# " << ds.provenance << "\n";
  const std::size_t d = ds.dim();
  for (std::size_t j = 0; j < d; ++j) out << "x" << j << ",";
  out << "y";
  if (!ds.outlier_flags.empty()) out << ",outlier";
  out << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out << ds.inputs[i][j] << ",";
    out << ds.targets[i];
    if (!ds.outlier_flags.empty()) out << "," << (ds.outlier_flags[i] ? 1 : 0);
    out << "\n";
  }
}

Dataset subset(const Dataset& ds, const std::vector<int>& indices) {
  Dataset out;
  out.provenance = ds.provenance;
  out.normalization = ds.normalization;
  out.inputs.reserve(indices.size());
  out.targets.reserve(indices.size());
  for (int i : indices) {
    out.inputs.push_back(ds.inputs[i]);
    out.targets.push_back(ds.targets[i]);
    if (!ds.outlier_flags.empty()) out.outlier_flags.push_back(ds.outlier_flags[i]);
  }
  return out;
}

std::vector<FoldSplit> split_folds(std::size_t n, int n_folds,
                                   double train_fraction, std::uint64_t seed) {
  if (n_folds < 1) throw std::domain_error("split_folds: n_folds >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::domain_error("split_folds: train_fraction in (0,1)");
  std::vector<FoldSplit> folds;
  folds.reserve(n_folds);
  const std::size_t n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
  CounterRng base(seed, kStreamFolds);
  for (int f = 0; f < n_folds; ++f) {
    CounterRng rng = base.split(f);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    fisher_yates(idx, rng);
    FoldSplit fold;
    fold.train_indices.assign(idx.begin(), idx.begin() + n_train);
    fold.test_indices.assign(idx.begin() + n_train, idx.end());
    folds.push_back(std::move(fold));
  }
  return folds;
}

}  // namespace gcp
