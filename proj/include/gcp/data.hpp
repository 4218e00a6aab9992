#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

// Synthetic generators, outlier contamination, CSV ingestion, normalization,
// and fold splitting.

namespace gcp {

struct DataError : std::exception {
  explicit DataError(std::string msg) : msg_(std::move(msg)) {}
  const char* what() const noexcept override { return msg_.c_str(); }
  std::string msg_;
};

struct Normalization {
  std::vector<double> input_mean;
  std::vector<double> input_std;
  double target_mean = 0.0;
  double target_std = 1.0;
};

struct Dataset {
  std::vector<std::vector<double>> inputs;  // N x d
  std::vector<double> targets;              // N
  std::optional<Normalization> normalization;
  std::vector<bool> outlier_flags;          // empty unless a generator set them
  std::string provenance;

  std::size_t size() const { return targets.size(); }
  std::size_t dim() const { return inputs.empty() ? 0 : inputs[0].size(); }
};

/// x uniform on [-4,-2] u [2,4] (equal mass), y ~ N(x^3, 3^2).
Dataset gen_cubic(int n, std::uint64_t seed);

/// x uniform on (-1,1); with prob 1-p, y ~ N(sin 3x, (0.5 cos^4 x)^2),
/// else y ~ Uniform(-4, 16) and the sample is flagged as an outlier.
Dataset gen_sine_outliers(int n, double outlier_prob, std::uint64_t seed);

/// Replace round(fraction * N) targets with draws from a Gaussian whose mean
/// is the original target mean and whose std is 10x the original target std.
Dataset contaminate(const Dataset& train, double fraction, std::uint64_t seed);

/// Compute normalization statistics from ds and return the normalized copy.
Dataset normalize(const Dataset& ds);
/// Apply an existing normalization record (no statistics recomputed).
Dataset apply_normalization(const Dataset& ds, const Normalization& norm);
/// Invert the attached normalization.
Dataset denormalize(const Dataset& ds);

/// Parse a CSV with header, normalize, and record the statistics.
Dataset load_csv_and_normalize(const std::string& path,
                               const std::string& target_column);
Dataset load_csv_and_normalize(const std::string& path, int target_index);

/// Write the dataset as CSV, with a '#' provenance comment line.
void write_csv(const Dataset& ds, const std::string& path);

struct FoldSplit {
  std::vector<int> train_indices;
  std::vector<int> test_indices;
};

Dataset subset(const Dataset& ds, const std::vector<int>& indices);

/// Independent seeded random splits; train size = round(train_fraction * N).
std::vector<FoldSplit> split_folds(std::size_t n, int n_folds,
                                   double train_fraction, std::uint64_t seed);

}  // namespace gcp
