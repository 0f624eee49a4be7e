#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hotspot/matrix.hpp"

namespace hotspot {

enum class ResampleMethod { RandomUnder, RandomOver, Smote, NearMiss };

std::string_view to_string(ResampleMethod method);

struct ResampleSpec {
  ResampleMethod method = ResampleMethod::RandomUnder;
  int k_neighbors = 3;
  std::uint64_t seed = 0;
  /// SMOTE with fewer than two minority rows: error instead of falling back to over-sampling.
  bool strict = false;
  /// z-score columns before measuring distances (SMOTE / NearMiss).
  bool standardize = true;

  void validate() const;
};

/// Marks rows in Resampled::origin that do not come from the input.
inline constexpr std::size_t kSyntheticRow = std::numeric_limits<std::size_t>::max();

struct Resampled {
  Matrix X;
  std::vector<std::uint8_t> y;
  /// Source row of every output row, or kSyntheticRow.
  std::vector<std::size_t> origin;
  /// SMOTE degraded to random over-sampling (minority too small).
  bool fell_back = false;
};

struct ClassSplit {
  std::vector<std::size_t> minority;
  std::vector<std::size_t> majority;
  std::uint8_t minority_label = 1;
};

/// Row indices per class. The minority is the smaller class; label 1 wins a tie.
/// Throws DataError when a class is empty.
ClassSplit split_classes(std::span<const std::uint8_t> y);

/// Indices (ascending) of all minority rows plus an equally sized uniform subset of the
/// majority drawn without replacement.
std::vector<std::size_t> random_under_sample_indices(std::span<const std::uint8_t> y, std::uint64_t seed);

Resampled random_under_sample(MatrixView X, std::span<const std::uint8_t> y, std::uint64_t seed);
Resampled random_over_sample(MatrixView X, std::span<const std::uint8_t> y, std::uint64_t seed);

struct SmoteOptions {
  int k_neighbors = 3;
  bool strict = false;
  bool standardize = true;
  /// Pins the interpolation gap instead of drawing it from U[0, 1]; tests only.
  std::optional<double> fixed_gap;
};

/// Synthetic minority over-sampling: cycles over the minority rows and interpolates each
/// towards one of its k nearest minority neighbours until the classes balance.
Resampled smote(MatrixView X, std::span<const std::uint8_t> y, std::uint64_t seed, const SmoteOptions& options = {});

/// NearMiss-1: keeps the minority-count majority rows with the smallest mean distance to
/// their k nearest minority rows. Ties go to the lower row index.
Resampled near_miss(MatrixView X, std::span<const std::uint8_t> y, int k_neighbors = 3, bool standardize = true);

Resampled resample(MatrixView X, std::span<const std::uint8_t> y, const ResampleSpec& spec);

/// Column means and standard deviations (zero deviations reported as 1).
struct ColumnScaling {
  std::vector<double> mean;
  std::vector<double> scale;

  static ColumnScaling fit(MatrixView X);
  void apply(std::span<const double> in, std::span<double> out) const;
};

}  // namespace hotspot
