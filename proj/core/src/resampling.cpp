#include "hotspot/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <fmt/format.h>

#include "hotspot/error.hpp"
#include "hotspot/random.hpp"

namespace hotspot {

std::string_view to_string(ResampleMethod method) {
  switch (method) {
    case ResampleMethod::RandomUnder: return "under";
    case ResampleMethod::RandomOver: return "over";
    case ResampleMethod::Smote: return "smote";
    case ResampleMethod::NearMiss: return "nearmiss";
  }
  return "under";
}

void ResampleSpec::validate() const {
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be at least 1");
}

ColumnScaling ColumnScaling::fit(MatrixView X) {
  ColumnScaling s;
  const std::size_t d = X.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (X.rows() == 0) return s;
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += X(i, j);
  for (auto& m : s.mean) m /= static_cast<double>(X.rows());
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = X(i, j) - s.mean[j];
      var[j] += diff * diff;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(X.rows()));
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void ColumnScaling::apply(std::span<const double> in, std::span<double> out) const {
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
}

ClassSplit split_classes(std::span<const std::uint8_t> y) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw DataError("cannot balance: input holds a single class");
  ClassSplit s;
  if (pos.size() <= neg.size()) {
    s.minority = std::move(pos);
    s.majority = std::move(neg);
    s.minority_label = 1;
  } else {
    s.minority = std::move(neg);
    s.majority = std::move(pos);
    s.minority_label = 0;
  }
  return s;
}

namespace {

Resampled gather(MatrixView X, std::span<const std::uint8_t> y, std::vector<std::size_t> rows) {
  Resampled out;
  out.X = gather_rows(X, rows);
  out.y.reserve(rows.size());
  for (auto r : rows) out.y.push_back(y[r]);
  out.origin = std::move(rows);
  return out;
}

void check_shape(MatrixView X, std::span<const std::uint8_t> y) {
  if (X.rows() != y.size())
    throw DataError(fmt::format("feature rows ({}) and labels ({}) differ", X.rows(), y.size()));
}

/// Rows projected into the distance space (standardized or raw).
Matrix distance_space(MatrixView X, std::span<const std::size_t> rows, const ColumnScaling* scaling) {
  Matrix out(rows.size(), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (scaling)
      scaling->apply(X.row(rows[i]), out.row(i));
    else
      std::copy_n(X.row(rows[i]).begin(), X.cols(), out.row(i).begin());
  }
  return out;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<std::size_t> random_under_sample_indices(std::span<const std::uint8_t> y, std::uint64_t seed) {
  auto classes = split_classes(y);
  Rng rng(seed);
  auto& majority = classes.majority;
  const std::size_t keep = classes.minority.size();
  // Partial Fisher-Yates: the first `keep` slots become a uniform draw without replacement.
  for (std::size_t i = 0; i < keep; ++i) {
    std::size_t j = i + uniform_index(rng, majority.size() - i);
    std::swap(majority[i], majority[j]);
  }
  std::vector<std::size_t> rows = std::move(classes.minority);
  rows.insert(rows.end(), majority.begin(), majority.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(rows.begin(), rows.end());
  return rows;
}

Resampled random_under_sample(MatrixView X, std::span<const std::uint8_t> y, std::uint64_t seed) {
  check_shape(X, y);
  return gather(X, y, random_under_sample_indices(y, seed));
}

Resampled random_over_sample(MatrixView X, std::span<const std::uint8_t> y, std::uint64_t seed) {
  check_shape(X, y);
  auto classes = split_classes(y);
  Rng rng(seed);
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const std::size_t extra = classes.majority.size() - classes.minority.size();
  for (std::size_t i = 0; i < extra; ++i) rows.push_back(classes.minority[uniform_index(rng, classes.minority.size())]);
  return gather(X, y, std::move(rows));
}

Resampled smote(MatrixView X, std::span<const std::uint8_t> y, std::uint64_t seed, const SmoteOptions& options) {
  check_shape(X, y);
  if (options.k_neighbors < 1) throw ConfigError("SMOTE needs k_neighbors >= 1");
  auto classes = split_classes(y);
  const auto& minority = classes.minority;
  const std::size_t m = minority.size();
  if (m < 2) {
    if (options.strict) throw DataError("SMOTE needs at least two minority rows");
    auto out = random_over_sample(X, y, seed);
    out.fell_back = true;
    return out;
  }

  ColumnScaling scaling;
  if (options.standardize) scaling = ColumnScaling::fit(X);
  const Matrix space = distance_space(X, minority, options.standardize ? &scaling : nullptr);

  // Brute-force k nearest minority neighbours, ties by row order.
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(options.k_neighbors), m - 1);
  std::vector<std::vector<std::size_t>> neighbors(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < m; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) dist.emplace_back(distance(space.row(i), space.row(j)), j);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t n = 0; n < k; ++n) neighbors[i].push_back(dist[n].second);
  }

  Rng rng(seed);
  const std::size_t needed = classes.majority.size() - m;
  Resampled out;
  out.X = Matrix(y.size() + needed, X.cols());
  std::copy_n(X.data(), X.rows() * X.cols(), out.X.data());
  out.y.assign(y.begin(), y.end());
  out.origin.resize(y.size());
  std::iota(out.origin.begin(), out.origin.end(), std::size_t{0});
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t i = s % m;
    const std::size_t r = neighbors[i][uniform_index(rng, k)];
    const double gap = options.fixed_gap ? *options.fixed_gap : uniform01(rng);
    auto p = X.row(minority[i]);
    auto q = X.row(minority[r]);
    auto dst = out.X.row(y.size() + s);
    for (std::size_t j = 0; j < X.cols(); ++j) dst[j] = p[j] + gap * (q[j] - p[j]);
    out.y.push_back(classes.minority_label);
    out.origin.push_back(kSyntheticRow);
  }
  return out;
}

Resampled near_miss(MatrixView X, std::span<const std::uint8_t> y, int k_neighbors, bool standardize) {
  check_shape(X, y);
  if (k_neighbors < 1) throw ConfigError("NearMiss needs k_neighbors >= 1");
  auto classes = split_classes(y);
  const auto& minority = classes.minority;
  const auto& majority = classes.majority;
  ColumnScaling scaling;
  if (standardize) scaling = ColumnScaling::fit(X);
  const ColumnScaling* s = standardize ? &scaling : nullptr;
  const Matrix min_space = distance_space(X, minority, s);

  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), minority.size());
  std::vector<std::tuple<double, std::size_t>> scored;
  scored.reserve(majority.size());
  std::vector<double> point(X.cols());
  std::vector<double> dist(minority.size());
  for (std::size_t row : majority) {
    if (s)
      s->apply(X.row(row), point);
    else
      std::copy_n(X.row(row).begin(), X.cols(), point.begin());
    for (std::size_t j = 0; j < minority.size(); ++j) dist[j] = distance(point, min_space.row(j));
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double sum = 0.0;
    for (std::size_t n = 0; n < k; ++n) sum += dist[n];
    scored.emplace_back(sum / static_cast<double>(k), row);
  }
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(minority.size()), scored.end());
  std::vector<std::size_t> rows = minority;
  for (std::size_t i = 0; i < minority.size(); ++i) rows.push_back(std::get<1>(scored[i]));
  std::sort(rows.begin(), rows.end());
  return gather(X, y, std::move(rows));
}

Resampled resample(MatrixView X, std::span<const std::uint8_t> y, const ResampleSpec& spec) {
  spec.validate();
  switch (spec.method) {
    case ResampleMethod::RandomUnder: return random_under_sample(X, y, spec.seed);
    case ResampleMethod::RandomOver: return random_over_sample(X, y, spec.seed);
    case ResampleMethod::Smote:
      return smote(X, y, spec.seed, {.k_neighbors = spec.k_neighbors, .strict = spec.strict, .standardize = spec.standardize, .fixed_gap = std::nullopt});
    case ResampleMethod::NearMiss: return near_miss(X, y, spec.k_neighbors, spec.standardize);
  }
  throw ConfigError("unknown resampling method");
}

}  // namespace hotspot
