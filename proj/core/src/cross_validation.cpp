#include <array>
#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "hotspot/dataset.hpp"
#include "hotspot/error.hpp"
#include "hotspot/evaluation.hpp"
#include "hotspot/learners.hpp"
#include "hotspot/random.hpp"

namespace hotspot {

FoldTrainer plain_trainer() {
  return [](const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y, std::span<const std::size_t> rows,
            std::uint64_t seed) -> std::unique_ptr<Scorer> {
    const Matrix Xs = gather_rows(X, rows);
    std::vector<std::uint8_t> ys(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) ys[i] = y[rows[i]];
    LearnerSpec s = spec;
    s.seed = seed;
    return std::make_unique<LearnerModel>(fit(s, Xs, ys));
  };
}

std::vector<int> make_folds(std::size_t rows, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
  if (rows < static_cast<std::size_t>(folds))
    throw DataError(fmt::format("{} rows cannot be split into {} folds", rows, folds));
  std::vector<std::size_t> perm(rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(rows);
  for (std::size_t i = 0; i < rows; ++i) fold[perm[i]] = static_cast<int>(i * static_cast<std::size_t>(folds) / rows);
  return fold;
}

namespace {

constexpr int kMaxFoldDraws = 100;

/// Every validation fold holds both classes (so its training complement does too).
bool folds_usable(const std::vector<int>& fold, std::span<const std::uint8_t> y, int folds) {
  std::vector<std::array<bool, 2>> seen(static_cast<std::size_t>(folds), {false, false});
  for (std::size_t i = 0; i < y.size(); ++i) seen[static_cast<std::size_t>(fold[i])][y[i] ? 1 : 0] = true;
  return std::all_of(seen.begin(), seen.end(), [](const auto& s) { return s[0] && s[1]; });
}

}  // namespace

CrossValidationResult cross_validate(std::span<const LearnerSpec> grid, const SpatioTemporalFrame& train, int folds,
                                     std::uint64_t seed, const FoldTrainer& trainer) {
  if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
  const auto y = train.labels();
  CrossValidationResult result;
  std::vector<int> fold;
  for (int draw = 0;; ++draw) {
    if (draw == kMaxFoldDraws)
      throw DataError(fmt::format("could not draw {} folds that each contain both classes", folds));
    fold = make_folds(train.rows(), folds, derive_seed(seed, static_cast<std::uint64_t>(draw)));
    if (folds_usable(fold, y, folds)) {
      result.fold_draws = draw + 1;
      break;
    }
  }

  const auto grid_points = default_coverage_grid();
  std::vector<std::vector<std::size_t>> train_rows(static_cast<std::size_t>(folds)), valid_rows(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < train.rows(); ++i)
    for (int f = 0; f < folds; ++f) (f == fold[i] ? valid_rows : train_rows)[static_cast<std::size_t>(f)].push_back(i);

  result.scores.assign(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    const auto& vrows = valid_rows[static_cast<std::size_t>(f)];
    const Matrix Xv = gather_rows(train.features(), vrows);
    std::vector<CellId> cells(vrows.size());
    std::vector<int> days(vrows.size());
    std::vector<std::uint8_t> labels(vrows.size());
    for (std::size_t i = 0; i < vrows.size(); ++i) {
      cells[i] = train.cell_of(vrows[i]);
      days[i] = train.bucket_of(vrows[i]);
      labels[i] = y[vrows[i]];
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto model = trainer(grid[g], train.features(), y, train_rows[static_cast<std::size_t>(f)],
                                 derive_seed(seed, 1000 + static_cast<std::uint64_t>(f)));
      const auto scores = model->predict_proba(Xv);
      result.scores[g] += grouped_surveillance_auc(cells, days, scores, labels, grid_points) / folds;
    }
  }
  result.best_index = static_cast<std::size_t>(std::max_element(result.scores.begin(), result.scores.end()) -
                                               result.scores.begin());
  result.best = grid[result.best_index];
  return result;
}

}  // namespace hotspot
