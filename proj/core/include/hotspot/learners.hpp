#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hotspot/matrix.hpp"
#include "hotspot/resampling.hpp"
#include "hotspot/tree.hpp"

namespace hotspot {

class SpatioTemporalFrame;

enum class LearnerKind { RandomForest, AdaBoost, LogisticL1, LogisticL2 };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);

/// Base learner choice plus hyperparameters. Fields that do not apply to `kind` are ignored.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::RandomForest;

  // Random forest (also the weak-learner depth for AdaBoost via weak_depth).
  int trees = 100;           // forest size, or boosting rounds for AdaBoost
  int max_depth = 0;         // 0 = unlimited
  int min_samples_leaf = 1;
  int max_features = 0;      // 0 = floor(sqrt(d)), -1 = all
  bool bootstrap = true;

  // AdaBoost
  double learning_rate = 1.0;
  int weak_depth = 1;

  // Logistic regression
  double strength = 1.0;     // regularization weight (lambda)
  double tolerance = 1e-6;   // gradient-norm stop
  int max_iterations = 10000;

  std::uint64_t seed = 0;

  void validate() const;
  /// Sets one hyperparameter from text, e.g. ("trees", "300"). Throws ConfigError.
  void set(std::string_view name, std::string_view value);
  /// `kind key=value ...`, stable and round-trippable through parse().
  std::string describe() const;
  static LearnerSpec parse(std::string_view text);

  bool operator==(const LearnerSpec&) const = default;
};

/// Anything that scores rows with a positive-class probability.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> predict_proba(MatrixView X) const = 0;
  virtual std::size_t arity() const = 0;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  bool operator==(const ForestModel&) const = default;
};

struct AdaBoostModel {
  std::vector<DecisionTree> learners;
  std::vector<double> alphas;
  std::vector<double> round_errors;  // weighted training error of each accepted round
  bool operator==(const AdaBoostModel&) const = default;
};

struct LogisticModel {
  std::vector<double> mean;   // standardization constants from the training rows
  std::vector<double> scale;
  std::vector<double> weights;
  double intercept = 0.0;
  int iterations = 0;
  bool converged = false;
  bool operator==(const LogisticModel&) const = default;
};

/// A fitted base learner.
class LearnerModel final : public Scorer {
 public:
  using Params = std::variant<ForestModel, AdaBoostModel, LogisticModel>;

  LearnerModel() = default;
  LearnerModel(LearnerSpec spec, std::size_t arity, Params params)
      : spec_(std::move(spec)), arity_(arity), params_(std::move(params)) {}

  std::vector<double> predict_proba(MatrixView X) const override;
  double predict_one(std::span<const double> x) const;
  std::size_t arity() const override { return arity_; }

  const LearnerSpec& spec() const { return spec_; }
  const Params& params() const { return params_; }
  LearnerKind kind() const { return spec_.kind; }

  /// Versioned text format; doubles are written as hex floats so a round trip is bit exact.
  void write(std::ostream& out) const;
  static LearnerModel read(std::istream& in);

  friend bool operator==(const LearnerModel& a, const LearnerModel& b) {
    return a.spec_ == b.spec_ && a.arity_ == b.arity_ && a.params_ == b.params_;
  }

 private:
  LearnerSpec spec_;
  std::size_t arity_ = 0;
  Params params_;
};

/// Fits a base learner. `weights` (optional) are per-row sample weights.
LearnerModel fit(const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                 std::span<const double> weights = {});

inline std::vector<double> predict_proba(const Scorer& model, MatrixView X) { return model.predict_proba(X); }

/// Majority rows weigh 1, minority rows majority/minority.
std::vector<double> cost_weights(std::span<const std::uint8_t> y);

/// Weighted, regularized logistic loss in standardized feature space. Exposed so the
/// analytic gradient can be checked against finite differences.
class LogisticObjective {
 public:
  LogisticObjective(MatrixView Xs, std::span<const std::uint8_t> y, std::span<const double> weights, double strength,
                    bool l1);

  /// Smooth part only (data term, plus the ridge term for L2).
  double smooth_value(std::span<const double> w, double b) const;
  /// Full objective including the L1 penalty when applicable.
  double value(std::span<const double> w, double b) const;
  /// Gradient of the full objective; the L1 term contributes strength * sign(w), so only
  /// meaningful away from zero weights.
  void gradient(std::span<const double> w, double b, std::span<double> grad_w, double& grad_b) const;
  void smooth_gradient(std::span<const double> w, double b, std::span<double> grad_w, double& grad_b) const;

  std::size_t dims() const { return X_.cols(); }

 private:
  MatrixView X_;
  std::span<const std::uint8_t> y_;
  std::vector<double> weights_;  // normalized to sum 1
  double strength_;
  bool l1_;
};

/// Trains a scorer for one hyperparameter setting on the training-fold `rows` of (X, y).
/// Used by cross_validate so resampling happens inside the training fold only.
using FoldTrainer =
    std::function<std::unique_ptr<Scorer>(const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                                          std::span<const std::size_t> rows, std::uint64_t seed)>;

/// Plain fit() with no imbalance handling.
FoldTrainer plain_trainer();

/// Fold index (0 .. folds-1) per row: a seeded random permutation cut into near-equal blocks.
std::vector<int> make_folds(std::size_t rows, int folds, std::uint64_t seed);

struct CrossValidationResult {
  std::size_t best_index = 0;
  LearnerSpec best;
  std::vector<double> scores;  // mean validation surveillance AUC per grid entry
  int fold_draws = 1;          // how many fold assignments were drawn
};

/// Scores every spec by mean validation-fold surveillance AUC (rows grouped by bucket)
/// and returns the best, lowest index on ties. Only the given training frame is touched.
CrossValidationResult cross_validate(std::span<const LearnerSpec> grid, const SpatioTemporalFrame& train, int folds,
                                     std::uint64_t seed, const FoldTrainer& trainer = plain_trainer());

}  // namespace hotspot
