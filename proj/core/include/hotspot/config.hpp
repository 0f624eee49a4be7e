#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hotspot/dataset.hpp"
#include "hotspot/evaluation.hpp"
#include "hotspot/features.hpp"
#include "hotspot/learners.hpp"

namespace hotspot {

enum class Strategy { Majority, Naive, Cost, Under, Over, Smote, NearMiss, Hyper };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

enum class Stratum { All, Low, Mid, High };

std::string_view to_string(Stratum s);
Stratum parse_stratum(std::string_view name);

/// Row filter on one static attribute split at two cut points into three strata.
struct StrataSpec {
  std::string feature;             // empty = no stratification
  std::vector<double> thresholds;  // absolute cut points
  std::vector<double> percentiles; // or percentile cut points in (0, 100)
  Stratum stratum = Stratum::All;

  bool active() const { return !feature.empty() && stratum != Stratum::All; }
};

/// Everything one experiment needs. Loaded from an INI file (`[section]` + `key = value`),
/// then overridden by `section.key=value` pairs.
struct ExperimentConfig {
  // [data]; relative paths resolve against the INI file's directory.
  std::filesystem::path events;
  std::filesystem::path eligibility;
  std::filesystem::path statics;
  std::filesystem::path weather;
  std::filesystem::path public_events;
  std::filesystem::path schema;

  // [grid]
  double cell_size = 200.0;
  std::optional<double> origin_x, origin_y;
  std::optional<int> width, height;
  std::optional<Date> start, end;
  Resolution resolution = Resolution::Daily;
  InvalidEventPolicy invalid_events = InvalidEventPolicy::Reject;

  // [split]
  double train_fraction = 2.0 / 3.0;
  int cv_folds = 5;
  bool tune = true;

  // [model]
  Strategy strategy = Strategy::Hyper;
  int phi = 10;
  FeatureSet feature_set = FeatureSet::All;
  std::vector<int> prior_windows{kDefaultPriorWindows.begin(), kDefaultPriorWindows.end()};

  // [learner] fixed values; [learner.grid] comma-separated candidates per parameter.
  LearnerSpec learner;
  std::map<std::string, std::vector<std::string>> learner_grid;

  // [resampling]
  int k_neighbors = 3;
  bool strict = false;
  bool standardize = true;

  // [evaluation]
  std::vector<double> coverages = default_report_coverages();
  double curve_step = 0.01;
  Averaging averaging = Averaging::MeanOfRatios;
  bool write_rankings = false;
  bool write_svg = false;

  // [strata]
  StrataSpec strata;

  // [run]
  std::uint64_t seed = 1;
  std::filesystem::path output = "hotspot-out";
  int threads = 1;

  static ExperimentConfig load(const std::filesystem::path& ini);
  static ExperimentConfig parse(std::string_view ini_text, const std::filesystem::path& base_dir = {});

  /// Sets one value, e.g. ("model.strategy", "under"). Throws ConfigError.
  void set(std::string_view key, std::string_view value, const std::filesystem::path& base_dir = {});
  /// Applies `section.key=value`.
  void apply_override(std::string_view assignment);

  /// Throws ConfigError on contradictory or missing settings.
  void validate() const;

  /// Candidate specs for tuning: the cartesian product of learner_grid over `learner`,
  /// or the default grid of the learner kind when none is configured.
  std::vector<LearnerSpec> candidate_specs() const;
  std::vector<double> curve_grid() const;

  /// Canonical INI text of the resolved configuration.
  std::string to_ini() const;
};

/// Default tuning grid for a learner kind.
std::map<std::string, std::vector<std::string>> default_learner_grid(LearnerKind kind);

}  // namespace hotspot
