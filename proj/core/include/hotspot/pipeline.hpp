#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hotspot/config.hpp"
#include "hotspot/ensemble.hpp"
#include "hotspot/evaluation.hpp"
#include "hotspot/features.hpp"
#include "hotspot/learners.hpp"

namespace hotspot {

/// Records who touches the test period and when. Reads before the evaluation stage are
/// leaks; crime-feature recounts that disagree with the assembled matrix are leaks too.
class LeakageAudit {
 public:
  void enter_stage(std::string_view stage);
  const std::string& stage() const { return stage_; }

  void record_test_read(std::string_view purpose);
  std::size_t test_reads_before_evaluation() const { return early_reads_; }
  std::size_t test_reads_during_evaluation() const { return late_reads_; }

  void record_crime_check(std::size_t rows_checked, std::size_t violations);
  std::size_t crime_rows_checked() const { return crime_checked_; }
  std::size_t crime_violations() const { return crime_violations_; }

  const std::vector<std::string>& log() const { return log_; }

 private:
  std::string stage_ = "init";
  bool evaluating_ = false;
  std::size_t early_reads_ = 0;
  std::size_t late_reads_ = 0;
  std::size_t crime_checked_ = 0;
  std::size_t crime_violations_ = 0;
  std::vector<std::string> log_;
};

/// Test-period frame that can only be reached through open(), which reports to the audit.
class SealedFrame {
 public:
  SealedFrame() = default;
  SealedFrame(SpatioTemporalFrame frame, LeakageAudit* audit) : frame_(std::move(frame)), audit_(audit) {}

  const SpatioTemporalFrame& open(std::string_view purpose) const;
  int first_bucket() const { return frame_.first_bucket(); }
  int bucket_count() const { return frame_.bucket_count(); }

 private:
  SpatioTemporalFrame frame_;
  LeakageAudit* audit_ = nullptr;
};

/// Loaded inputs, labels and the chronological split. Carries no feature matrices.
struct PreparedData {
  ExperimentConfig config;
  Period period;
  std::vector<EventRecord> events;  // every event read, including rejected ones
  FrameBuildReport report;
  StaticTable statics;
  WeatherTable weather;
  FeatureSchema schema;
  std::vector<CellId> cells;  // cells under study (after stratification)
  SpatioTemporalFrame train;  // labels only
  SealedFrame test;           // labels only
  int boundary_bucket = 0;

  AssembleOptions assemble_options() const { return {config.prior_windows}; }
  const GridSpec& grid() const { return train.grid(); }
};

PreparedData prepare(const ExperimentConfig& config, LeakageAudit* audit = nullptr);

/// Scores every row with the same value.
class ConstantScorer final : public Scorer {
 public:
  ConstantScorer() = default;
  ConstantScorer(double value, std::size_t arity) : value_(value), arity_(arity) {}
  std::vector<double> predict_proba(MatrixView X) const override;
  std::size_t arity() const override { return arity_; }
  double value() const { return value_; }
  friend bool operator==(const ConstantScorer& a, const ConstantScorer& b) {
    return a.value_ == b.value_ && a.arity_ == b.arity_;
  }

 private:
  double value_ = 0.0;
  std::size_t arity_ = 0;
};

/// Output of the train stage; round-trips through model.txt bit for bit.
struct TrainedModel {
  Strategy strategy = Strategy::Hyper;
  FeatureSet feature_set = FeatureSet::All;
  std::vector<std::string> feature_names;
  LearnerSpec spec;                  // selected hyperparameters
  std::vector<double> cv_scores;     // one per candidate; empty without tuning
  std::size_t cv_best = 0;
  bool smote_fell_back = false;
  std::variant<ConstantScorer, LearnerModel, HyperEnsemble> model;

  const Scorer& scorer() const;
  /// Learner name for reports; "none" for the majority baseline.
  std::string base_learner() const;

  void write(std::ostream& out) const;
  static TrainedModel read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static TrainedModel load(const std::filesystem::path& path);
};

/// Assembles training features, tunes (when configured) and fits the strategy.
TrainedModel train_stage(const PreparedData& data, LeakageAudit* audit = nullptr, std::ostream* log = nullptr);

struct EvaluationOutput {
  MetricReport report;
  std::vector<DailyRanking> rankings;
  std::vector<Date> dates;  // bucket start per ranking
};

/// Opens the test frame, assembles its features and scores every test bucket.
EvaluationOutput evaluate_stage(const PreparedData& data, const TrainedModel& model, LeakageAudit* audit = nullptr);

/// metrics.csv, surveillance.csv, daily_hit_rates.csv and the optional rankings/ and SVG.
void write_evaluation(const PreparedData& data, const TrainedModel& model, const EvaluationOutput& out,
                      const std::filesystem::path& dir);

/// prepare -> train -> evaluate, writing every artifact into config.output.
EvaluationOutput run_experiment(const ExperimentConfig& config, LeakageAudit* audit = nullptr,
                                std::ostream* log = nullptr);

/// Recounts crime features of up to `max_rows` sampled rows from the raw events, using
/// only events dated before each row's bucket. Returns the number of mismatching rows.
std::size_t audit_crime_features(const SpatioTemporalFrame& assembled, std::span<const EventRecord> raw_events,
                                 std::span<const int> windows, std::size_t max_rows, std::uint64_t seed,
                                 std::size_t* rows_checked = nullptr);

struct Hotspot {
  std::size_t rank = 0;
  CellId cell = 0;
  double score = 0.0;
  double x = 0.0;  // cell centroid
  double y = 0.0;
};

/// Top floor(coverage * cells) cells for one day of the study period.
std::vector<Hotspot> rank_day(const PreparedData& data, const TrainedModel& model, Date day, double coverage);
std::string hotspots_geojson(std::span<const Hotspot> hotspots, Date day);

struct CompareRow {
  double coverage = 0.0;
  PairedTestResult test;
};

/// Paired t-tests of run A against run B per coverage on day-aligned hit rates.
std::vector<CompareRow> compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b);
void write_compare_csv(std::span<const CompareRow> rows, const std::filesystem::path& path);

struct IngestSummary {
  FrameBuildReport report;
  std::size_t cells = 0;
  int buckets = 0;
  ClassBalance balance;
};

/// Builds the grid and labels and writes grid.csv plus ingest_summary.csv into `dir`.
IngestSummary ingest(const ExperimentConfig& config, const std::filesystem::path& dir);

}  // namespace hotspot
