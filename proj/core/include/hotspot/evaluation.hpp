#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hotspot/dataset.hpp"

namespace hotspot {

/// Cells of one day ordered by descending score; ties go to the lower cell id.
struct DailyRanking {
  int day = 0;
  std::vector<CellId> cells;
  std::vector<double> scores;  // aligned with `cells`
};

/// Throws DataError on a length mismatch, a duplicate cell, or a non-finite score.
DailyRanking rank_cells(std::span<const CellId> cells, std::span<const double> scores, int day);

/// Patrol budget: the top floor(fraction * cells) cells of a ranking.
struct CoverageSpec {
  double fraction = 0.05;
  std::size_t k_cells = 0;

  /// Throws ConfigError unless 0 < fraction <= 1. k_cells may be 0 on tiny grids.
  static CoverageSpec make(double fraction, std::size_t eligible_cells);
};

/// n / N over the top-k cells, or nullopt when the day has no positive cell.
std::optional<double> daily_hit_rate(const DailyRanking& ranking, std::span<const CellId> actual,
                                     const CoverageSpec& coverage);

/// Predictive accuracy index. Throws ConfigError when coverage is not in (0, 1].
double pai(double mean_hit_rate, double coverage);

enum class Averaging {
  MeanOfRatios,  // mean of daily n/N
  RatioOfSums,   // sum n / sum N across days
};

struct SurveillanceCurve {
  std::vector<double> coverage;
  std::vector<double> hit_rate;
  std::size_t days_used = 0;  // days with at least one positive cell
};

/// Mean hit rate at each coverage fraction over the days that have positives.
/// `grid` must be strictly increasing inside (0, 1]. Throws DataError when no day has a positive.
SurveillanceCurve surveillance_curve(std::span<const DailyRanking> rankings,
                                     std::span<const std::vector<CellId>> actuals, std::span<const double> grid,
                                     Averaging averaging = Averaging::MeanOfRatios);

/// Trapezoidal area with the curve pinned at (0, 0) and (1, 1).
double auc(const SurveillanceCurve& curve);

/// 0.01, 0.02, ..., 1.00.
std::vector<double> default_coverage_grid();
/// 0.05, 0.10, 0.20.
std::vector<double> default_report_coverages();

struct MetricReport {
  std::vector<double> coverage;
  std::vector<double> hit_rate;  // averaged per `averaging`
  std::vector<double> pai;
  double auc = 0.0;
  SurveillanceCurve curve;
  std::vector<int> days;  // one entry per ranking, in input order
  /// daily[c][d]: hit rate at coverage[c] on days[d]; nullopt on days without positives.
  std::vector<std::vector<std::optional<double>>> daily;
};

MetricReport evaluate_rankings(std::span<const DailyRanking> rankings, std::span<const std::vector<CellId>> actuals,
                               std::span<const double> report_coverages, std::span<const double> curve_grid,
                               Averaging averaging = Averaging::MeanOfRatios);

/// Rankings and positive sets grouped by day from row-level scores.
struct DayBatch {
  std::vector<DailyRanking> rankings;
  std::vector<std::vector<CellId>> actuals;
};

DayBatch group_by_day(std::span<const CellId> cells, std::span<const int> days, std::span<const double> scores,
                      std::span<const std::uint8_t> labels);

/// Surveillance AUC of row scores grouped by day; used as the tuning metric.
double grouped_surveillance_auc(std::span<const CellId> cells, std::span<const int> days,
                                std::span<const double> scores, std::span<const std::uint8_t> labels,
                                std::span<const double> grid);

struct PairedTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 0.5;  // one-sided, H1: mean(a - b) > 0
  double mean_difference = 0.0;
  std::size_t n = 0;
};

/// Throws DataError on a length mismatch or fewer than two pairs.
PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Stand-alone SVG of one or more surveillance curves.
std::string render_surveillance_svg(std::span<const std::string> labels, std::span<const SurveillanceCurve> curves);

}  // namespace hotspot
