#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hotspot/date.hpp"
#include "hotspot/matrix.hpp"

namespace hotspot {

/// Row-major cell index: row * width_cells + col, rows counted from the grid origin upwards.
using CellId = std::int64_t;

enum class Resolution { Daily, Weekly };

/// Axis-aligned planar extent in meters.
struct Bounds {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

/// Spatial discretization into square cells plus the eligibility (built land-use) mask.
struct GridSpec {
  double cell_size = 200.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  int width_cells = 0;
  int height_cells = 0;
  std::vector<std::uint8_t> eligible;  // width_cells * height_cells entries

  std::size_t cell_count() const { return static_cast<std::size_t>(width_cells) * height_cells; }
  bool contains(CellId id) const { return id >= 0 && static_cast<std::size_t>(id) < cell_count(); }
  bool is_eligible(CellId id) const { return contains(id) && eligible[static_cast<std::size_t>(id)] != 0; }

  /// Cell holding a point. The outer right/top edge belongs to the last cell; anything
  /// else outside the extent yields nullopt.
  std::optional<CellId> locate(double x, double y) const;

  std::pair<double, double> centroid(CellId id) const;
  /// Moore 8-neighbourhood, truncated at grid edges; excludes `id` itself.
  std::vector<CellId> moore_neighbors(CellId id) const;
  std::vector<CellId> eligible_cells() const;
  std::size_t eligible_count() const;

  /// Throws DataError when an invariant is broken.
  void validate() const;
};

struct EventRecord {
  double x = 0;
  double y = 0;
  Date date;
};

/// Explicit per-cell eligibility; cells not listed are ineligible.
using EligibilityTable = std::map<CellId, bool>;

/// Builds a grid covering `bounds` (or the bounding box of `events` when no bounds are
/// given). With no eligibility table every cell is eligible.
GridSpec build_grid(std::span<const EventRecord> events, double cell_size,
                    const EligibilityTable* eligibility = nullptr, std::optional<Bounds> bounds = std::nullopt);

/// Grid with explicit geometry.
GridSpec make_grid(double origin_x, double origin_y, double cell_size, int width, int height,
                   const EligibilityTable* eligibility = nullptr);

/// Contiguous study period split into half-open time buckets.
class Period {
 public:
  Period() = default;
  /// `first` .. `last` inclusive. Weekly resolution keeps complete weeks only.
  Period(Date first, Date last, Resolution resolution);

  Date start() const { return start_; }
  int days() const { return days_; }
  Resolution resolution() const { return resolution_; }
  int bucket_days() const { return resolution_ == Resolution::Daily ? 1 : 7; }
  int buckets() const { return days_ / bucket_days(); }
  Date bucket_start(int bucket) const { return start_ + bucket * bucket_days(); }
  /// Bucket of a date, or nullopt outside the covered buckets.
  std::optional<int> bucket_of(Date d) const;

  bool operator==(const Period&) const = default;

 private:
  Date start_;
  int days_ = 0;
  Resolution resolution_ = Resolution::Daily;
};

/// Event counts per (grid cell, bucket) over the whole study period.
class EventIndex {
 public:
  EventIndex(std::shared_ptr<const GridSpec> grid, Period period);

  void add(CellId cell, int bucket) { ++counts_[offset(cell, bucket)]; }
  std::uint32_t count(CellId cell, int bucket) const { return counts_[offset(cell, bucket)]; }
  const GridSpec& grid() const { return *grid_; }
  std::shared_ptr<const GridSpec> grid_ptr() const { return grid_; }
  const Period& period() const { return period_; }
  std::size_t total() const;

 private:
  std::size_t offset(CellId cell, int bucket) const {
    return static_cast<std::size_t>(bucket) * grid_->cell_count() + static_cast<std::size_t>(cell);
  }

  std::shared_ptr<const GridSpec> grid_;
  Period period_;
  std::vector<std::uint32_t> counts_;
};

/// View of one observation.
struct FrameRow {
  CellId cell;
  int bucket;
  std::span<const double> features;
  std::uint8_t label;
};

/// The (cell, bucket) design matrix. Rows are bucket-major: all cells of the first bucket,
/// then the next, with cells in ascending id order. Immutable after construction.
class SpatioTemporalFrame {
 public:
  SpatioTemporalFrame() = default;
  SpatioTemporalFrame(std::shared_ptr<const EventIndex> events, std::vector<CellId> cells, int first_bucket,
                      int bucket_count, std::vector<std::string> feature_names, Matrix features,
                      std::vector<std::uint8_t> labels);

  const GridSpec& grid() const { return events_->grid(); }
  const Period& period() const { return events_->period(); }
  const EventIndex& events() const { return *events_; }
  std::shared_ptr<const EventIndex> events_ptr() const { return events_; }

  std::span<const CellId> cells() const { return cells_; }
  int first_bucket() const { return first_bucket_; }
  int bucket_count() const { return bucket_count_; }
  int end_bucket() const { return first_bucket_ + bucket_count_; }

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return features_.cols(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  MatrixView features() const { return features_.view(); }
  std::span<const std::uint8_t> labels() const { return labels_; }

  CellId cell_of(std::size_t row) const { return cells_[row % cells_.size()]; }
  int bucket_of(std::size_t row) const { return first_bucket_ + static_cast<int>(row / cells_.size()); }
  FrameRow row(std::size_t i) const { return {cell_of(i), bucket_of(i), features_.row(i), labels_[i]}; }
  std::optional<std::size_t> find_row(CellId cell, int bucket) const;

  /// Rows of one bucket form a contiguous block.
  std::size_t bucket_row_offset(int bucket) const {
    return static_cast<std::size_t>(bucket - first_bucket_) * cells_.size();
  }

  SpatioTemporalFrame with_features(std::vector<std::string> names, Matrix features) const;
  /// Keeps only buckets [first, first + count).
  SpatioTemporalFrame bucket_range(int first, int count) const;
  /// Keeps only the listed cells (must be a subset of cells()).
  SpatioTemporalFrame restrict_cells(std::span<const CellId> keep) const;

 private:
  std::shared_ptr<const EventIndex> events_;
  std::vector<CellId> cells_;
  int first_bucket_ = 0;
  int bucket_count_ = 0;
  std::vector<std::string> feature_names_;
  Matrix features_;
  std::vector<std::uint8_t> labels_;
};

enum class InvalidEventPolicy { Reject, Error };

struct FrameBuildReport {
  std::size_t accepted = 0;
  std::size_t rejected_outside_grid = 0;
  std::size_t rejected_ineligible = 0;
  std::size_t rejected_outside_period = 0;
};

/// Labels every (eligible cell, bucket): 1 iff at least one event falls inside it.
/// The frame carries no feature columns yet; see assemble().
SpatioTemporalFrame build_frame(const GridSpec& grid, std::span<const EventRecord> events, const Period& period,
                                InvalidEventPolicy policy = InvalidEventPolicy::Error,
                                FrameBuildReport* report = nullptr);

struct ChronoSplit {
  SpatioTemporalFrame train;
  SpatioTemporalFrame test;
  int boundary_bucket = 0;
};

/// Train gets buckets before floor(train_fraction * buckets), test the rest.
ChronoSplit chronological_split(const SpatioTemporalFrame& frame, double train_fraction);

struct ClassBalance {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double ratio = 0.0;
};

ClassBalance class_balance(const SpatioTemporalFrame& frame);
ClassBalance class_balance(std::span<const std::uint8_t> labels);

std::vector<EventRecord> read_events_csv(const std::filesystem::path& path);
EligibilityTable read_eligibility_csv(const std::filesystem::path& path);

}  // namespace hotspot
