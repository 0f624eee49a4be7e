#include "hotspot/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hotspot/csv.hpp"
#include "hotspot/error.hpp"

namespace hotspot {

// ---------------------------------------------------------------------------
// GridSpec

std::optional<CellId> GridSpec::locate(double x, double y) const {
  const double fx = (x - origin_x) / cell_size;
  const double fy = (y - origin_y) / cell_size;
  if (!(fx >= 0.0) || !(fy >= 0.0) || fx > width_cells || fy > height_cells) return std::nullopt;
  int col = std::min(static_cast<int>(std::floor(fx)), width_cells - 1);
  int row = std::min(static_cast<int>(std::floor(fy)), height_cells - 1);
  return static_cast<CellId>(row) * width_cells + col;
}

std::pair<double, double> GridSpec::centroid(CellId id) const {
  const auto col = static_cast<double>(id % width_cells);
  const auto row = static_cast<double>(id / width_cells);
  return {origin_x + (col + 0.5) * cell_size, origin_y + (row + 0.5) * cell_size};
}

std::vector<CellId> GridSpec::moore_neighbors(CellId id) const {
  std::vector<CellId> out;
  out.reserve(8);
  const auto col = static_cast<int>(id % width_cells);
  const auto row = static_cast<int>(id / width_cells);
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      int r = row + dr, c = col + dc;
      if (r < 0 || c < 0 || r >= height_cells || c >= width_cells) continue;
      out.push_back(static_cast<CellId>(r) * width_cells + c);
    }
  }
  return out;
}

std::vector<CellId> GridSpec::eligible_cells() const {
  std::vector<CellId> out;
  for (std::size_t i = 0; i < eligible.size(); ++i)
    if (eligible[i]) out.push_back(static_cast<CellId>(i));
  return out;
}

std::size_t GridSpec::eligible_count() const {
  return static_cast<std::size_t>(std::count_if(eligible.begin(), eligible.end(), [](auto e) { return e != 0; }));
}

void GridSpec::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw DataError("grid cell size must be positive");
  if (width_cells <= 0 || height_cells <= 0) throw DataError("grid dimensions must be positive");
  if (eligible.size() != cell_count())
    throw DataError(fmt::format("eligibility mask has {} entries, grid has {} cells", eligible.size(), cell_count()));
}

GridSpec make_grid(double origin_x, double origin_y, double cell_size, int width, int height,
                   const EligibilityTable* eligibility) {
  GridSpec g;
  g.cell_size = cell_size;
  g.origin_x = origin_x;
  g.origin_y = origin_y;
  g.width_cells = width;
  g.height_cells = height;
  if (width <= 0 || height <= 0) throw DataError("grid dimensions must be positive");
  g.eligible.assign(g.cell_count(), eligibility ? 0 : 1);
  if (eligibility) {
    for (const auto& [cell, ok] : *eligibility) {
      if (!g.contains(cell)) throw DataError(fmt::format("eligibility lists cell {} outside the grid", cell));
      g.eligible[static_cast<std::size_t>(cell)] = ok ? 1 : 0;
    }
  }
  g.validate();
  return g;
}

GridSpec build_grid(std::span<const EventRecord> events, double cell_size, const EligibilityTable* eligibility,
                    std::optional<Bounds> bounds) {
  if (!(cell_size > 0.0)) throw DataError("grid cell size must be positive");
  if (!bounds) {
    if (events.empty()) throw DataError("cannot infer extent: no events and no explicit bounds");
    Bounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& e : events) {
      b.min_x = std::min(b.min_x, e.x);
      b.min_y = std::min(b.min_y, e.y);
      b.max_x = std::max(b.max_x, e.x);
      b.max_y = std::max(b.max_y, e.y);
    }
    bounds = b;
  }
  const double w = (bounds->max_x - bounds->min_x) / cell_size;
  const double h = (bounds->max_y - bounds->min_y) / cell_size;
  if (!(w >= 0.0) || !(h >= 0.0)) throw DataError("grid bounds are inverted");
  // A small relative slack keeps 1000/200 at exactly 5 cells despite rounding.
  auto cells = [](double extent) { return std::max(1, static_cast<int>(std::ceil(extent - 1e-9))); };
  return make_grid(bounds->min_x, bounds->min_y, cell_size, cells(w), cells(h), eligibility);
}

// ---------------------------------------------------------------------------
// Period / EventIndex

Period::Period(Date first, Date last, Resolution resolution)
    : start_(first), days_(last - first + 1), resolution_(resolution) {
  if (days_ <= 0) throw DataError(fmt::format("empty period {} .. {}", first.iso(), last.iso()));
  if (buckets() == 0) throw DataError("period shorter than one time bucket");
}

std::optional<int> Period::bucket_of(Date d) const {
  const int offset = d - start_;
  if (offset < 0) return std::nullopt;
  const int bucket = offset / bucket_days();
  if (bucket >= buckets()) return std::nullopt;
  return bucket;
}

EventIndex::EventIndex(std::shared_ptr<const GridSpec> grid, Period period)
    : grid_(std::move(grid)), period_(period),
      counts_(grid_->cell_count() * static_cast<std::size_t>(period_.buckets()), 0) {}

std::size_t EventIndex::total() const {
  std::size_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

// ---------------------------------------------------------------------------
// SpatioTemporalFrame

SpatioTemporalFrame::SpatioTemporalFrame(std::shared_ptr<const EventIndex> events, std::vector<CellId> cells,
                                         int first_bucket, int bucket_count, std::vector<std::string> feature_names,
                                         Matrix features, std::vector<std::uint8_t> labels)
    : events_(std::move(events)),
      cells_(std::move(cells)),
      first_bucket_(first_bucket),
      bucket_count_(bucket_count),
      feature_names_(std::move(feature_names)),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (!events_) throw DataError("frame requires an event index");
  if (cells_.empty()) throw DataError("frame has no eligible cells");
  if (!std::is_sorted(cells_.begin(), cells_.end()) ||
      std::adjacent_find(cells_.begin(), cells_.end()) != cells_.end())
    throw DataError("frame cells must be strictly ascending");
  if (bucket_count_ <= 0 || first_bucket_ < 0 || end_bucket() > events_->period().buckets())
    throw DataError("frame bucket range outside the period");
  const std::size_t expected = cells_.size() * static_cast<std::size_t>(bucket_count_);
  if (labels_.size() != expected)
    throw DataError(fmt::format("frame has {} labels, expected {}", labels_.size(), expected));
  if (features_.rows() != expected || features_.cols() != feature_names_.size())
    throw DataError("feature matrix shape does not match the frame");
  for (auto l : labels_)
    if (l > 1) throw DataError("labels must be binary");
}

std::optional<std::size_t> SpatioTemporalFrame::find_row(CellId cell, int bucket) const {
  if (bucket < first_bucket_ || bucket >= end_bucket()) return std::nullopt;
  auto it = std::lower_bound(cells_.begin(), cells_.end(), cell);
  if (it == cells_.end() || *it != cell) return std::nullopt;
  return bucket_row_offset(bucket) + static_cast<std::size_t>(it - cells_.begin());
}

SpatioTemporalFrame SpatioTemporalFrame::with_features(std::vector<std::string> names, Matrix features) const {
  return {events_, cells_, first_bucket_, bucket_count_, std::move(names), std::move(features), labels_};
}

SpatioTemporalFrame SpatioTemporalFrame::bucket_range(int first, int count) const {
  if (count <= 0 || first < first_bucket_ || first + count > end_bucket())
    throw DataError("bucket range outside the frame");
  const std::size_t begin = bucket_row_offset(first);
  const std::size_t n = static_cast<std::size_t>(count) * cells_.size();
  Matrix features(n, cols());
  std::copy_n(features_.data() + begin * cols(), n * cols(), features.data());
  std::vector<std::uint8_t> labels(labels_.begin() + static_cast<std::ptrdiff_t>(begin),
                                   labels_.begin() + static_cast<std::ptrdiff_t>(begin + n));
  return {events_, cells_, first, count, feature_names_, std::move(features), std::move(labels)};
}

SpatioTemporalFrame SpatioTemporalFrame::restrict_cells(std::span<const CellId> keep) const {
  std::vector<CellId> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  std::vector<std::size_t> positions;
  positions.reserve(kept.size());
  for (CellId c : kept) {
    auto it = std::lower_bound(cells_.begin(), cells_.end(), c);
    if (it == cells_.end() || *it != c) throw DataError(fmt::format("cell {} is not part of the frame", c));
    positions.push_back(static_cast<std::size_t>(it - cells_.begin()));
  }
  const std::size_t n = kept.size() * static_cast<std::size_t>(bucket_count_);
  Matrix features(n, cols());
  std::vector<std::uint8_t> labels(n);
  std::size_t out = 0;
  for (int b = 0; b < bucket_count_; ++b) {
    const std::size_t base = static_cast<std::size_t>(b) * cells_.size();
    for (std::size_t p : positions) {
      auto src = features_.row(base + p);
      std::copy(src.begin(), src.end(), features.row(out).begin());
      labels[out++] = labels_[base + p];
    }
  }
  return {events_, std::move(kept), first_bucket_, bucket_count_, feature_names_, std::move(features),
          std::move(labels)};
}

SpatioTemporalFrame build_frame(const GridSpec& grid, std::span<const EventRecord> events, const Period& period,
                                InvalidEventPolicy policy, FrameBuildReport* report) {
  grid.validate();
  auto grid_ptr = std::make_shared<const GridSpec>(grid);
  auto index = std::make_shared<EventIndex>(grid_ptr, period);
  FrameBuildReport local;
  for (const auto& e : events) {
    auto reject = [&](std::size_t& counter, const char* why) {
      if (policy == InvalidEventPolicy::Error)
        throw DataError(fmt::format("event at ({}, {}) on {} {}", e.x, e.y, e.date.iso(), why));
      ++counter;
    };
    auto bucket = period.bucket_of(e.date);
    if (!bucket) {
      reject(local.rejected_outside_period, "is outside the study period");
      continue;
    }
    auto cell = grid.locate(e.x, e.y);
    if (!cell) {
      reject(local.rejected_outside_grid, "is outside the grid");
      continue;
    }
    if (!grid.is_eligible(*cell)) {
      reject(local.rejected_ineligible, "falls in an ineligible cell");
      continue;
    }
    index->add(*cell, *bucket);
    ++local.accepted;
  }
  if (report) *report = local;

  auto cells = grid.eligible_cells();
  if (cells.empty()) throw DataError("grid has no eligible cells");
  const int buckets = period.buckets();
  std::vector<std::uint8_t> labels(cells.size() * static_cast<std::size_t>(buckets));
  for (int b = 0; b < buckets; ++b)
    for (std::size_t i = 0; i < cells.size(); ++i)
      labels[static_cast<std::size_t>(b) * cells.size() + i] = index->count(cells[i], b) > 0 ? 1 : 0;
  Matrix empty(labels.size(), 0);
  return {std::move(index), std::move(cells), 0, buckets, {}, std::move(empty), std::move(labels)};
}

ChronoSplit chronological_split(const SpatioTemporalFrame& frame, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError(fmt::format("train fraction {} must lie strictly between 0 and 1", train_fraction));
  const int total = frame.bucket_count();
  if (total < 2) throw DataError("chronological split needs at least two time buckets");
  // The epsilon absorbs representation error such as (2/3) * 9 landing just below 6.
  const int train_buckets = static_cast<int>(std::floor(train_fraction * total + 1e-9));
  if (train_buckets <= 0 || train_buckets >= total)
    throw DataError(fmt::format("train fraction {} leaves an empty train or test period over {} buckets",
                                train_fraction, total));
  ChronoSplit split;
  split.boundary_bucket = frame.first_bucket() + train_buckets;
  split.train = frame.bucket_range(frame.first_bucket(), train_buckets);
  split.test = frame.bucket_range(split.boundary_bucket, total - train_buckets);
  return split;
}

ClassBalance class_balance(std::span<const std::uint8_t> labels) {
  if (labels.empty()) throw DataError("class balance of an empty frame");
  ClassBalance cb;
  for (auto l : labels) l ? ++cb.positives : ++cb.negatives;
  cb.ratio = static_cast<double>(cb.positives) / static_cast<double>(labels.size());
  return cb;
}

ClassBalance class_balance(const SpatioTemporalFrame& frame) { return class_balance(frame.labels()); }

std::vector<EventRecord> read_events_csv(const std::filesystem::path& path) {
  auto table = csv::Table::read(path);
  const auto cx = table.column("x"), cy = table.column("y"), cd = table.column("date");
  std::vector<EventRecord> out;
  out.reserve(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& r = table.row(i);
    const auto ctx = fmt::format("{} row {}", table.source(), i + 2);
    out.push_back({csv::parse_double(r[cx], ctx), csv::parse_double(r[cy], ctx), Date::parse(r[cd])});
  }
  return out;
}

EligibilityTable read_eligibility_csv(const std::filesystem::path& path) {
  auto table = csv::Table::read(path);
  const auto cc = table.column("cell_id"), ce = table.column("eligible");
  EligibilityTable out;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto ctx = fmt::format("{} row {}", table.source(), i + 2);
    const auto flag = csv::parse_int(table.row(i)[ce], ctx);
    if (flag != 0 && flag != 1) throw DataError(fmt::format("{}: eligible must be 0 or 1", ctx));
    out[csv::parse_int(table.row(i)[cc], ctx)] = flag == 1;
  }
  return out;
}

}  // namespace hotspot
