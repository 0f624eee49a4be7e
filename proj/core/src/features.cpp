#include "hotspot/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "hotspot/csv.hpp"
#include "hotspot/error.hpp"

namespace hotspot {

namespace {

std::uint64_t event_key(Date d, CellId cell) {
  const auto day = static_cast<std::uint64_t>(d - Date(1900, 1, 1));
  return (day << 40) ^ static_cast<std::uint64_t>(cell);
}

bool is_temporal_column(std::string_view name) {
  return std::find(kTemporalColumns.begin(), kTemporalColumns.end(), name) != kTemporalColumns.end();
}

}  // namespace

FeatureSet parse_feature_set(std::string_view name) {
  if (name == "crime") return FeatureSet::Crime;
  if (name == "spatial" || name == "locational") return FeatureSet::Spatial;
  if (name == "temporal") return FeatureSet::Temporal;
  if (name == "all") return FeatureSet::All;
  throw ConfigError(fmt::format("unknown feature set '{}' (expected crime, spatial, temporal or all)", name));
}

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::Crime: return "crime";
    case FeatureSet::Spatial: return "spatial";
    case FeatureSet::Temporal: return "temporal";
    case FeatureSet::All: return "all";
  }
  return "all";
}

bool feature_set_includes(FeatureSet set, FeatureGroup group) {
  switch (set) {
    case FeatureSet::All: return true;
    case FeatureSet::Crime: return group == FeatureGroup::Crime;
    case FeatureSet::Spatial: return group == FeatureGroup::Spatial;
    case FeatureSet::Temporal: return group == FeatureGroup::Temporal;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Weather

WeatherTable WeatherTable::impute(std::span<const RawWeatherDay> rows, Date first, Date last) {
  if (last < first) throw DataError("weather range is empty");
  const auto n = static_cast<std::size_t>(last - first + 1);
  std::vector<std::optional<RawWeatherDay>> by_day(n);
  for (const auto& r : rows) {
    if (r.date < first || r.date > last) continue;
    by_day[static_cast<std::size_t>(r.date - first)] = r;
  }

  using Field = std::optional<double> RawWeatherDay::*;
  constexpr std::array<Field, 4> fields{&RawWeatherDay::temp, &RawWeatherDay::humidity, &RawWeatherDay::daylight,
                                        &RawWeatherDay::moon};
  constexpr std::array<const char*, 4> names{"temp", "humidity", "daylight", "moon"};
  std::array<std::vector<double>, 4> dense;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    std::vector<std::optional<double>> col(n);
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (by_day[i] && (*by_day[i]).*fields[f]) {
        col[i] = *((*by_day[i]).*fields[f]);
        sum += *col[i];
        ++present;
      }
    }
    if (present == 0) throw DataError(fmt::format("weather column '{}' has no values in the study period", names[f]));
    const double mean = sum / static_cast<double>(present);
    dense[f].resize(n);
    std::optional<double> carry;
    for (std::size_t i = 0; i < n; ++i) {
      if (col[i]) carry = col[i];
      dense[f][i] = carry ? *carry : mean;
    }
  }

  WeatherTable t;
  t.first_ = first;
  t.days_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& d = t.days_[i];
    d.temp = dense[0][i];
    d.humidity = dense[1][i];
    d.daylight = dense[2][i];
    d.moon = dense[3][i];
    const Date day = first + static_cast<int>(i);
    d.holiday = by_day[i] && by_day[i]->holiday ? *by_day[i]->holiday : is_fixed_holiday(day);
    if (d.humidity < 0.0 || d.humidity > 1.0)
      throw DataError(fmt::format("humidity {} on {} outside [0, 1]", d.humidity, day.iso()));
    if (d.moon < 0.0 || d.moon > 1.0) throw DataError(fmt::format("moon phase {} on {} outside [0, 1]", d.moon, day.iso()));
    if (d.daylight < 0.0 || d.daylight > 24.0)
      throw DataError(fmt::format("daylight {} on {} outside [0, 24]", d.daylight, day.iso()));
  }
  return t;
}

const WeatherDay& WeatherTable::at(Date d) const {
  if (!covers(d)) throw DataError(fmt::format("no weather for {}", d.iso()));
  return days_[static_cast<std::size_t>(d - first_)];
}

void WeatherTable::add_public_events(Date d, CellId cell, int count) {
  if (count < 0) throw DataError("negative public event count");
  if (count > 0) events_[event_key(d, cell)] += count;
}

int WeatherTable::public_events(Date d, CellId cell) const {
  auto it = events_.find(event_key(d, cell));
  return it == events_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Static attributes and schema

StaticTable StaticTable::from_rows(std::vector<std::string> columns,
                                   const std::map<CellId, std::vector<std::optional<double>>>& rows) {
  StaticTable t;
  t.columns = std::move(columns);
  const std::size_t k = t.columns.size();
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (const auto& [cell, vals] : rows) {
    if (vals.size() != k) throw DataError(fmt::format("static row for cell {} has wrong width", cell));
    for (std::size_t j = 0; j < k; ++j)
      if (vals[j]) sum[j] += *vals[j], ++count[j];
  }
  for (const auto& [cell, vals] : rows) {
    auto& out = t.values[cell];
    out.resize(k);
    for (std::size_t j = 0; j < k; ++j) out[j] = vals[j] ? *vals[j] : (count[j] ? sum[j] / count[j] : 0.0);
  }
  return t;
}

std::optional<std::size_t> StaticTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  return std::nullopt;
}

std::optional<FeatureGroup> FeatureSchema::group_of(std::string_view column) const {
  if (auto it = groups.find(column); it != groups.end()) return it->second;
  if (column.starts_with("prior")) return FeatureGroup::Crime;
  if (is_temporal_column(column)) return FeatureGroup::Temporal;
  return FeatureGroup::Spatial;
}

// ---------------------------------------------------------------------------
// Feature primitives

std::vector<int> prior_crime_counts(const SpatioTemporalFrame& frame, CellId cell, int bucket,
                                    std::span<const int> windows) {
  const auto& grid = frame.grid();
  if (!grid.contains(cell)) throw DataError(fmt::format("unknown cell {}", cell));
  if (bucket < 0 || bucket >= frame.period().buckets()) throw DataError(fmt::format("bucket {} outside period", bucket));
  auto area = grid.moore_neighbors(cell);
  area.push_back(cell);
  std::vector<int> out;
  out.reserve(windows.size());
  for (int w : windows) {
    if (w <= 0) throw ConfigError("prior-crime windows must be positive");
    int total = 0;
    for (int b = std::max(0, bucket - w); b < bucket; ++b)
      for (CellId c : area) total += static_cast<int>(frame.events().count(c, b));
    out.push_back(total);
  }
  return out;
}

double shannon_diversity(std::span<const double> proportions, std::size_t k) {
  if (k == 0 || proportions.size() != k)
    throw DataError(fmt::format("diversity needs exactly k = {} proportions, got {}", k, proportions.size()));
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p >= 0.0)) throw DataError("diversity proportions must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError(fmt::format("diversity proportions sum to {}, not 1", sum));
  if (k == 1) return 0.0;
  double h = 0.0;
  for (double p : proportions)
    if (p > 0.0) h -= p * std::log(p);
  return std::clamp(h / std::log(static_cast<double>(k)), 0.0, 1.0);
}

double discomfort_index(double temp_celsius, double humidity) {
  return temp_celsius - 0.55 * (1.0 - humidity) * (temp_celsius - 14.5);
}

bool is_fixed_holiday(Date d) {
  const auto ymd = d.ymd();
  const unsigned m = static_cast<unsigned>(ymd.month());
  const unsigned day = static_cast<unsigned>(ymd.day());
  return (m == 1 && (day == 1 || day == 2)) || (m == 5 && day == 1) || (m == 8 && day == 1) ||
         (m == 12 && (day == 25 || day == 26));
}

std::array<double, 14> temporal_features(Date day, const WeatherDay& weather, int event_count) {
  std::array<double, 14> out{};
  out[day.weekday_index()] = 1.0;
  out[7] = weather.holiday ? 1.0 : 0.0;
  out[8] = weather.temp;
  out[9] = weather.humidity;
  out[10] = discomfort_index(weather.temp, weather.humidity);
  out[11] = weather.daylight;
  out[12] = weather.moon;
  out[13] = static_cast<double>(event_count);
  return out;
}

std::array<double, 14> bucket_temporal_features(const Period& period, int bucket, const WeatherTable& weather,
                                                CellId cell) {
  const int n = period.bucket_days();
  const Date start = period.bucket_start(bucket);
  if (n == 1) return temporal_features(start, weather.at(start), weather.public_events(start, cell));
  std::array<double, 14> acc{};
  double holiday = 0.0, events = 0.0;
  for (int i = 0; i < n; ++i) {
    const Date d = start + i;
    auto day = temporal_features(d, weather.at(d), weather.public_events(d, cell));
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += day[j];
    holiday = std::max(holiday, day[7]);
    events += day[13];
  }
  for (auto& v : acc) v /= n;
  acc[7] = holiday;
  acc[13] = events;
  return acc;
}

std::vector<std::string> crime_feature_names(std::span<const int> windows, Resolution resolution) {
  std::vector<std::string> out;
  for (int w : windows) out.push_back(fmt::format("prior{}{}", w, resolution == Resolution::Daily ? 'd' : 'w'));
  return out;
}

namespace {

struct ColumnPlan {
  std::vector<std::string> names;
  std::vector<std::size_t> crime;     // window index per selected crime column
  std::vector<std::size_t> statics;   // static column index per selected spatial column
  std::vector<std::size_t> temporal;  // temporal fragment index per selected temporal column
};

ColumnPlan plan_columns(const StaticTable& statics, const FeatureSchema& schema, FeatureSet set,
                        const AssembleOptions& options, Resolution resolution) {
  ColumnPlan plan;
  auto crime_names = crime_feature_names(options.prior_windows, resolution);
  for (std::size_t i = 0; i < crime_names.size(); ++i) {
    auto g = schema.group_of(crime_names[i]);
    if (g && feature_set_includes(set, *g)) {
      plan.names.push_back(crime_names[i]);
      plan.crime.push_back(i);
    }
  }
  for (std::size_t i = 0; i < statics.columns.size(); ++i) {
    auto g = schema.group_of(statics.columns[i]);
    if (g && feature_set_includes(set, *g)) {
      plan.names.push_back(statics.columns[i]);
      plan.statics.push_back(i);
    }
  }
  for (std::size_t i = 0; i < kTemporalColumns.size(); ++i) {
    auto g = schema.group_of(kTemporalColumns[i]);
    if (g && feature_set_includes(set, *g)) {
      plan.names.emplace_back(kTemporalColumns[i]);
      plan.temporal.push_back(i);
    }
  }
  return plan;
}

}  // namespace

std::vector<std::string> feature_set_members(const StaticTable& statics, const FeatureSchema& schema, FeatureSet set,
                                             const AssembleOptions& options, Resolution resolution) {
  return plan_columns(statics, schema, set, options, resolution).names;
}

SpatioTemporalFrame assemble(const SpatioTemporalFrame& frame, const StaticTable& statics,
                             const WeatherTable& weather, FeatureSet set, const FeatureSchema& schema,
                             const AssembleOptions& options) {
  for (int w : options.prior_windows)
    if (w <= 0) throw ConfigError("prior-crime windows must be positive");
  const auto& period = frame.period();
  const auto plan = plan_columns(statics, schema, set, options, period.resolution());
  if (plan.names.empty()) throw ConfigError(fmt::format("feature set '{}' selects no columns", to_string(set)));

  const auto cells = frame.cells();
  if (!plan.statics.empty()) {
    std::vector<CellId> missing;
    for (CellId c : cells)
      if (!statics.values.contains(c)) missing.push_back(c);
    if (!missing.empty()) {
      std::string list;
      for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += fmt::format("{}{}", i ? "," : "", missing[i]);
      if (missing.size() > 20) list += ",...";
      throw DataError(fmt::format("static attributes missing for {} cell(s): {}", missing.size(), list));
    }
  }
  if (!plan.temporal.empty()) {
    const Date first = period.bucket_start(frame.first_bucket());
    const Date last = period.bucket_start(frame.end_bucket() - 1) + (period.bucket_days() - 1);
    if (!weather.covers(first) || !weather.covers(last))
      throw DataError(fmt::format("weather does not cover {} .. {}", first.iso(), last.iso()));
  }

  const std::size_t ncells = cells.size();
  const int end = frame.end_bucket();
  const auto& events = frame.events();
  const auto& grid = frame.grid();
  Matrix out(frame.rows(), plan.names.size());

  // Prefix sums of neighbourhood counts: prefix[b] = events in buckets [0, b).
  std::vector<std::uint32_t> prefix(static_cast<std::size_t>(end) + 1);
  for (std::size_t ci = 0; ci < ncells && !plan.crime.empty(); ++ci) {
    const CellId cell = cells[ci];
    auto area = grid.moore_neighbors(cell);
    area.push_back(cell);
    prefix[0] = 0;
    for (int b = 0; b < end; ++b) {
      std::uint32_t s = 0;
      for (CellId c : area) s += events.count(c, b);
      prefix[static_cast<std::size_t>(b) + 1] = prefix[static_cast<std::size_t>(b)] + s;
    }
    for (int b = frame.first_bucket(); b < end; ++b) {
      auto row = out.row(frame.bucket_row_offset(b) + ci);
      for (std::size_t k = 0; k < plan.crime.size(); ++k) {
        const int w = options.prior_windows[plan.crime[k]];
        const int from = std::max(0, b - w);
        row[k] = static_cast<double>(prefix[static_cast<std::size_t>(b)] - prefix[static_cast<std::size_t>(from)]);
      }
    }
  }

  const std::size_t static_offset = plan.crime.size();
  const std::size_t temporal_offset = static_offset + plan.statics.size();
  for (int b = frame.first_bucket(); b < end; ++b) {
    // Weather is shared by all cells of a bucket; only the event column varies.
    std::array<double, 14> shared{};
    if (!plan.temporal.empty()) shared = bucket_temporal_features(period, b, weather, cells.front());
    for (std::size_t ci = 0; ci < ncells; ++ci) {
      auto row = out.row(frame.bucket_row_offset(b) + ci);
      if (!plan.statics.empty()) {
        const auto& vals = statics.values.at(cells[ci]);
        for (std::size_t k = 0; k < plan.statics.size(); ++k) row[static_offset + k] = vals[plan.statics[k]];
      }
      if (!plan.temporal.empty()) {
        double event_count = 0.0;
        for (int d = 0; d < period.bucket_days(); ++d)
          event_count += weather.public_events(period.bucket_start(b) + d, cells[ci]);
        for (std::size_t k = 0; k < plan.temporal.size(); ++k) {
          const std::size_t j = plan.temporal[k];
          row[temporal_offset + k] = j == 13 ? event_count : shared[j];
        }
      }
    }
  }
  for (std::size_t i = 0; i < out.rows() * out.cols(); ++i)
    if (!std::isfinite(out.data()[i])) throw NumericError("assembled feature matrix contains non-finite values");
  return frame.with_features(plan.names, std::move(out));
}

// ---------------------------------------------------------------------------
// Readers

StaticTable read_static_csv(const std::filesystem::path& path) {
  auto table = csv::Table::read(path);
  const auto cc = table.column("cell_id");
  std::vector<std::string> columns;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < table.header().size(); ++i) {
    if (i == cc) continue;
    columns.push_back(table.header()[i]);
    idx.push_back(i);
  }
  std::map<CellId, std::vector<std::optional<double>>> rows;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto ctx = fmt::format("{} row {}", table.source(), r + 2);
    const CellId cell = csv::parse_int(table.row(r)[cc], ctx);
    std::vector<std::optional<double>> vals;
    for (auto i : idx) vals.push_back(csv::parse_optional_double(table.row(r)[i]));
    if (!rows.emplace(cell, std::move(vals)).second) throw DataError(fmt::format("{}: duplicate cell {}", ctx, cell));
  }
  return StaticTable::from_rows(std::move(columns), rows);
}

WeatherTable read_weather_csv(const std::filesystem::path& path, Date first, Date last) {
  auto table = csv::Table::read(path);
  const auto cd = table.column("date");
  const auto ct = table.find_column("temp");
  const auto ch = table.find_column("humidity");
  const auto cl = table.find_column("daylight");
  const auto cm = table.find_column("moon");
  const auto cho = table.find_column("holiday");
  std::vector<std::pair<std::size_t, CellId>> event_cols;
  for (std::size_t i = 0; i < table.header().size(); ++i) {
    const auto& h = table.header()[i];
    if (h.starts_with("events_")) event_cols.emplace_back(i, csv::parse_int(h.substr(7), table.source()));
  }
  std::vector<RawWeatherDay> rows;
  rows.reserve(table.rows());
  auto opt = [&](const std::vector<std::string>& r, std::optional<std::size_t> c) -> std::optional<double> {
    return c ? csv::parse_optional_double(r[*c]) : std::nullopt;
  };
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& r = table.row(i);
    RawWeatherDay w;
    w.date = Date::parse(r[cd]);
    w.temp = opt(r, ct);
    w.humidity = opt(r, ch);
    w.daylight = opt(r, cl);
    w.moon = opt(r, cm);
    if (auto h = opt(r, cho)) w.holiday = *h != 0.0;
    rows.push_back(w);
  }
  auto weather = WeatherTable::impute(rows, first, last);
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const Date d = rows[i].date;
    if (!weather.covers(d)) continue;
    for (auto [col, cell] : event_cols)
      if (auto v = csv::parse_optional_double(table.row(i)[col])) weather.add_public_events(d, cell, static_cast<int>(*v));
  }
  return weather;
}

void read_public_events_csv(const std::filesystem::path& path, WeatherTable& weather) {
  auto table = csv::Table::read(path);
  const auto cd = table.column("date"), cc = table.column("cell_id"), cn = table.column("event_count");
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto ctx = fmt::format("{} row {}", table.source(), i + 2);
    const Date d = Date::parse(table.row(i)[cd]);
    if (!weather.covers(d)) continue;
    weather.add_public_events(d, csv::parse_int(table.row(i)[cc], ctx),
                              static_cast<int>(csv::parse_int(table.row(i)[cn], ctx)));
  }
}

FeatureSchema read_schema_csv(const std::filesystem::path& path) {
  auto table = csv::Table::read(path);
  const auto cc = table.column("column"), cg = table.column("group");
  FeatureSchema schema;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& g = table.row(i)[cg];
    std::optional<FeatureGroup> group;
    if (g == "crime") group = FeatureGroup::Crime;
    else if (g == "spatial" || g == "locational") group = FeatureGroup::Spatial;
    else if (g == "temporal") group = FeatureGroup::Temporal;
    else if (g != "none") throw ConfigError(fmt::format("{}: unknown feature group '{}'", table.source(), g));
    schema.groups[table.row(i)[cc]] = group;
  }
  return schema;
}

}  // namespace hotspot
