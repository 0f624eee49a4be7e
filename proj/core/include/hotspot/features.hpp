#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hotspot/dataset.hpp"

namespace hotspot {

enum class FeatureGroup { Crime, Spatial, Temporal };
enum class FeatureSet { Crime, Spatial, Temporal, All };

FeatureSet parse_feature_set(std::string_view name);
std::string_view to_string(FeatureSet set);
bool feature_set_includes(FeatureSet set, FeatureGroup group);

/// Feature counts of the original study's schema (the dow column counted once).
inline constexpr int kReferenceCrimeFeatures = 4;
inline constexpr int kReferenceLocationalFeatures = 52;
inline constexpr int kReferenceTemporalFeatures = 8;

/// Default crime-history windows, in buckets.
inline constexpr std::array<int, 4> kDefaultPriorWindows{1, 3, 7, 14};

/// One day of weather / calendar context.
struct WeatherDay {
  double temp = 0.0;      // degrees Celsius at noon
  double humidity = 0.0;  // fraction in [0, 1]
  double daylight = 0.0;  // hours
  double moon = 0.0;      // 1 = full moon
  bool holiday = false;
};

/// Weather row as read from disk; absent fields are imputed later.
struct RawWeatherDay {
  Date date;
  std::optional<double> temp, humidity, daylight, moon;
  std::optional<bool> holiday;
};

/// Dense per-day weather over a date range plus sparse public-event counts per cell.
class WeatherTable {
 public:
  WeatherTable() = default;
  /// Imputes gaps: carry the previous day forward, then fall back to the column mean.
  /// Missing holiday flags fall back to the fixed-date calendar.
  static WeatherTable impute(std::span<const RawWeatherDay> rows, Date first, Date last);

  Date first() const { return first_; }
  Date last() const { return first_ + static_cast<int>(days_.size()) - 1; }
  bool covers(Date d) const { return !days_.empty() && d >= first_ && d <= last(); }
  const WeatherDay& at(Date d) const;

  void add_public_events(Date d, CellId cell, int count);
  int public_events(Date d, CellId cell) const;

 private:
  Date first_;
  std::vector<WeatherDay> days_;
  std::unordered_map<std::uint64_t, int> events_;
};

/// Static per-cell attributes (locational features).
struct StaticTable {
  std::vector<std::string> columns;
  std::map<CellId, std::vector<double>> values;

  /// Missing entries are replaced by the column mean.
  static StaticTable from_rows(std::vector<std::string> columns,
                               const std::map<CellId, std::vector<std::optional<double>>>& rows);
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Column name -> group. Columns mapped to nullopt are dropped.
struct FeatureSchema {
  std::map<std::string, std::optional<FeatureGroup>, std::less<>> groups;

  /// Group of a column, falling back to the naming conventions (prior* crime,
  /// calendar/weather temporal, everything else spatial).
  std::optional<FeatureGroup> group_of(std::string_view column) const;
};

struct AssembleOptions {
  std::vector<int> prior_windows{kDefaultPriorWindows.begin(), kDefaultPriorWindows.end()};
};

/// Events in {cell} plus its Moore neighbours over buckets [bucket - w, bucket - 1], per window.
std::vector<int> prior_crime_counts(const SpatioTemporalFrame& frame, CellId cell, int bucket,
                                    std::span<const int> windows);

/// Normalized Shannon entropy H(p) / log(k), with 0 log 0 = 0 and k = 1 -> 0.
double shannon_diversity(std::span<const double> proportions, std::size_t k);

/// Thom's discomfort index for temperature in Celsius and relative humidity in [0, 1].
double discomfort_index(double temp_celsius, double humidity);

/// Fixed-date public holidays (Jan 1/2, May 1, Aug 1, Dec 25/26).
bool is_fixed_holiday(Date d);

inline constexpr std::array<std::string_view, 14> kTemporalColumns{
    "dow_mon", "dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_sat", "dow_sun",
    "holiday", "temp",    "hum",     "discomf", "daylight", "moon",   "event"};

/// Temporal fragment: 7 one-hot weekday columns (Monday first), holiday, temp, humidity,
/// discomfort, daylight, moon, public event count.
std::array<double, 14> temporal_features(Date day, const WeatherDay& weather, int event_count);

/// Temporal fragment for a whole bucket: weekday columns become the share of days per
/// weekday, holiday is any-of, event counts are summed and the rest averaged.
std::array<double, 14> bucket_temporal_features(const Period& period, int bucket, const WeatherTable& weather,
                                                CellId cell);

std::vector<std::string> crime_feature_names(std::span<const int> windows, Resolution resolution);

/// Names of the columns `set` selects, in assembly order.
std::vector<std::string> feature_set_members(const StaticTable& statics, const FeatureSchema& schema, FeatureSet set,
                                             const AssembleOptions& options = {},
                                             Resolution resolution = Resolution::Daily);

/// Fills the frame's feature matrix with the selected groups. Crime columns only read
/// buckets strictly before the row's bucket.
SpatioTemporalFrame assemble(const SpatioTemporalFrame& frame, const StaticTable& statics,
                             const WeatherTable& weather, FeatureSet set, const FeatureSchema& schema = {},
                             const AssembleOptions& options = {});

StaticTable read_static_csv(const std::filesystem::path& path);
/// Accepts `date,temp,humidity,daylight,moon,holiday[,events_<cell_id>...]`.
WeatherTable read_weather_csv(const std::filesystem::path& path, Date first, Date last);
/// Long form `date,cell_id,event_count`, merged into `weather`.
void read_public_events_csv(const std::filesystem::path& path, WeatherTable& weather);
/// `column,group` with group in {crime, spatial, temporal, none}.
FeatureSchema read_schema_csv(const std::filesystem::path& path);

}  // namespace hotspot
