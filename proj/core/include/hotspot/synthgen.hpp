#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hotspot/dataset.hpp"
#include "hotspot/features.hpp"

namespace hotspot {

/// Parameters of a synthetic near-repeat event world.
struct SynthConfig {
  int width = 50;  // cells
  int height = 40;
  double cell_size = 200.0;
  double origin_x = 2'640'000.0;
  double origin_y = 1'250'000.0;
  Date start{2015, 1, 1};
  int days = 730;

  /// Expected share of positive (cell, day) pairs among eligible cells.
  double target_fraction = 6e-4;
  /// Share of cells (lowest building density) marked ineligible.
  double ineligible_fraction = 0.0;

  int static_features = 8;
  /// Log-odds effect per latent static feature; missing entries are 0 (pure noise columns).
  std::vector<double> static_weights{0.9, 0.7, 0.5, -0.4, 0.3};

  /// Log-odds added after an event in the cell, scaled by exp(-(a - 1) / decay_days) where a
  /// is the lag of the most recent event within decay_days.
  double boost = 1.5;
  int decay_days = 7;
  /// Same, for the most recent event in any Moore neighbour.
  double neighbor_boost = 0.5;
  /// Log-odds shift per weekday, Monday first.
  std::array<double, 7> dow_weights{0.0, -0.05, 0.0, 0.05, 0.2, 0.35, 0.15};

  /// Share of weather values blanked out to exercise imputation.
  double missing_weather_fraction = 0.01;
  /// Expected public events per day across the grid.
  double public_event_rate = 0.3;

  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
};

struct PublicEvent {
  Date date;
  CellId cell = 0;
  int count = 0;
};

struct SynthData {
  GridSpec grid;
  Period period;
  std::vector<CellId> cells;  // eligible cells, ascending
  std::vector<EventRecord> events;
  StaticTable statics;
  std::vector<RawWeatherDay> weather;
  std::vector<PublicEvent> public_events;
  /// True event probability, day-major over `cells`: risk[day * cells.size() + i].
  std::vector<double> risk;
  double intercept = 0.0;  // calibrated base log-odds
  double expected_positives = 0.0;

  double risk_at(std::size_t cell_pos, int day) const { return risk[static_cast<std::size_t>(day) * cells.size() + cell_pos]; }
};

/// Deterministic in config.seed.
SynthData generate(const SynthConfig& config);

/// Writes events.csv, eligibility.csv, cells.csv, weather.csv, public_events.csv,
/// truth.csv (`cell_id,day,risk`, optional) and an experiment.ini pointing at them.
void write_synth(const SynthData& data, const std::filesystem::path& dir, bool write_truth = true);

}  // namespace hotspot
