#include "hotspot/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "hotspot/csv.hpp"
#include "hotspot/error.hpp"
#include "hotspot/random.hpp"

namespace hotspot {

void SynthConfig::validate() const {
  if (width < 1 || height < 1) throw ConfigError("synthetic grid needs positive width and height");
  if (!(cell_size > 0.0)) throw ConfigError("cell_size must be positive");
  if (days < 2) throw ConfigError("synthetic period needs at least two days");
  if (!(target_fraction > 0.0) || target_fraction > 0.05)
    throw ConfigError(fmt::format("target fraction {} is outside (0, 0.05]", target_fraction));
  if (!(ineligible_fraction >= 0.0) || ineligible_fraction >= 1.0)
    throw ConfigError("ineligible_fraction must be in [0, 1)");
  if (static_features < 1) throw ConfigError("need at least one static feature");
  if (decay_days < 0) throw ConfigError("decay_days must be >= 0");
  if (!(boost >= 0.0) || !(neighbor_boost >= 0.0)) throw ConfigError("near-repeat boosts must be >= 0");
  if (!(missing_weather_fraction >= 0.0) || missing_weather_fraction >= 1.0)
    throw ConfigError("missing_weather_fraction must be in [0, 1)");
  if (!(public_event_rate >= 0.0)) throw ConfigError("public_event_rate must be >= 0");
}

namespace {

double normal(Rng& rng) {
  // Box-Muller on our own uniforms keeps draws identical across standard libraries.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

/// Spatially smoothed standard-normal field over every grid cell.
std::vector<double> latent_field(const GridSpec& grid, Rng& rng) {
  const std::size_t n = grid.cell_count();
  std::vector<double> raw(n), out(n);
  for (auto& v : raw) v = normal(rng);
  for (std::size_t c = 0; c < n; ++c) {
    double sum = raw[c];
    const auto nb = grid.moore_neighbors(static_cast<CellId>(c));
    for (CellId m : nb) sum += raw[static_cast<std::size_t>(m)];
    out[c] = sum / static_cast<double>(nb.size() + 1);
  }
  double mean = 0.0, var = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(n);
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n)) : 1.0;
  for (auto& v : out) v = sd > 0 ? (v - mean) / sd : 0.0;
  return out;
}

std::string static_name(int j) {
  static constexpr std::array<const char*, 8> kNames{"popdens", "buildings", "bars",       "transit_dist",
                                                     "shops",   "schools",   "greenspace", "parking"};
  return j < static_cast<int>(kNames.size()) ? kNames[static_cast<std::size_t>(j)] : fmt::format("attr_{}", j + 1);
}

/// Monotone map from latent z to a plausible raw attribute.
double static_value(int j, double z) {
  switch (j) {
    case 0: return std::exp(7.0 + z);
    case 1: return 20.0 * std::exp(0.5 * z);
    case 2: return std::exp(0.8 * z);
    case 3: return 400.0 * std::exp(-0.6 * z);
    default: return 50.0 + 10.0 * z;
  }
}

struct Simulation {
  std::vector<double> risk;
  std::vector<std::vector<std::size_t>> events;  // per day, positions into cells
  double compensator = 0.0;
};

class NearRepeatModel {
 public:
  NearRepeatModel(const SynthConfig& cfg, const GridSpec& grid, const std::vector<CellId>& cells,
                  std::vector<double> score)
      : cfg_(cfg), cells_(cells), score_(std::move(score)), event_seed_(derive_seed(cfg.seed, 4)) {
    std::vector<std::int64_t> pos(grid.cell_count(), -1);
    for (std::size_t i = 0; i < cells.size(); ++i) pos[static_cast<std::size_t>(cells[i])] = static_cast<std::int64_t>(i);
    neighbors_.resize(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
      for (CellId m : grid.moore_neighbors(cells[i]))
        if (pos[static_cast<std::size_t>(m)] >= 0) neighbors_[i].push_back(static_cast<std::size_t>(pos[static_cast<std::size_t>(m)]));
    for (int t = 0; t < cfg.days; ++t) dow_.push_back(cfg.dow_weights[(cfg.start + t).weekday_index()]);
  }

  /// Event draws share one uniform per (cell, day), so counts are monotone in b0.
  Simulation run(double b0, bool keep_risk) const {
    const std::size_t n = cells_.size();
    const int D = cfg_.decay_days;
    Simulation sim;
    sim.events.resize(static_cast<std::size_t>(cfg_.days));
    if (keep_risk) sim.risk.resize(n * static_cast<std::size_t>(cfg_.days));
    std::vector<double> self(n), near(n);
    for (int t = 0; t < cfg_.days; ++t) {
      std::fill(self.begin(), self.end(), 0.0);
      std::fill(near.begin(), near.end(), 0.0);
      for (int a = 1; a <= D && a <= t; ++a) {
        const double k = std::exp(-static_cast<double>(a - 1) / D);
        // Only the most recent event counts, which keeps the process subcritical.
        for (std::size_t p : sim.events[static_cast<std::size_t>(t - a)]) {
          self[p] = std::max(self[p], k);
          for (std::size_t q : neighbors_[p]) near[q] = std::max(near[q], k);
        }
      }
      auto& today = sim.events[static_cast<std::size_t>(t)];
      for (std::size_t i = 0; i < n; ++i) {
        const double r =
            sigmoid(b0 + score_[i] + dow_[static_cast<std::size_t>(t)] + cfg_.boost * self[i] + cfg_.neighbor_boost * near[i]);
        sim.compensator += r;
        if (keep_risk) sim.risk[static_cast<std::size_t>(t) * n + i] = r;
        if (hashed_uniform(event_seed_, static_cast<std::uint64_t>(cells_[i]), static_cast<std::uint64_t>(t)) < r)
          today.push_back(i);
      }
    }
    return sim;
  }

 private:
  const SynthConfig& cfg_;
  const std::vector<CellId>& cells_;
  std::vector<double> score_;
  std::vector<double> dow_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::uint64_t event_seed_;
};

}  // namespace

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthData out;
  out.grid = make_grid(cfg.origin_x, cfg.origin_y, cfg.cell_size, cfg.width, cfg.height);
  out.period = Period(cfg.start, cfg.start + (cfg.days - 1), Resolution::Daily);

  Rng static_rng(derive_seed(cfg.seed, 1));
  std::vector<std::vector<double>> latent;
  for (int j = 0; j < cfg.static_features; ++j) latent.push_back(latent_field(out.grid, static_rng));
  std::array<std::vector<double>, 4> landuse;
  for (auto& f : landuse) f = latent_field(out.grid, static_rng);

  // The least built-up cells are ineligible.
  const auto& density = latent[cfg.static_features > 1 ? 1 : 0];
  const std::size_t n_all = out.grid.cell_count();
  const auto drop = static_cast<std::size_t>(std::floor(cfg.ineligible_fraction * static_cast<double>(n_all)));
  if (drop >= n_all) throw ConfigError("ineligible_fraction leaves no eligible cell");
  std::vector<std::size_t> by_density(n_all);
  std::iota(by_density.begin(), by_density.end(), std::size_t{0});
  std::stable_sort(by_density.begin(), by_density.end(),
                   [&](std::size_t a, std::size_t b) { return density[a] < density[b]; });
  for (std::size_t i = 0; i < drop; ++i) out.grid.eligible[by_density[i]] = 0;
  out.cells = out.grid.eligible_cells();

  std::vector<std::string> columns;
  for (int j = 0; j < cfg.static_features; ++j) columns.push_back(static_name(j));
  columns.emplace_back("landuse_div");
  std::map<CellId, std::vector<std::optional<double>>> rows;
  std::vector<double> score(out.cells.size(), 0.0);
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    const auto c = static_cast<std::size_t>(out.cells[i]);
    auto& row = rows[out.cells[i]];
    for (int j = 0; j < cfg.static_features; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      row.emplace_back(static_value(j, latent[ju][c]));
      if (ju < cfg.static_weights.size()) score[i] += cfg.static_weights[ju] * latent[ju][c];
    }
    std::array<double, 4> share;
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) total += share[k] = std::exp(landuse[k][c]);
    for (auto& s : share) s /= total;
    row.emplace_back(shannon_diversity(share, 4));
  }
  out.statics = StaticTable::from_rows(std::move(columns), rows);

  // Calibrate the intercept so the expected positive count hits the target.
  const NearRepeatModel model(cfg, out.grid, out.cells, score);
  const double target = cfg.target_fraction * static_cast<double>(out.cells.size()) * cfg.days;
  double lo = -30.0, hi = 5.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (model.run(mid, false).compensator < target ? lo : hi) = mid;
  }
  out.intercept = 0.5 * (lo + hi);
  auto sim = model.run(out.intercept, true);
  out.expected_positives = sim.compensator;
  out.risk = std::move(sim.risk);

  const std::uint64_t place_seed = derive_seed(cfg.seed, 5);
  for (int t = 0; t < cfg.days; ++t) {
    for (std::size_t p : sim.events[static_cast<std::size_t>(t)]) {
      const CellId c = out.cells[p];
      const auto col = static_cast<double>(c % cfg.width), row = static_cast<double>(c / cfg.width);
      const auto key = static_cast<std::uint64_t>(c);
      const double ux = 0.001 + 0.998 * hashed_uniform(place_seed, key, 2 * static_cast<std::uint64_t>(t));
      const double uy = 0.001 + 0.998 * hashed_uniform(place_seed, key, 2 * static_cast<std::uint64_t>(t) + 1);
      out.events.push_back({cfg.origin_x + (col + ux) * cfg.cell_size, cfg.origin_y + (row + uy) * cfg.cell_size,
                            cfg.start + t});
    }
  }

  Rng weather_rng(derive_seed(cfg.seed, 2));
  const Date new_moon{2000, 1, 6};
  auto maybe = [&](double v) -> std::optional<double> {
    if (uniform01(weather_rng) < cfg.missing_weather_fraction) return std::nullopt;
    return v;
  };
  for (int t = 0; t < cfg.days; ++t) {
    const Date d = cfg.start + t;
    const double season = std::sin(2.0 * std::numbers::pi * (d.day_of_year() - 105) / 365.25);
    RawWeatherDay w;
    w.date = d;
    const double temp = 9.5 + 9.5 * season + 3.0 * normal(weather_rng);
    const double hum = std::clamp(0.75 - 0.1 * season + 0.07 * normal(weather_rng), 0.2, 1.0);
    const double daylight = 12.2 + 3.7 * std::sin(2.0 * std::numbers::pi * (d.day_of_year() - 79) / 365.25);
    const double moon = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (d - new_moon) / 29.530588));
    w.temp = maybe(temp);
    w.humidity = maybe(hum);
    w.daylight = maybe(daylight);
    w.moon = maybe(moon);
    if (uniform01(weather_rng) >= cfg.missing_weather_fraction) w.holiday = is_fixed_holiday(d);
    out.weather.push_back(w);
  }

  Rng event_rng(derive_seed(cfg.seed, 3));
  std::map<std::pair<int, CellId>, int> public_events;
  for (int t = 0; t < cfg.days; ++t)
    for (int slot = 0; slot < 3; ++slot)
      if (uniform01(event_rng) < cfg.public_event_rate / 3.0) {
        const CellId c = out.cells[uniform_index(event_rng, out.cells.size())];
        public_events[{t, c}] += 1 + static_cast<int>(uniform_index(event_rng, 3));
      }
  for (const auto& [key, count] : public_events) out.public_events.push_back({cfg.start + key.first, key.second, count});
  return out;
}

void write_synth(const SynthData& data, const std::filesystem::path& dir, bool write_truth) {
  std::filesystem::create_directories(dir);
  auto fmt_opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string{}; };
  {
    csv::Writer w(dir / "events.csv");
    w.row({"x", "y", "date"});
    for (const auto& e : data.events) w.row({csv::format_double(e.x), csv::format_double(e.y), e.date.iso()});
  }
  {
    csv::Writer w(dir / "eligibility.csv");
    w.row({"cell_id", "eligible"});
    for (std::size_t c = 0; c < data.grid.cell_count(); ++c)
      w.row({std::to_string(c), data.grid.eligible[c] ? "1" : "0"});
  }
  {
    csv::Writer w(dir / "cells.csv");
    std::vector<std::string> header{"cell_id"};
    header.insert(header.end(), data.statics.columns.begin(), data.statics.columns.end());
    w.row(header);
    for (const auto& [cell, vals] : data.statics.values) {
      std::vector<std::string> row{std::to_string(cell)};
      for (double v : vals) row.push_back(csv::format_double(v));
      w.row(row);
    }
  }
  {
    csv::Writer w(dir / "weather.csv");
    w.row({"date", "temp", "humidity", "daylight", "moon", "holiday"});
    for (const auto& d : data.weather)
      w.row({d.date.iso(), fmt_opt(d.temp), fmt_opt(d.humidity), fmt_opt(d.daylight), fmt_opt(d.moon),
             d.holiday ? (*d.holiday ? "1" : "0") : ""});
  }
  {
    csv::Writer w(dir / "public_events.csv");
    w.row({"date", "cell_id", "event_count"});
    for (const auto& e : data.public_events) w.row({e.date.iso(), std::to_string(e.cell), std::to_string(e.count)});
  }
  if (write_truth) {
    csv::Writer w(dir / "truth.csv");
    w.row({"cell_id", "day", "risk"});
    for (int t = 0; t < data.period.days(); ++t) {
      const std::string day = (data.period.start() + t).iso();
      for (std::size_t i = 0; i < data.cells.size(); ++i)
        w.row({std::to_string(data.cells[i]), day, csv::format_double(data.risk_at(i, t))});
    }
  }
  std::ofstream ini(dir / "experiment.ini");
  if (!ini) throw DataError(fmt::format("cannot write {}", (dir / "experiment.ini").string()));
  const auto& g = data.grid;
  ini << "# Synthetic near-repeat dataset. Paths are relative to this file.\n"
      << "[data]\nevents = events.csv\neligibility = eligibility.csv\nstatics = cells.csv\nweather = weather.csv\n"
      << "public_events = public_events.csv\n"
      << (write_truth ? "truth = truth.csv\n" : "") << "\n[grid]\n"
      << "cell_size = " << csv::format_double(g.cell_size) << "\norigin_x = " << csv::format_double(g.origin_x)
      << "\norigin_y = " << csv::format_double(g.origin_y) << "\nwidth = " << g.width_cells
      << "\nheight = " << g.height_cells << "\nstart = " << data.period.start().iso()
      << "\nend = " << (data.period.start() + (data.period.days() - 1)).iso() << "\nresolution = daily\n";
}

}  // namespace hotspot
