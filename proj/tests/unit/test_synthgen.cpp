#include <doctest.h>

#include <cmath>
#include <set>

#include "hotspot/csv.hpp"
#include "hotspot/error.hpp"
#include "hotspot/evaluation.hpp"
#include "hotspot/random.hpp"
#include "hotspot/synthgen.hpp"
#include "test_support.hpp"

using namespace hotspot;
using hotspot::testing::TempDir;

namespace {

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig c;
  c.width = 20;
  c.height = 20;
  c.days = 365;
  c.target_fraction = 2e-3;
  c.seed = seed;
  return c;
}

/// Positive (cell position, day) pairs of a synthetic world.
std::set<std::pair<std::size_t, int>> positives(const SynthData& d) {
  std::set<std::pair<std::size_t, int>> out;
  for (const auto& e : d.events) {
    const auto cell = *d.grid.locate(e.x, e.y);
    const auto pos = static_cast<std::size_t>(std::lower_bound(d.cells.begin(), d.cells.end(), cell) - d.cells.begin());
    out.insert({pos, e.date - d.period.start()});
  }
  return out;
}

}  // namespace

TEST_CASE("same seed gives identical worlds and files") {
  const auto a = generate(small_config(7));
  const auto b = generate(small_config(7));
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].x == b.events[i].x);
    CHECK(a.events[i].date == b.events[i].date);
  }
  CHECK(a.risk == b.risk);
  TempDir d1("synth-a"), d2("synth-b");
  write_synth(a, d1.path());
  write_synth(b, d2.path());
  for (const char* f : {"events.csv", "eligibility.csv", "cells.csv", "weather.csv", "public_events.csv", "truth.csv",
                        "experiment.ini"})
    CHECK(hotspot::testing::read_file(d1 / f) == hotspot::testing::read_file(d2 / f));
  const auto c = generate(small_config(8));
  CHECK(c.risk != a.risk);
}

TEST_CASE("positive count stays within three binomial deviations of the target") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto cfg = small_config(seed);
    const auto d = generate(cfg);
    const double n = static_cast<double>(d.cells.size()) * cfg.days;
    const double mean = cfg.target_fraction * n;
    const double sd = std::sqrt(n * cfg.target_fraction * (1.0 - cfg.target_fraction));
    CHECK(d.expected_positives == doctest::Approx(mean).epsilon(1e-3));
    const auto count = static_cast<double>(positives(d).size());
    CHECK(std::abs(count - mean) <= 3.0 * sd);
    CHECK(d.events.size() == positives(d).size());  // at most one event per cell and day
  }
}

TEST_CASE("without boost and weekday effects the risk is constant per cell") {
  auto cfg = small_config(4);
  cfg.boost = 0.0;
  cfg.neighbor_boost = 0.0;
  cfg.dow_weights = {};
  const auto d = generate(cfg);
  for (std::size_t c = 0; c < d.cells.size(); ++c)
    for (int t = 1; t < cfg.days; ++t) CHECK(d.risk_at(c, t) == d.risk_at(c, 0));
}

TEST_CASE("an event raises the next-day risk of its cell") {
  auto cfg = small_config(5);
  cfg.target_fraction = 5e-3;
  const auto d = generate(cfg);
  const auto pos = positives(d);
  std::size_t after = 0, after_hit = 0;
  for (const auto& [cell, day] : pos) {
    if (day + 1 >= cfg.days) continue;
    ++after;
    after_hit += pos.count({cell, day + 1});
  }
  const double conditional = static_cast<double>(after_hit) / static_cast<double>(after);
  const double unconditional = static_cast<double>(pos.size()) / (static_cast<double>(d.cells.size()) * cfg.days);
  CHECK(conditional > unconditional);
}

TEST_CASE("ranking by true risk beats id order and random scores") {
  const auto cfg = small_config(6);
  const auto d = generate(cfg);
  const auto pos = positives(d);
  std::vector<DailyRanking> oracle, prefix, random;
  std::vector<std::vector<CellId>> actuals;
  Rng rng(3);
  for (int t = 0; t < cfg.days; ++t) {
    std::vector<double> truth(d.cells.size()), zero(d.cells.size(), 0.0), noise(d.cells.size());
    std::vector<CellId> a;
    for (std::size_t c = 0; c < d.cells.size(); ++c) {
      truth[c] = d.risk_at(c, t);
      noise[c] = uniform01(rng);
      if (pos.count({c, t})) a.push_back(d.cells[c]);
    }
    oracle.push_back(rank_cells(d.cells, truth, t));
    prefix.push_back(rank_cells(d.cells, zero, t));
    random.push_back(rank_cells(d.cells, noise, t));
    actuals.push_back(a);
  }
  const auto grid = default_coverage_grid();
  const auto o = surveillance_curve(oracle, actuals, grid);
  const auto p = surveillance_curve(prefix, actuals, grid);
  const auto r = surveillance_curve(random, actuals, grid);
  CHECK(auc(o) > auc(r));
  CHECK(auc(o) > auc(p));
  CHECK(o.hit_rate[4] > r.hit_rate[4]);
}

TEST_CASE("written files use the reader schemas") {
  auto cfg = small_config(9);
  cfg.ineligible_fraction = 0.2;
  const auto d = generate(cfg);
  CHECK(d.cells.size() == 320);
  TempDir dir("synth-files");
  write_synth(d, dir.path(), false);
  CHECK_FALSE(std::filesystem::exists(dir / "truth.csv"));
  const auto events = read_events_csv(dir / "events.csv");
  CHECK(events.size() == d.events.size());
  const auto elig = read_eligibility_csv(dir / "eligibility.csv");
  std::size_t eligible = 0;
  for (auto [cell, ok] : elig) eligible += ok ? 1 : 0;
  CHECK(eligible == d.cells.size());
  const auto statics = read_static_csv(dir / "cells.csv");
  CHECK(statics.values.size() == d.cells.size());
  CHECK(statics.column("popdens").has_value());
  CHECK(statics.column("landuse_div").has_value());
  const auto weather = read_weather_csv(dir / "weather.csv", d.period.start(), d.period.start() + (cfg.days - 1));
  CHECK(weather.covers(d.period.start()));
}

TEST_CASE("config validation") {
  SynthConfig c;
  c.target_fraction = 0.06;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.target_fraction = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  SynthConfig d;
  d.decay_days = -1;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  SynthConfig e;
  e.width = 0;
  CHECK_THROWS_AS(e.validate(), ConfigError);
}
