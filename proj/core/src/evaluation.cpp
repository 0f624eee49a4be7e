#include "hotspot/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "hotspot/error.hpp"

namespace hotspot {

namespace {

constexpr double kFloorSlack = 1e-9;

/// Sorted ranking positions of the (deduplicated) positive cells.
std::vector<std::size_t> positive_positions(const DailyRanking& ranking, std::span<const CellId> actual) {
  std::vector<std::pair<CellId, std::size_t>> pos(ranking.cells.size());
  for (std::size_t i = 0; i < ranking.cells.size(); ++i) pos[i] = {ranking.cells[i], i};
  std::sort(pos.begin(), pos.end());
  std::vector<CellId> want(actual.begin(), actual.end());
  std::sort(want.begin(), want.end());
  want.erase(std::unique(want.begin(), want.end()), want.end());
  std::vector<std::size_t> out;
  out.reserve(want.size());
  for (CellId c : want) {
    auto it = std::lower_bound(pos.begin(), pos.end(), std::pair<CellId, std::size_t>{c, 0});
    if (it == pos.end() || it->first != c)
      throw DataError(fmt::format("positive cell {} on day {} is not in the ranking", c, ranking.day));
    out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t hits_within(const std::vector<std::size_t>& positions, std::size_t k) {
  return static_cast<std::size_t>(std::lower_bound(positions.begin(), positions.end(), k) - positions.begin());
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("coverage grid is empty");
  double prev = 0.0;
  for (double x : grid) {
    if (!(x > prev) || x > 1.0) throw ConfigError("coverage grid must be strictly increasing inside (0, 1]");
    prev = x;
  }
}

}  // namespace

DailyRanking rank_cells(std::span<const CellId> cells, std::span<const double> scores, int day) {
  if (cells.size() != scores.size())
    throw DataError(fmt::format("day {}: {} cells but {} scores", day, cells.size(), scores.size()));
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (double s : scores)
    if (!std::isfinite(s)) throw DataError(fmt::format("day {}: non-finite score", day));
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return cells[a] < cells[b];
  });
  DailyRanking r;
  r.day = day;
  r.cells.reserve(cells.size());
  r.scores.reserve(cells.size());
  for (std::size_t i : order) {
    if (!r.cells.empty() && r.cells.back() == cells[i] && r.scores.back() == scores[i])
      throw DataError(fmt::format("day {}: cell {} scored twice", day, cells[i]));
    r.cells.push_back(cells[i]);
    r.scores.push_back(scores[i]);
  }
  // Equal-score duplicates sit next to each other; others need a full check.
  std::vector<CellId> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DataError(fmt::format("day {}: a cell is scored twice", day));
  return r;
}

CoverageSpec CoverageSpec::make(double fraction, std::size_t eligible_cells) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ConfigError(fmt::format("coverage {} is outside (0, 1]", fraction));
  CoverageSpec c;
  c.fraction = fraction;
  c.k_cells = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(eligible_cells) + kFloorSlack));
  return c;
}

std::optional<double> daily_hit_rate(const DailyRanking& ranking, std::span<const CellId> actual,
                                     const CoverageSpec& coverage) {
  if (coverage.k_cells > ranking.cells.size())
    throw ConfigError(fmt::format("coverage of {} cells exceeds the {} ranked cells", coverage.k_cells,
                                  ranking.cells.size()));
  const auto positions = positive_positions(ranking, actual);
  if (positions.empty()) return std::nullopt;
  return static_cast<double>(hits_within(positions, coverage.k_cells)) / static_cast<double>(positions.size());
}

double pai(double mean_hit_rate, double coverage) {
  if (!(coverage > 0.0) || coverage > 1.0) throw ConfigError(fmt::format("coverage {} is outside (0, 1]", coverage));
  return mean_hit_rate / coverage;
}

namespace {

/// Per-coverage daily hit rates plus pooled counts, shared by curve and report.
struct DailyTable {
  std::vector<std::vector<std::optional<double>>> rates;  // [coverage][day]
  std::vector<double> pooled_hits;                        // [coverage]
  double pooled_positives = 0.0;
  std::size_t days_used = 0;
};

DailyTable tabulate(std::span<const DailyRanking> rankings, std::span<const std::vector<CellId>> actuals,
                    std::span<const double> coverages) {
  if (rankings.size() != actuals.size())
    throw DataError(fmt::format("{} rankings but {} positive sets", rankings.size(), actuals.size()));
  DailyTable t;
  t.rates.assign(coverages.size(), std::vector<std::optional<double>>(rankings.size()));
  t.pooled_hits.assign(coverages.size(), 0.0);
  for (std::size_t d = 0; d < rankings.size(); ++d) {
    const auto positions = positive_positions(rankings[d], actuals[d]);
    if (positions.empty()) continue;
    ++t.days_used;
    t.pooled_positives += static_cast<double>(positions.size());
    for (std::size_t c = 0; c < coverages.size(); ++c) {
      const auto spec = CoverageSpec::make(coverages[c], rankings[d].cells.size());
      const auto hits = static_cast<double>(hits_within(positions, spec.k_cells));
      t.rates[c][d] = hits / static_cast<double>(positions.size());
      t.pooled_hits[c] += hits;
    }
  }
  return t;
}

std::vector<double> average(const DailyTable& t, Averaging averaging) {
  std::vector<double> out(t.rates.size(), 0.0);
  for (std::size_t c = 0; c < t.rates.size(); ++c) {
    if (averaging == Averaging::RatioOfSums) {
      out[c] = t.pooled_hits[c] / t.pooled_positives;
    } else {
      double sum = 0.0;
      for (const auto& r : t.rates[c])
        if (r) sum += *r;
      out[c] = sum / static_cast<double>(t.days_used);
    }
  }
  return out;
}

}  // namespace

SurveillanceCurve surveillance_curve(std::span<const DailyRanking> rankings,
                                     std::span<const std::vector<CellId>> actuals, std::span<const double> grid,
                                     Averaging averaging) {
  check_grid(grid);
  const auto table = tabulate(rankings, actuals, grid);
  if (table.days_used == 0) throw DataError("no evaluation day has a positive cell");
  SurveillanceCurve curve;
  curve.coverage.assign(grid.begin(), grid.end());
  curve.hit_rate = average(table, averaging);
  curve.days_used = table.days_used;
  return curve;
}

double auc(const SurveillanceCurve& curve) {
  double area = 0.0, px = 0.0, py = 0.0;
  for (std::size_t i = 0; i < curve.coverage.size(); ++i) {
    area += (curve.coverage[i] - px) * (curve.hit_rate[i] + py) * 0.5;
    px = curve.coverage[i];
    py = curve.hit_rate[i];
  }
  if (px < 1.0) area += (1.0 - px) * (1.0 + py) * 0.5;
  return area;
}

std::vector<double> default_coverage_grid() {
  std::vector<double> g(100);
  for (int i = 0; i < 100; ++i) g[static_cast<std::size_t>(i)] = (i + 1) / 100.0;
  return g;
}

std::vector<double> default_report_coverages() { return {0.05, 0.10, 0.20}; }

MetricReport evaluate_rankings(std::span<const DailyRanking> rankings, std::span<const std::vector<CellId>> actuals,
                               std::span<const double> report_coverages, std::span<const double> curve_grid,
                               Averaging averaging) {
  for (double c : report_coverages)
    if (!(c > 0.0) || c > 1.0) throw ConfigError(fmt::format("coverage {} is outside (0, 1]", c));
  MetricReport report;
  report.curve = surveillance_curve(rankings, actuals, curve_grid, averaging);
  report.auc = auc(report.curve);
  const auto table = tabulate(rankings, actuals, report_coverages);
  report.coverage.assign(report_coverages.begin(), report_coverages.end());
  report.hit_rate = average(table, averaging);
  for (std::size_t c = 0; c < report.coverage.size(); ++c)
    report.pai.push_back(pai(report.hit_rate[c], report.coverage[c]));
  report.daily = table.rates;
  for (const auto& r : rankings) report.days.push_back(r.day);
  return report;
}

DayBatch group_by_day(std::span<const CellId> cells, std::span<const int> days, std::span<const double> scores,
                      std::span<const std::uint8_t> labels) {
  if (cells.size() != days.size() || cells.size() != scores.size() || cells.size() != labels.size())
    throw DataError("row-level cells, days, scores and labels differ in length");
  std::map<int, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < days.size(); ++i) rows_of[days[i]].push_back(i);
  DayBatch batch;
  std::vector<CellId> c;
  std::vector<double> s;
  for (const auto& [day, rows] : rows_of) {
    c.clear();
    s.clear();
    std::vector<CellId> positives;
    for (std::size_t i : rows) {
      c.push_back(cells[i]);
      s.push_back(scores[i]);
      if (labels[i]) positives.push_back(cells[i]);
    }
    batch.rankings.push_back(rank_cells(c, s, day));
    batch.actuals.push_back(std::move(positives));
  }
  return batch;
}

double grouped_surveillance_auc(std::span<const CellId> cells, std::span<const int> days,
                                std::span<const double> scores, std::span<const std::uint8_t> labels,
                                std::span<const double> grid) {
  const auto batch = group_by_day(cells, days, scores, labels);
  return auc(surveillance_curve(batch.rankings, batch.actuals, grid));
}

PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError(fmt::format("paired series differ in length ({} vs {})", a.size(), b.size()));
  if (a.size() < 2) throw DataError("paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  PairedTestResult r;
  r.n = n;
  r.df = static_cast<double>(n - 1);
  r.mean_difference = mean;
  const double sd = std::sqrt(ss / r.df);
  if (sd == 0.0) {
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 0.5;
    } else {
      r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = mean > 0 ? 0.0 : 1.0;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(r.df);
  r.p = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}

std::string render_surveillance_svg(std::span<const std::string> labels, std::span<const SurveillanceCurve> curves) {
  constexpr double W = 480, H = 360, L = 60, R = 20, T = 20, B = 50;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  auto px = [&](double x) { return L + x * (W - L - R); };
  auto py = [&](double y) { return H - B - y * (H - T - B); };
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      W, H);
  svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", px(0), py(0), px(1), py(0));
  svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", px(0), py(0), px(0), py(1));
  svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n", px(0),
                     py(0), px(1), py(1));
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.1f}</text>\n", px(v), py(0) + 16, v);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1f}</text>\n", px(0) - 6, py(v) + 4, v);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Coverage area</text>\n", px(0.5), H - 12);
  svg += fmt::format(
      "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">Hit rate</text>\n", py(0.5),
      py(0.5));
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const char* color = kColors[k % std::size(kColors)];
    std::string points = fmt::format("{:.2f},{:.2f}", px(0), py(0));
    for (std::size_t i = 0; i < curves[k].coverage.size(); ++i)
      points += fmt::format(" {:.2f},{:.2f}", px(curves[k].coverage[i]), py(curves[k].hit_rate[i]));
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, points);
    const std::string label = k < labels.size() ? labels[k] : fmt::format("curve {}", k + 1);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{} (AUC {:.3f})</text>\n", px(0.55),
                       py(0.3) - 14.0 * static_cast<double>(k), color, label, auc(curves[k]));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace hotspot
