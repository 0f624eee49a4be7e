// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.
// Usage: hotspot_acceptance [AC1 AC2 ...]   (no arguments runs everything)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hotspot/config.hpp"
#include "hotspot/csv.hpp"
#include "hotspot/ensemble.hpp"
#include "hotspot/error.hpp"
#include "hotspot/evaluation.hpp"
#include "hotspot/learners.hpp"
#include "hotspot/pipeline.hpp"
#include "hotspot/random.hpp"
#include "hotspot/resampling.hpp"
#include "hotspot/synthgen.hpp"
#include "test_support.hpp"

using namespace hotspot;
using hotspot::testing::TempDir;

namespace {

// Pinned tolerances and budgets.
constexpr double kPaiIdentityTol = 1e-12;
constexpr double kDiagonalAucTol = 1e-9;
constexpr double kRandomLawTol = 0.02;
constexpr double kSegmentTol = 1e-12;
constexpr double kGradientRelTol = 1e-5;
constexpr double kMajorityTol = 0.02;
constexpr double kTStatTol = 1e-3;
constexpr double kAc1Seconds = 10.0;
constexpr double kAc2Seconds = 5.0;
constexpr double kAc3Seconds = 30.0;
constexpr double kAc6Seconds = 15.0 * 60.0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;  // first failure is the most useful one
      pass = false;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<CellId> ids(std::size_t n) {
  std::vector<CellId> c(n);
  std::iota(c.begin(), c.end(), CellId{0});
  return c;
}

/// A small synthetic world on disk, shared by the pipeline criteria.
const TempDir& small_world() {
  static const TempDir dir("acc-world");
  static const bool ready = [] {
    SynthConfig c;
    c.width = 15;
    c.height = 15;
    c.days = 240;
    c.target_fraction = 0.01;
    c.ineligible_fraction = 0.1;
    c.seed = 31;
    write_synth(generate(c), dir.path());
    return true;
  }();
  (void)ready;
  return dir;
}

ExperimentConfig small_config(const std::filesystem::path& out, Strategy strategy) {
  auto cfg = ExperimentConfig::load(small_world() / "experiment.ini");
  cfg.strategy = strategy;
  cfg.tune = false;
  cfg.learner.trees = 15;
  cfg.learner.max_depth = 6;
  cfg.phi = 3;
  cfg.output = out;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome ac1_metric_identities() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(101);
  const auto grid = default_coverage_grid();
  const auto report_cov = default_report_coverages();
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 60);
    const int days = 1 + static_cast<int>(uniform_index(rng, 10));
    const auto cells = ids(n);
    std::vector<DailyRanking> rankings;
    std::vector<std::vector<CellId>> actuals;
    for (int d = 0; d < days; ++d) {
      std::vector<double> s(n);
      for (auto& v : s) v = trial % 2 ? uniform01(rng) : static_cast<double>(uniform_index(rng, 3));
      rankings.push_back(rank_cells(cells, s, d));
      std::vector<CellId> a;
      for (CellId c : cells)
        if (uniform01(rng) < 0.2) a.push_back(c);
      actuals.push_back(a);
    }
    actuals[0].push_back(static_cast<CellId>(n - 1));
    std::sort(actuals[0].begin(), actuals[0].end());
    actuals[0].erase(std::unique(actuals[0].begin(), actuals[0].end()), actuals[0].end());

    const auto rep = evaluate_rankings(rankings, actuals, report_cov, grid);
    for (std::size_t c = 0; c < report_cov.size(); ++c) {
      const double gap = std::abs(rep.pai[c] * report_cov[c] - rep.hit_rate[c]);
      worst = std::max(worst, gap);
      o.require(gap <= kPaiIdentityTol, fmt::format("PAI identity off by {:.3g} in trial {}", gap, trial));
    }
    for (std::size_t c = 1; c < rep.curve.hit_rate.size(); ++c)
      o.require(rep.curve.hit_rate[c] >= rep.curve.hit_rate[c - 1], fmt::format("curve decreases in trial {}", trial));

    // Diagonal on a random strictly increasing grid ending at 1.
    std::set<double> pts{1.0};
    const std::size_t extra = uniform_index(rng, 20);
    for (std::size_t i = 0; i < extra; ++i) pts.insert(std::max(1e-6, uniform01(rng)));
    std::vector<double> g(pts.begin(), pts.end());
    const double area = auc(SurveillanceCurve{g, g, 1});
    o.require(std::abs(area - 0.5) <= kDiagonalAucTol, fmt::format("diagonal AUC {:.17g} in trial {}", area, trial));
  }
  const double secs = seconds_since(t0);
  o.require(secs < kAc1Seconds, fmt::format("took {:.2f} s", secs));
  if (o.pass) o.detail = fmt::format("1000 instances, max |PAI*c - h| = {:.2g}, {:.2f} s", worst, secs);
  return o;
}

// ---------------------------------------------------------------------------

/// Exhaustive recount: a cell is inside the top k when fewer than k cells beat it under
/// (score desc, id asc). No sorting involved.
struct OracleCurve {
  std::vector<double> hit;
  double area = 0.0;
};

OracleCurve recount(const std::vector<std::vector<double>>& scores, const std::vector<std::vector<CellId>>& actuals,
                    const std::vector<double>& grid) {
  const std::size_t n = scores.front().size();
  OracleCurve out;
  for (double g : grid) {
    std::size_t k = 0;
    while (k + 1 <= n && static_cast<double>(k + 1) <= g * static_cast<double>(n) + 1e-9) ++k;
    double sum = 0.0;
    int used = 0;
    for (std::size_t d = 0; d < scores.size(); ++d) {
      if (actuals[d].empty()) continue;
      int hits = 0;
      for (CellId x : actuals[d]) {
        std::size_t better = 0;
        for (std::size_t o = 0; o < n; ++o) {
          const double so = scores[d][o], sx = scores[d][static_cast<std::size_t>(x)];
          if (so > sx || (so == sx && static_cast<CellId>(o) < x)) ++better;
        }
        if (better < k) ++hits;
      }
      sum += static_cast<double>(hits) / static_cast<double>(actuals[d].size());
      ++used;
    }
    out.hit.push_back(sum / used);
  }
  double px = 0.0, py = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.area += (grid[i] - px) * (out.hit[i] + py) * 0.5;
    px = grid[i];
    py = out.hit[i];
  }
  if (px < 1.0) out.area += (1.0 - px) * (1.0 + py) * 0.5;
  return out;
}

Outcome ac2_brute_force_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(202);
  const auto grid = default_coverage_grid();
  int instances = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 10);
    const int days = 1 + static_cast<int>(uniform_index(rng, 5));
    const auto cells = ids(n);
    std::vector<std::vector<double>> scores;
    std::vector<std::vector<CellId>> actuals;
    std::vector<DailyRanking> rankings;
    bool any = false;
    for (int d = 0; d < days; ++d) {
      std::vector<double> s(n);
      for (auto& v : s) v = static_cast<double>(uniform_index(rng, 4)) / 4.0;
      scores.push_back(s);
      rankings.push_back(rank_cells(cells, s, d));
      std::vector<CellId> a;
      for (CellId c : cells)
        if (uniform01(rng) < 0.3) a.push_back(c);
      any = any || !a.empty();
      actuals.push_back(a);
    }
    if (!any) continue;
    ++instances;
    const auto rep = evaluate_rankings(rankings, actuals, default_report_coverages(), grid);
    const auto oracle = recount(scores, actuals, grid);
    o.require(rep.curve.hit_rate == oracle.hit, fmt::format("curve differs from the recount in trial {}", trial));
    o.require(rep.auc == oracle.area, fmt::format("AUC differs from the recount in trial {}", trial));
    const auto report_oracle = recount(scores, actuals, default_report_coverages());
    o.require(rep.hit_rate == report_oracle.hit, fmt::format("hit rate differs from the recount in trial {}", trial));
  }
  const double secs = seconds_since(t0);
  o.require(secs < kAc2Seconds, fmt::format("took {:.2f} s", secs));
  if (o.pass) o.detail = fmt::format("{} instances (<= 10 cells x 5 days) match exactly, {:.2f} s", instances, secs);
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac3_random_ranking_law() {
  Outcome o;
  const auto t0 = Clock::now();
  SynthConfig c;
  c.width = 25;
  c.height = 20;
  c.days = 200;
  c.target_fraction = 0.05;
  c.seed = 303;
  const auto d = generate(c);
  o.require(d.cells.size() == 500, "world does not have 500 cells");

  std::vector<std::vector<CellId>> actuals(static_cast<std::size_t>(c.days));
  for (const auto& e : d.events) actuals[static_cast<std::size_t>(e.date - d.period.start())].push_back(*d.grid.locate(e.x, e.y));
  std::size_t fewest = d.cells.size();
  for (auto& a : actuals) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    fewest = std::min(fewest, a.size());
  }
  o.require(fewest >= 1, "a day without crime");

  Rng rng(304);
  std::vector<DailyRanking> rankings;
  for (int t = 0; t < c.days; ++t) {
    std::vector<double> s(d.cells.size());
    for (auto& v : s) v = uniform01(rng);
    rankings.push_back(rank_cells(d.cells, s, t));
  }
  const auto cov = default_report_coverages();
  const auto rep = evaluate_rankings(rankings, actuals, cov, default_coverage_grid());
  std::string rates;
  for (std::size_t i = 0; i < cov.size(); ++i) {
    o.require(std::abs(rep.hit_rate[i] - cov[i]) <= kRandomLawTol,
              fmt::format("hit rate {:.4f} at coverage {}", rep.hit_rate[i], cov[i]));
    rates += fmt::format("{}{:.4f}@{:g}", i ? " " : "", rep.hit_rate[i], cov[i]);
  }
  const double secs = seconds_since(t0);
  o.require(secs < kAc3Seconds, fmt::format("took {:.2f} s", secs));
  if (o.pass) o.detail = fmt::format("{}, min crimes/day {}, {:.2f} s", rates, fewest, secs);
  return o;
}

// ---------------------------------------------------------------------------

bool balanced(const Resampled& r) {
  const auto pos = static_cast<std::size_t>(std::count(r.y.begin(), r.y.end(), 1));
  return 2 * pos == r.y.size();
}

/// Independent NearMiss-1: all M x m distances, full sorts, (mean distance, row) order.
std::vector<std::size_t> near_miss_oracle(const Matrix& X, const std::vector<std::uint8_t>& y, int k, bool standardize) {
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<double> mean(d, 0.0), sd(d, 1.0);
  if (standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += X(i, j);
      mean[j] = s / static_cast<double>(n);
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += (X(i, j) - mean[j]) * (X(i, j) - mean[j]);
      const double root = std::sqrt(v / static_cast<double>(n));
      sd[j] = root > 0.0 ? root : 1.0;
    }
  }
  auto z = [&](std::size_t i, std::size_t j) { return standardize ? (X(i, j) - mean[j]) / sd[j] : X(i, j); };
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) (y[i] ? pos : neg).push_back(i);
  const auto& minority = pos.size() <= neg.size() ? pos : neg;
  const auto& majority = pos.size() <= neg.size() ? neg : pos;
  const std::size_t kk = std::min(static_cast<std::size_t>(k), minority.size());
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t r : majority) {
    std::vector<double> dist;
    for (std::size_t m : minority) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = z(r, j) - z(m, j);
        s += diff * diff;
      }
      dist.push_back(std::sqrt(s));
    }
    std::sort(dist.begin(), dist.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < kk; ++i) sum += dist[i];
    scored.emplace_back(sum / static_cast<double>(kk), r);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> keep = minority;
  for (std::size_t i = 0; i < minority.size(); ++i) keep.push_back(scored[i].second);
  std::sort(keep.begin(), keep.end());
  return keep;
}

/// True when `p` lies on the segment between two distinct minority rows.
bool on_minority_segment(std::span<const double> p, const Matrix& X, const std::vector<std::size_t>& minority) {
  const std::size_t d = X.cols();
  for (std::size_t a : minority)
    for (std::size_t b : minority) {
      if (a == b) continue;
      // Gap from the coordinate with the widest spread, then check every coordinate.
      std::size_t widest = 0;
      for (std::size_t j = 1; j < d; ++j)
        if (std::abs(X(b, j) - X(a, j)) > std::abs(X(b, widest) - X(a, widest))) widest = j;
      const double span = X(b, widest) - X(a, widest);
      const double t = span == 0.0 ? 0.0 : (p[widest] - X(a, widest)) / span;
      if (t < -kSegmentTol || t > 1.0 + kSegmentTol) continue;
      bool ok = true;
      for (std::size_t j = 0; j < d && ok; ++j) {
        const double lo = std::min(X(a, j), X(b, j)), hi = std::max(X(a, j), X(b, j));
        ok = p[j] >= lo - kSegmentTol && p[j] <= hi + kSegmentTol &&
             std::abs(p[j] - (X(a, j) + t * (X(b, j) - X(a, j)))) <= kSegmentTol * std::max(1.0, std::abs(p[j]));
      }
      if (ok) return true;
    }
  return false;
}

Outcome ac4_resampler_contracts() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(404);
  std::size_t synthetics = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 4 + uniform_index(rng, 60);
    const std::size_t d = 1 + uniform_index(rng, 4);
    Matrix X(n, d);
    std::vector<std::uint8_t> y(n);
    const bool coarse = trial % 3 == 0;  // integer grid values force distance ties
    const double rate = 0.05 + 0.4 * uniform01(rng);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j)
        X(i, j) = coarse ? static_cast<double>(uniform_index(rng, 3)) : 10.0 * uniform01(rng) - 5.0;
      y[i] = uniform01(rng) < rate ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    if (trial % 7 == 0) {  // minority labelled 0
      std::fill(y.begin(), y.end(), std::uint8_t{1});
      y[1] = 0;
    }
    const std::uint64_t seed = derive_seed(404, static_cast<std::uint64_t>(trial));
    const auto classes = split_classes(y);

    const auto under = random_under_sample(X, y, seed);
    const auto over = random_over_sample(X, y, seed);
    const auto sm = smote(X, y, seed, {.k_neighbors = 1 + static_cast<int>(uniform_index(rng, 4)),
                                        .strict = false, .standardize = trial % 2 == 0, .fixed_gap = std::nullopt});
    const int k = 1 + static_cast<int>(uniform_index(rng, 4));
    const bool standardize = trial % 2 == 1;
    const auto nm = near_miss(X, y, k, standardize);
    for (const auto* r : {&under, &over, &sm, &nm})
      o.require(balanced(*r), fmt::format("unbalanced output in trial {}", trial));
    o.require(under.y.size() == 2 * classes.minority.size(), fmt::format("under-sample size in trial {}", trial));
    o.require(over.y.size() == 2 * classes.majority.size(), fmt::format("over-sample size in trial {}", trial));

    if (!sm.fell_back) {
      for (std::size_t r = 0; r < sm.y.size(); ++r) {
        if (sm.origin[r] != kSyntheticRow) continue;
        ++synthetics;
        o.require(sm.y[r] == classes.minority_label, fmt::format("synthetic row with majority label in trial {}", trial));
        o.require(on_minority_segment(sm.X.row(r), X, classes.minority),
                  fmt::format("synthetic row off every minority segment in trial {}", trial));
      }
    }
    o.require(nm.origin == near_miss_oracle(X, y, k, standardize), fmt::format("NearMiss differs from oracle in trial {}", trial));
  }
  if (o.pass)
    o.detail = fmt::format("500 inputs, {} SMOTE synthetics checked, NearMiss equals oracle, {:.2f} s", synthetics,
                           seconds_since(t0));
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac5_learner_numerics() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + uniform_index(rng, 40);
    const std::size_t d = 1 + uniform_index(rng, 6);
    Matrix X(n, d);
    std::vector<std::uint8_t> y(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) X(i, j) = 2.0 * uniform01(rng) - 1.0;
      y[i] = uniform01(rng) < 0.3 ? 1 : 0;
      w[i] = 0.1 + uniform01(rng);
    }
    const bool l1 = trial % 2 == 1;
    LogisticObjective obj(X, y, w, 0.5 * uniform01(rng), l1);
    std::vector<double> beta(d);
    for (auto& b : beta) b = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * (0.2 + uniform01(rng));  // away from L1 kinks
    const double b0 = uniform01(rng) - 0.5;
    std::vector<double> g(d);
    double gb = 0.0;
    obj.gradient(beta, b0, g, gb);
    const double h = 1e-6;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); };
    for (std::size_t j = 0; j <= d; ++j) {
      auto up = beta, down = beta;
      double bu = b0, bd = b0;
      if (j < d) {
        up[j] += h;
        down[j] -= h;
      } else {
        bu += h;
        bd -= h;
      }
      const double numeric = (obj.value(up, bu) - obj.value(down, bd)) / (2 * h);
      const double err = rel(j < d ? g[j] : gb, numeric);
      worst = std::max(worst, err);
      o.require(err < kGradientRelTol, fmt::format("gradient relative error {:.3g} in trial {}", err, trial));
    }
  }

  const auto X = Matrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const std::vector<std::uint8_t> y{0, 1, 1, 0};
  LearnerSpec xor_spec;
  xor_spec.trees = 10;
  xor_spec.max_depth = 2;
  xor_spec.bootstrap = false;
  xor_spec.max_features = -1;
  const auto p = fit(xor_spec, X, y).predict_proba(X);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 4; ++i) correct += (p[i] > 0.5) == (y[i] == 1) ? 1 : 0;
  o.require(correct == 4, fmt::format("XOR training accuracy {}/4", correct));

  // phi = 1 against one under-sampled learner with the matched seed.
  Matrix R(1500, 4);
  std::vector<std::uint8_t> ry(1500);
  for (std::size_t i = 0; i < 1500; ++i) {
    for (std::size_t j = 0; j < 4; ++j) R(i, j) = uniform01(rng);
    ry[i] = uniform01(rng) < 0.06 * R(i, 0) ? 1 : 0;
  }
  ry[0] = 1;
  for (auto kind : {LearnerKind::RandomForest, LearnerKind::AdaBoost, LearnerKind::LogisticL1, LearnerKind::LogisticL2}) {
    LearnerSpec s;
    s.kind = kind;
    s.trees = 20;
    s.max_depth = 5;
    s.strength = 1e-3;
    const auto e = train_hyper_ensemble(R, ry, 1, s, 55);
    const auto single = train_under_sampled_member(s, R, ry, ensemble_member_seed(55, 0));
    o.require(e.predict_proba(R) == single.predict_proba(R), fmt::format("phi=1 differs for {}", to_string(kind)));
  }
  TempDir out("acc-phi");
  run_experiment(small_config(out / "under", Strategy::Under));
  auto one = small_config(out / "hyper", Strategy::Hyper);
  one.phi = 1;
  run_experiment(one);
  const auto a = csv::Table::read(out / "under" / "metrics.csv");
  const auto b = csv::Table::read(out / "hyper" / "metrics.csv");
  bool same = a.rows() == b.rows();
  for (std::size_t r = 0; same && r < a.rows(); ++r)
    for (std::size_t c = 3; c < a.header().size(); ++c) same = same && a.row(r)[c] == b.row(r)[c];
  o.require(same, "pipeline phi=1 metrics differ from under-sampling");

  if (o.pass)
    o.detail = fmt::format("max gradient rel err {:.2g}, XOR 4/4, phi=1 identical (4 learners + pipeline), {:.2f} s",
                           worst, seconds_since(t0));
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac6_hyper_efficacy() {
  Outcome o;
  const auto t0 = Clock::now();
  constexpr int kSeeds = 10;
  int beats_naive = 0, beats_under = 0;
  std::string rows;
  for (int s = 1; s <= kSeeds; ++s) {
    SynthConfig c;  // 50 x 40 cells, 730 days, target 6e-4
    c.seed = static_cast<std::uint64_t>(s);
    TempDir dir(fmt::format("acc-eff{}", s));
    write_synth(generate(c), dir.path(), false);
    auto cfg = ExperimentConfig::load(dir / "experiment.ini");
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.tune = false;
    // One fixed forest for every strategy; unlimited depth is the unadjusted default.
    cfg.learner.kind = LearnerKind::RandomForest;
    cfg.learner.trees = 20;
    cfg.learner.max_depth = 0;
    cfg.phi = 10;
    cfg.validate();
    auto data = prepare(cfg);

    std::map<Strategy, MetricReport> reps;
    for (auto strategy : {Strategy::Naive, Strategy::Under, Strategy::Hyper}) {
      data.config.strategy = strategy;
      reps[strategy] = evaluate_stage(data, train_stage(data)).report;
    }
    const auto& h = reps[Strategy::Hyper];
    const auto& n = reps[Strategy::Naive];
    const auto& u = reps[Strategy::Under];
    beats_naive += h.hit_rate[0] > n.hit_rate[0] ? 1 : 0;
    beats_under += h.auc > u.auc ? 1 : 0;
    rows += fmt::format("  seed {:2}: hit@5% hyper {:.4f} naive {:.4f} under {:.4f} | AUC hyper {:.4f} under {:.4f}\n", s,
                        h.hit_rate[0], n.hit_rate[0], u.hit_rate[0], h.auc, u.auc);
  }
  const double secs = seconds_since(t0);
  std::fputs(rows.c_str(), stdout);
  o.require(beats_naive >= 8, fmt::format("hyper beat naive at 5% in {}/10 seeds", beats_naive));
  o.require(beats_under >= 7, fmt::format("hyper beat under in AUC in {}/10 seeds", beats_under));
  o.require(secs < kAc6Seconds, fmt::format("took {:.0f} s", secs));
  if (o.pass)
    o.detail = fmt::format("hyper > naive at 5% in {}/10, hyper > under in AUC in {}/10, {:.0f} s", beats_naive,
                           beats_under, secs);
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac7_majority_baseline() {
  Outcome o;
  const auto t0 = Clock::now();
  SynthConfig c;
  c.seed = 707;
  const auto world = generate(c);

  auto run_majority = [&](const SynthData& d, const std::string& tag) {
    TempDir dir(tag);
    write_synth(d, dir.path(), false);
    auto cfg = ExperimentConfig::load(dir / "experiment.ini");
    cfg.strategy = Strategy::Majority;
    cfg.tune = false;
    cfg.validate();
    const auto data = prepare(cfg);
    return evaluate_stage(data, train_stage(data)).report;
  };

  const auto rep = run_majority(world, "acc-major");
  double worst = -1.0;
  for (std::size_t i = 0; i < rep.curve.coverage.size(); ++i) {
    const double excess = rep.curve.hit_rate[i] - rep.curve.coverage[i];
    worst = std::max(worst, excess);
    o.require(excess <= kMajorityTol,
              fmt::format("hit rate {:.4f} at coverage {:.2f}", rep.curve.hit_rate[i], rep.curve.coverage[i]));
  }

  // Same world with every event in the first 20 % of cell ids removed.
  const auto prefix = static_cast<std::size_t>(std::floor(0.20 * static_cast<double>(world.cells.size())));
  const std::set<CellId> head(world.cells.begin(), world.cells.begin() + static_cast<std::ptrdiff_t>(prefix));
  auto cleared = world;
  std::erase_if(cleared.events, [&](const EventRecord& e) { return head.count(*world.grid.locate(e.x, e.y)) != 0; });
  const auto zero = run_majority(cleared, "acc-major0");
  for (std::size_t i = 0; i < zero.coverage.size(); ++i)
    o.require(zero.hit_rate[i] == 0.0 && zero.pai[i] == 0.0,
              fmt::format("cleared prefix gives hit rate {} at {}", zero.hit_rate[i], zero.coverage[i]));
  for (std::size_t i = 0; i < zero.curve.coverage.size() && zero.curve.coverage[i] <= 0.20 + 1e-12; ++i)
    o.require(zero.curve.hit_rate[i] == 0.0, fmt::format("cleared prefix curve nonzero at {}", zero.curve.coverage[i]));

  if (o.pass)
    o.detail = fmt::format("max (hit - coverage) {:.4f} over 100 levels, cleared prefix gives 0.0, {:.2f} s", worst,
                           seconds_since(t0));
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac8_leakage_audit() {
  Outcome o;
  const auto t0 = Clock::now();
  TempDir out("acc-audit");
  LeakageAudit audit;
  run_experiment(small_config(out / "run", Strategy::Hyper), &audit);
  o.require(audit.test_reads_before_evaluation() == 0,
            fmt::format("{} test reads before evaluation", audit.test_reads_before_evaluation()));
  o.require(audit.test_reads_during_evaluation() > 0, "evaluation never opened the test frame");
  o.require(audit.crime_rows_checked() > 0, "no crime rows recounted");
  o.require(audit.crime_violations() == 0, fmt::format("{} crime feature violations", audit.crime_violations()));

  Rng rng(808);
  int split_frames = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(uniform_index(rng, 6));
    const int h = 1 + static_cast<int>(uniform_index(rng, 6));
    const int days = 5 + static_cast<int>(uniform_index(rng, 60));
    const auto grid = hotspot::testing::unit_grid(w, h);
    const Date start{2018, 3, 1};
    const Period period(start, start + (days - 1), Resolution::Daily);
    std::vector<EventRecord> events;
    const std::size_t n_events = uniform_index(rng, 50);
    for (std::size_t e = 0; e < n_events; ++e)
      events.push_back(hotspot::testing::event_at(grid, static_cast<CellId>(uniform_index(rng, grid.cell_count())),
                                                  start, static_cast<int>(uniform_index(rng, static_cast<std::size_t>(days)))));
    const auto frame = build_frame(grid, events, period, InvalidEventPolicy::Reject);
    const double fraction = 0.2 + 0.6 * uniform01(rng);
    const auto split = chronological_split(frame, fraction);
    const int expected = static_cast<int>(std::floor(fraction * days + 1e-9));
    bool ok = split.boundary_bucket == expected && split.train.bucket_count() == expected &&
              split.test.first_bucket() == expected && split.train.rows() + split.test.rows() == frame.rows();
    int latest_train = -1, earliest_test = days;
    for (std::size_t r = 0; r < split.train.rows(); ++r) latest_train = std::max(latest_train, split.train.bucket_of(r));
    for (std::size_t r = 0; r < split.test.rows(); ++r) earliest_test = std::min(earliest_test, split.test.bucket_of(r));
    ok = ok && latest_train < earliest_test;
    for (std::size_t r = 0; ok && r < frame.rows(); ++r) {
      const auto& side = r < split.train.rows() ? split.train : split.test;
      const std::size_t local = r < split.train.rows() ? r : r - split.train.rows();
      ok = side.cell_of(local) == frame.cell_of(r) && side.bucket_of(local) == frame.bucket_of(r) &&
           side.labels()[local] == frame.labels()[r];
    }
    o.require(ok, fmt::format("split property fails on random frame {}", trial));
    ++split_frames;
  }
  if (o.pass)
    o.detail = fmt::format("0 early reads, 0 of {} recounted rows wrong, split holds on {} frames, {:.2f} s",
                           audit.crime_rows_checked(), split_frames, seconds_since(t0));
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac9_t_test() {
  Outcome o;
  const std::vector<double> diffs{1, 2, 3}, zeros{0, 0, 0};
  const auto r = paired_t_test(diffs, zeros);
  // By hand: mean 2, sample sd 1, t = 2 / (1 / sqrt 3) = 3.4641.
  const double hand = 2.0 / (1.0 / std::sqrt(3.0));
  o.require(std::abs(r.t - 3.464) <= kTStatTol, fmt::format("t = {:.6f}", r.t));
  o.require(std::abs(r.t - hand) <= kTStatTol, fmt::format("t = {:.6f} vs hand {:.6f}", r.t, hand));
  o.require(r.df == 2.0, fmt::format("df = {}", r.df));
  const std::vector<double> series{0.3, 0.1, 0.7, 0.2};
  const auto same = paired_t_test(series, series);
  o.require(same.t == 0.0 && same.p == 0.5, fmt::format("identical series give t = {}, p = {}", same.t, same.p));
  if (o.pass) o.detail = fmt::format("t = {:.6f}, df = {}, p = {:.6f}; identical series t = 0, p = 0.5", r.t, r.df, r.p);
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac10_determinism() {
  Outcome o;
  const auto t0 = Clock::now();
  TempDir out("acc-det");
  for (const char* run : {"a", "b"}) {
    auto cfg = small_config(out / run, Strategy::Hyper);
    cfg.tune = true;  // the full pipeline, CV included
    cfg.learner_grid = {{"trees", {"5", "10"}}, {"max_depth", {"4"}}};
    cfg.validate();
    run_experiment(cfg);
  }
  for (const char* f : {"metrics.csv", "surveillance.csv"}) {
    const auto a = hotspot::testing::read_file(out / "a" / f);
    o.require(!a.empty(), fmt::format("{} is empty", f));
    o.require(a == hotspot::testing::read_file(out / "b" / f), fmt::format("{} differs between runs", f));
  }
  if (o.pass) o.detail = fmt::format("metrics.csv and surveillance.csv byte-identical, {:.2f} s", seconds_since(t0));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", ac1_metric_identities}, {"AC2", ac2_brute_force_oracle}, {"AC3", ac3_random_ranking_law},
      {"AC4", ac4_resampler_contracts}, {"AC5", ac5_learner_numerics}, {"AC6", ac6_hyper_efficacy},
      {"AC7", ac7_majority_baseline}, {"AC8", ac8_leakage_audit},   {"AC9", ac9_t_test},
      {"AC10", ac10_determinism},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = fmt::format("threw: {}", e.what());
    }
    failed += o.pass ? 0 : 1;
    fmt::print("{} {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
