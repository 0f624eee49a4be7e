#include "hotspot/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hotspot/csv.hpp"
#include "hotspot/error.hpp"
#include "hotspot/random.hpp"
#include "hotspot/resampling.hpp"

namespace hotspot {

namespace {

// Sub-streams of the run seed.
constexpr std::uint64_t kCvStream = 1;
constexpr std::uint64_t kFitStream = 2;
constexpr std::uint64_t kEnsembleStream = 3;
constexpr std::uint64_t kResampleStream = 4;
constexpr std::uint64_t kAuditStream = 5;

constexpr std::size_t kAuditRows = 5000;

/// Prefixes errors escaping a stage with its name, keeping the error type (and exit code).
template <typename F>
decltype(auto) in_stage(std::string_view stage, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("[{}] {}", stage, e.what()));
  } catch (const DataError& e) {
    throw DataError(fmt::format("[{}] {}", stage, e.what()));
  } catch (const NumericError& e) {
    throw NumericError(fmt::format("[{}] {}", stage, e.what()));
  } catch (const std::filesystem::filesystem_error& e) {
    throw DataError(fmt::format("[{}] {}", stage, e.what()));
  }
}

struct Inputs {
  std::vector<EventRecord> events;
  SpatioTemporalFrame frame;  // labels only, all eligible cells
  FrameBuildReport report;
};

Inputs load_inputs(const ExperimentConfig& cfg) {
  Inputs in;
  in.events = read_events_csv(cfg.events);
  EligibilityTable elig;
  const EligibilityTable* elig_ptr = nullptr;
  if (!cfg.eligibility.empty()) {
    elig = read_eligibility_csv(cfg.eligibility);
    elig_ptr = &elig;
  }
  const GridSpec grid = cfg.width ? make_grid(*cfg.origin_x, *cfg.origin_y, cfg.cell_size, *cfg.width, *cfg.height, elig_ptr)
                                  : build_grid(in.events, cfg.cell_size, elig_ptr);
  if (in.events.empty() && (!cfg.start || !cfg.end))
    throw DataError("no events read and no explicit grid.start / grid.end");
  Date first = cfg.start.value_or(Date{}), last = cfg.end.value_or(Date{});
  if (!cfg.start || !cfg.end) {
    auto [lo, hi] = std::minmax_element(in.events.begin(), in.events.end(),
                                        [](const EventRecord& a, const EventRecord& b) { return a.date < b.date; });
    if (!cfg.start) first = lo->date;
    if (!cfg.end) last = hi->date;
  }
  if (last < first) throw DataError(fmt::format("study period {} .. {} is empty", first.iso(), last.iso()));
  const Period period(first, last, cfg.resolution);
  in.frame = build_frame(grid, in.events, period, cfg.invalid_events, &in.report);
  return in;
}

double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<CellId> stratum_cells(const StrataSpec& strata, const StaticTable& statics, std::span<const CellId> cells) {
  const auto col = statics.column(strata.feature);
  if (!col) throw ConfigError(fmt::format("strata feature '{}' is not a static column", strata.feature));
  std::vector<double> values;
  for (CellId c : cells) {
    auto it = statics.values.find(c);
    if (it == statics.values.end()) throw DataError(fmt::format("static attributes missing for cell {}", c));
    values.push_back(it->second[*col]);
  }
  std::array<double, 2> cut{};
  if (!strata.thresholds.empty()) {
    cut = {strata.thresholds[0], strata.thresholds[1]};
  } else {
    cut = {percentile(values, strata.percentiles[0]), percentile(values, strata.percentiles[1])};
  }
  std::vector<CellId> keep;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double v = values[i];
    const bool in = strata.stratum == Stratum::Low   ? v <= cut[0]
                    : strata.stratum == Stratum::Mid ? (v > cut[0] && v <= cut[1])
                    : strata.stratum == Stratum::High ? v > cut[1]
                                                      : true;
    if (in) keep.push_back(cells[i]);
  }
  if (keep.empty())
    throw DataError(fmt::format("stratum '{}' of '{}' holds no cells", to_string(strata.stratum), strata.feature));
  return keep;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << text;
}

/// Cross-validation trainer matching a strategy's imbalance treatment.
FoldTrainer trainer_for(const ExperimentConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::Under:
    case Strategy::Hyper: return under_sampling_trainer();
    case Strategy::Cost:
      return [](const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                std::span<const std::size_t> rows, std::uint64_t seed) -> std::unique_ptr<Scorer> {
        const Matrix Xs = gather_rows(X, rows);
        std::vector<std::uint8_t> ys(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) ys[i] = y[rows[i]];
        LearnerSpec s = spec;
        s.seed = seed;
        return std::make_unique<LearnerModel>(fit(s, Xs, ys, cost_weights(ys)));
      };
    case Strategy::Over:
    case Strategy::Smote:
    case Strategy::NearMiss: {
      const ResampleMethod method = cfg.strategy == Strategy::Over    ? ResampleMethod::RandomOver
                                    : cfg.strategy == Strategy::Smote ? ResampleMethod::Smote
                                                                      : ResampleMethod::NearMiss;
      const ResampleSpec base{method, cfg.k_neighbors, 0, cfg.strict, cfg.standardize};
      return [base](const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                    std::span<const std::size_t> rows, std::uint64_t seed) -> std::unique_ptr<Scorer> {
        const Matrix Xs = gather_rows(X, rows);
        std::vector<std::uint8_t> ys(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) ys[i] = y[rows[i]];
        ResampleSpec rs = base;
        rs.seed = derive_seed(seed, 0);
        const auto r = resample(Xs, ys, rs);
        LearnerSpec s = spec;
        s.seed = derive_seed(seed, 1);
        return std::make_unique<LearnerModel>(fit(s, r.X, r.y));
      };
    }
    case Strategy::Naive:
    case Strategy::Majority: break;
  }
  return plain_trainer();
}

}  // namespace

// ---------------------------------------------------------------------------
// Audit

void LeakageAudit::enter_stage(std::string_view stage) {
  stage_ = std::string(stage);
  if (stage == "evaluate") evaluating_ = true;
  log_.push_back(fmt::format("enter {}", stage));
}

void LeakageAudit::record_test_read(std::string_view purpose) {
  (evaluating_ ? late_reads_ : early_reads_) += 1;
  log_.push_back(fmt::format("test read in {} ({}){}", stage_, purpose, evaluating_ ? "" : " LEAK"));
}

void LeakageAudit::record_crime_check(std::size_t rows_checked, std::size_t violations) {
  crime_checked_ += rows_checked;
  crime_violations_ += violations;
  log_.push_back(fmt::format("crime features in {}: {} rows recounted, {} mismatches", stage_, rows_checked, violations));
}

const SpatioTemporalFrame& SealedFrame::open(std::string_view purpose) const {
  if (audit_) audit_->record_test_read(purpose);
  return frame_;
}

std::size_t audit_crime_features(const SpatioTemporalFrame& assembled, std::span<const EventRecord> raw_events,
                                 std::span<const int> windows, std::size_t max_rows, std::uint64_t seed,
                                 std::size_t* rows_checked) {
  const auto& period = assembled.period();
  const auto& grid = assembled.grid();
  const auto names = crime_feature_names(windows, period.resolution());
  std::vector<std::pair<std::size_t, int>> columns;  // (matrix column, window)
  for (std::size_t k = 0; k < names.size(); ++k) {
    auto it = std::find(assembled.feature_names().begin(), assembled.feature_names().end(), names[k]);
    if (it != assembled.feature_names().end())
      columns.emplace_back(static_cast<std::size_t>(it - assembled.feature_names().begin()), windows[k]);
  }
  if (rows_checked) *rows_checked = 0;
  if (columns.empty() || assembled.rows() == 0) return 0;

  // Events that made it into the index: inside the grid, eligible and inside the period.
  std::vector<std::pair<Date, CellId>> kept;
  for (const auto& e : raw_events) {
    const auto cell = grid.locate(e.x, e.y);
    if (cell && grid.is_eligible(*cell) && period.bucket_of(e.date)) kept.emplace_back(e.date, *cell);
  }
  std::sort(kept.begin(), kept.end());

  std::vector<std::size_t> rows(assembled.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (rows.size() > max_rows) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_rows; ++i) std::swap(rows[i], rows[i + uniform_index(rng, rows.size() - i)]);
    rows.resize(max_rows);
  }
  std::size_t violations = 0;
  for (std::size_t r : rows) {
    const CellId cell = assembled.cell_of(r);
    const int bucket = assembled.bucket_of(r);
    auto area = grid.moore_neighbors(cell);
    area.push_back(cell);
    std::sort(area.begin(), area.end());
    const Date until = period.bucket_start(bucket);  // exclusive: nothing from the row's own bucket
    bool ok = true;
    for (const auto& [col, w] : columns) {
      const Date from = period.bucket_start(std::max(0, bucket - w));
      auto lo = std::lower_bound(kept.begin(), kept.end(), std::pair<Date, CellId>{from, INT64_MIN});
      auto hi = std::lower_bound(kept.begin(), kept.end(), std::pair<Date, CellId>{until, INT64_MIN});
      double count = 0;
      for (auto it = lo; it != hi; ++it)
        if (std::binary_search(area.begin(), area.end(), it->second)) count += 1;
      if (count != assembled.features()(r, col)) ok = false;
    }
    if (!ok) ++violations;
  }
  if (rows_checked) *rows_checked = rows.size();
  return violations;
}

// ---------------------------------------------------------------------------
// Prepare

PreparedData prepare(const ExperimentConfig& config, LeakageAudit* audit) {
  if (audit) audit->enter_stage("prepare");
  return in_stage("prepare", [&] {
    config.validate();
    PreparedData d;
    d.config = config;
    auto in = load_inputs(config);
    d.events = std::move(in.events);
    d.report = in.report;
    d.period = in.frame.period();

    const bool need_statics = feature_set_includes(config.feature_set, FeatureGroup::Spatial) || config.strata.active();
    if (need_statics) d.statics = read_static_csv(config.statics);
    if (!config.schema.empty()) d.schema = read_schema_csv(config.schema);
    if (feature_set_includes(config.feature_set, FeatureGroup::Temporal)) {
      const Date last = d.period.start() + (d.period.days() - 1);
      d.weather = read_weather_csv(config.weather, d.period.start(), last);
      if (!config.public_events.empty()) read_public_events_csv(config.public_events, d.weather);
    }

    SpatioTemporalFrame frame = std::move(in.frame);
    if (config.strata.active()) {
      const auto keep = stratum_cells(config.strata, d.statics, frame.cells());
      frame = frame.restrict_cells(keep);
    }
    d.cells.assign(frame.cells().begin(), frame.cells().end());
    auto split = chronological_split(frame, config.train_fraction);
    d.train = std::move(split.train);
    d.test = SealedFrame(std::move(split.test), audit);
    d.boundary_bucket = split.boundary_bucket;
    return d;
  });
}

// ---------------------------------------------------------------------------
// Trained model

std::vector<double> ConstantScorer::predict_proba(MatrixView X) const {
  if (X.cols() != arity_) throw DataError(fmt::format("model expects {} features, input has {}", arity_, X.cols()));
  return std::vector<double>(X.rows(), value_);
}

const Scorer& TrainedModel::scorer() const {
  return std::visit([](const auto& m) -> const Scorer& { return m; }, model);
}

std::string TrainedModel::base_learner() const {
  return strategy == Strategy::Majority ? "none" : std::string(to_string(spec.kind));
}

void TrainedModel::write(std::ostream& out) const {
  out << "hotspot-model 1\n";
  out << "strategy " << to_string(strategy) << '\n';
  out << "feature_set " << to_string(feature_set) << '\n';
  out << "features " << feature_names.size() << '\n';
  for (const auto& n : feature_names) out << n << '\n';
  out << "spec " << spec.describe() << '\n';
  out << "cv " << cv_scores.size() << ' ' << cv_best;
  for (double s : cv_scores) out << ' ' << fmt::format("{:a}", s);
  out << '\n';
  out << "smote_fell_back " << (smote_fell_back ? 1 : 0) << '\n';
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantScorer>) {
          out << "constant " << fmt::format("{:a}", m.value()) << ' ' << m.arity() << '\n';
        } else if constexpr (std::is_same_v<T, LearnerModel>) {
          out << "learner\n";
          m.write(out);
        } else {
          out << "ensemble\n";
          m.write(out);
        }
      },
      model);
}

TrainedModel TrainedModel::read(std::istream& in) {
  auto expect = [&](std::string_view word) {
    std::string tok;
    if (!(in >> tok) || tok != word) throw DataError(fmt::format("model file: expected '{}', found '{}'", word, tok));
  };
  auto read_hex = [&] {
    std::string tok;
    if (!(in >> tok)) throw DataError("truncated model file");
    return std::strtod(tok.c_str(), nullptr);
  };
  TrainedModel m;
  std::string tok;
  expect("hotspot-model");
  int version = 0;
  in >> version;
  if (version != 1) throw DataError("unsupported model file version");
  expect("strategy");
  in >> tok;
  m.strategy = parse_strategy(tok);
  expect("feature_set");
  in >> tok;
  m.feature_set = parse_feature_set(tok);
  expect("features");
  std::size_t n = 0;
  in >> n;
  std::getline(in, tok);
  for (std::size_t i = 0; i < n; ++i) {
    std::getline(in, tok);
    m.feature_names.push_back(tok);
  }
  expect("spec");
  std::getline(in, tok);
  m.spec = LearnerSpec::parse(tok);
  expect("cv");
  std::size_t ncv = 0;
  in >> ncv >> m.cv_best;
  for (std::size_t i = 0; i < ncv; ++i) m.cv_scores.push_back(read_hex());
  expect("smote_fell_back");
  int fb = 0;
  in >> fb;
  m.smote_fell_back = fb != 0;
  in >> tok;
  if (tok == "constant") {
    const double v = read_hex();
    std::size_t arity = 0;
    in >> arity;
    m.model = ConstantScorer(v, arity);
  } else if (tok == "learner") {
    m.model = LearnerModel::read(in);
  } else if (tok == "ensemble") {
    m.model = HyperEnsemble::read(in);
  } else {
    throw DataError(fmt::format("model file: unknown payload '{}'", tok));
  }
  if (!in) throw DataError("truncated model file");
  if (m.scorer().arity() != m.feature_names.size()) throw DataError("model arity differs from its feature list");
  return m;
}

void TrainedModel::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  write(out);
  write_text(path, out.str());
}

TrainedModel TrainedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open model file {}", path.string()));
  return read(in);
}

// ---------------------------------------------------------------------------
// Train

TrainedModel train_stage(const PreparedData& data, LeakageAudit* audit, std::ostream* log) {
  if (audit) audit->enter_stage("train");
  return in_stage("train", [&] {
    const auto& cfg = data.config;
    const auto train = assemble(data.train, data.statics, data.weather, cfg.feature_set, data.schema,
                                data.assemble_options());
    if (audit) {
      std::size_t checked = 0;
      const auto bad = audit_crime_features(train, data.events, cfg.prior_windows, kAuditRows,
                                            derive_seed(cfg.seed, kAuditStream), &checked);
      audit->record_crime_check(checked, bad);
    }
    const MatrixView X = train.features();
    const auto y = train.labels();

    TrainedModel m;
    m.strategy = cfg.strategy;
    m.feature_set = cfg.feature_set;
    m.feature_names = train.feature_names();
    m.spec = cfg.learner;
    if (cfg.strategy == Strategy::Majority) {
      m.model = ConstantScorer(0.0, X.cols());
      return m;
    }

    const auto candidates = cfg.candidate_specs();
    if (candidates.size() > 1) {
      const auto cv = cross_validate(candidates, train, cfg.cv_folds, derive_seed(cfg.seed, kCvStream), trainer_for(cfg));
      m.spec = cv.best;
      m.cv_scores = cv.scores;
      m.cv_best = cv.best_index;
      if (log) {
        for (std::size_t i = 0; i < candidates.size(); ++i)
          *log << fmt::format("cv {:.6f}  {}\n", cv.scores[i], candidates[i].describe());
        *log << fmt::format("selected {}\n", m.spec.describe());
      }
    } else {
      m.spec = candidates.front();
    }
    m.spec.seed = 0;

    LearnerSpec fit_spec = m.spec;
    fit_spec.seed = derive_seed(cfg.seed, kFitStream);
    const std::uint64_t ensemble_seed = derive_seed(cfg.seed, kEnsembleStream);
    switch (cfg.strategy) {
      case Strategy::Naive: m.model = fit(fit_spec, X, y); break;
      case Strategy::Cost: m.model = fit(fit_spec, X, y, cost_weights(y)); break;
      case Strategy::Under:
        m.model = train_under_sampled_member(m.spec, X, y, ensemble_member_seed(ensemble_seed, 0));
        break;
      case Strategy::Hyper: m.model = train_hyper_ensemble(X, y, cfg.phi, m.spec, ensemble_seed, cfg.threads); break;
      case Strategy::Over:
      case Strategy::Smote:
      case Strategy::NearMiss: {
        const ResampleMethod method = cfg.strategy == Strategy::Over    ? ResampleMethod::RandomOver
                                      : cfg.strategy == Strategy::Smote ? ResampleMethod::Smote
                                                                        : ResampleMethod::NearMiss;
        const auto r = resample(X, y, {method, cfg.k_neighbors, derive_seed(cfg.seed, kResampleStream), cfg.strict,
                                       cfg.standardize});
        m.smote_fell_back = r.fell_back;
        if (log && r.fell_back) *log << "smote: too few minority rows, fell back to random over-sampling\n";
        m.model = fit(fit_spec, r.X, r.y);
        break;
      }
      case Strategy::Majority: break;
    }
    return m;
  });
}

// ---------------------------------------------------------------------------
// Evaluate

namespace {

/// Rankings for every bucket of an assembled frame.
std::vector<DailyRanking> rank_frame(const SpatioTemporalFrame& frame, std::span<const double> scores) {
  std::vector<DailyRanking> out;
  const auto cells = frame.cells();
  for (int b = frame.first_bucket(); b < frame.end_bucket(); ++b) {
    const auto off = frame.bucket_row_offset(b);
    out.push_back(rank_cells(cells, scores.subspan(off, cells.size()), b));
  }
  return out;
}

SpatioTemporalFrame assemble_for(const PreparedData& data, const SpatioTemporalFrame& labels,
                                 const TrainedModel& model) {
  auto frame = assemble(labels, data.statics, data.weather, model.feature_set, data.schema, data.assemble_options());
  if (frame.feature_names() != model.feature_names)
    throw DataError("assembled features differ from the ones the model was trained on");
  return frame;
}

}  // namespace

EvaluationOutput evaluate_stage(const PreparedData& data, const TrainedModel& model, LeakageAudit* audit) {
  if (audit) audit->enter_stage("evaluate");
  return in_stage("evaluate", [&] {
    const auto& cfg = data.config;
    const auto test = assemble_for(data, data.test.open("evaluate"), model);
    if (audit) {
      std::size_t checked = 0;
      const auto bad = audit_crime_features(test, data.events, cfg.prior_windows, kAuditRows,
                                            derive_seed(cfg.seed, kAuditStream + 1), &checked);
      audit->record_crime_check(checked, bad);
    }
    const auto scores = model.scorer().predict_proba(test.features());
    EvaluationOutput out;
    out.rankings = rank_frame(test, scores);
    std::vector<std::vector<CellId>> actuals;
    const auto cells = test.cells();
    const auto labels = test.labels();
    for (int b = test.first_bucket(); b < test.end_bucket(); ++b) {
      const auto off = test.bucket_row_offset(b);
      std::vector<CellId> pos;
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (labels[off + i]) pos.push_back(cells[i]);
      actuals.push_back(std::move(pos));
      out.dates.push_back(data.period.bucket_start(b));
    }
    out.report = evaluate_rankings(out.rankings, actuals, cfg.coverages, cfg.curve_grid(), cfg.averaging);
    return out;
  });
}

void write_evaluation(const PreparedData& data, const TrainedModel& model, const EvaluationOutput& out,
                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& r = out.report;
  {
    csv::Writer w(dir / "metrics.csv");
    w.row({"strategy", "base_learner", "feature_set", "coverage", "hit_rate", "pai", "auc"});
    for (std::size_t c = 0; c < r.coverage.size(); ++c)
      w.row({std::string(to_string(model.strategy)), model.base_learner(), std::string(to_string(model.feature_set)),
             csv::format_double(r.coverage[c]), csv::format_double(r.hit_rate[c]), csv::format_double(r.pai[c]),
             csv::format_double(r.auc)});
  }
  {
    csv::Writer w(dir / "surveillance.csv");
    w.row({"coverage", "hit_rate"});
    for (std::size_t i = 0; i < r.curve.coverage.size(); ++i)
      w.row({csv::format_double(r.curve.coverage[i]), csv::format_double(r.curve.hit_rate[i])});
  }
  {
    csv::Writer w(dir / "daily_hit_rates.csv");
    w.row({"date", "coverage", "hit_rate"});
    for (std::size_t c = 0; c < r.coverage.size(); ++c)
      for (std::size_t d = 0; d < out.dates.size(); ++d)
        w.row({out.dates[d].iso(), csv::format_double(r.coverage[c]),
               r.daily[c][d] ? csv::format_double(*r.daily[c][d]) : std::string{}});
  }
  if (data.config.write_rankings) {
    const auto rdir = dir / "rankings";
    std::filesystem::create_directories(rdir);
    for (std::size_t d = 0; d < out.rankings.size(); ++d) {
      csv::Writer w(rdir / (out.dates[d].iso() + ".csv"));
      w.row({"rank", "cell_id", "score", "x", "y"});
      const auto& rk = out.rankings[d];
      for (std::size_t i = 0; i < rk.cells.size(); ++i) {
        const auto [x, y] = data.grid().centroid(rk.cells[i]);
        w.row({std::to_string(i + 1), std::to_string(rk.cells[i]), csv::format_double(rk.scores[i]),
               csv::format_double(x), csv::format_double(y)});
      }
    }
  }
  if (data.config.write_svg) {
    const std::string label = fmt::format("{} / {}", to_string(model.strategy), model.base_learner());
    write_text(dir / "surveillance.svg", render_surveillance_svg(std::span(&label, 1), std::span(&r.curve, 1)));
  }
}

EvaluationOutput run_experiment(const ExperimentConfig& config, LeakageAudit* audit, std::ostream* log) {
  const auto data = prepare(config, audit);
  const auto model = train_stage(data, audit, log);
  std::filesystem::create_directories(config.output);
  model.save(config.output / "model.txt");
  write_text(config.output / "config.ini", config.to_ini());
  auto out = evaluate_stage(data, model, audit);
  write_evaluation(data, model, out, config.output);
  if (audit) {
    csv::Writer w(config.output / "audit.csv");
    w.row({"check", "value"});
    w.row({"test_reads_before_evaluation", std::to_string(audit->test_reads_before_evaluation())});
    w.row({"test_reads_during_evaluation", std::to_string(audit->test_reads_during_evaluation())});
    w.row({"crime_rows_recounted", std::to_string(audit->crime_rows_checked())});
    w.row({"crime_feature_mismatches", std::to_string(audit->crime_violations())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rank / compare / ingest

std::vector<Hotspot> rank_day(const PreparedData& data, const TrainedModel& model, Date day, double coverage) {
  return in_stage("rank", [&] {
    const auto bucket = data.period.bucket_of(day);
    if (!bucket) throw DataError(fmt::format("{} is outside the study period", day.iso()));
    const auto& source = *bucket < data.boundary_bucket ? data.train : data.test.open("rank");
    const auto frame = assemble_for(data, source.bucket_range(*bucket, 1), model);
    const auto scores = model.scorer().predict_proba(frame.features());
    const auto ranking = rank_cells(frame.cells(), scores, *bucket);
    const auto spec = CoverageSpec::make(coverage, ranking.cells.size());
    std::vector<Hotspot> out;
    for (std::size_t i = 0; i < spec.k_cells; ++i) {
      const auto [x, y] = data.grid().centroid(ranking.cells[i]);
      out.push_back({i + 1, ranking.cells[i], ranking.scores[i], x, y});
    }
    return out;
  });
}

std::string hotspots_geojson(std::span<const Hotspot> hotspots, Date day) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& h : hotspots)
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {h.x, h.y}}}},
                        {"properties", {{"rank", h.rank}, {"cell_id", h.cell}, {"score", h.score}, {"date", day.iso()}}}});
  return nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump(2) + "\n";
}

namespace {

/// coverage -> (date -> hit rate or blank)
std::map<double, std::map<std::string, std::optional<double>>> read_daily(const std::filesystem::path& dir) {
  const auto table = csv::Table::read(dir / "daily_hit_rates.csv");
  const auto cd = table.column("date"), cc = table.column("coverage"), ch = table.column("hit_rate");
  std::map<double, std::map<std::string, std::optional<double>>> out;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& row = table.row(i);
    out[csv::parse_double(row[cc], "coverage")][row[cd]] = csv::parse_optional_double(row[ch]);
  }
  return out;
}

}  // namespace

std::vector<CompareRow> compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b) {
  return in_stage("compare", [&] {
    const auto a = read_daily(run_a), b = read_daily(run_b);
    std::vector<CompareRow> out;
    for (const auto& [coverage, days_a] : a) {
      auto it = b.find(coverage);
      if (it == b.end()) throw DataError(fmt::format("run B has no hit rates at coverage {}", coverage));
      const auto& days_b = it->second;
      if (days_a.size() != days_b.size()) throw DataError(fmt::format("runs cover different days at coverage {}", coverage));
      std::vector<double> xa, xb;
      for (const auto& [day, va] : days_a) {
        auto jt = days_b.find(day);
        if (jt == days_b.end()) throw DataError(fmt::format("day {} is missing from run B", day));
        if (va.has_value() != jt->second.has_value())
          throw DataError(fmt::format("day {} is evaluable in one run only", day));
        if (va) {
          xa.push_back(*va);
          xb.push_back(*jt->second);
        }
      }
      out.push_back({coverage, paired_t_test(xa, xb)});
    }
    if (b.size() != a.size()) throw DataError("runs use different coverage levels");
    return out;
  });
}

void write_compare_csv(std::span<const CompareRow> rows, const std::filesystem::path& path) {
  csv::Writer w(path);
  w.row({"coverage", "n", "mean_difference", "t", "df", "p"});
  for (const auto& r : rows)
    w.row({csv::format_double(r.coverage), std::to_string(r.test.n), csv::format_double(r.test.mean_difference),
           csv::format_double(r.test.t), csv::format_double(r.test.df), csv::format_double(r.test.p)});
}

IngestSummary ingest(const ExperimentConfig& config, const std::filesystem::path& dir) {
  return in_stage("ingest", [&] {
    if (config.events.empty()) throw ConfigError("data.events is required");
    const auto in = load_inputs(config);
    IngestSummary s;
    s.report = in.report;
    s.cells = in.frame.cells().size();
    s.buckets = in.frame.bucket_count();
    s.balance = class_balance(in.frame);
    std::filesystem::create_directories(dir);
    const auto& g = in.frame.grid();
    {
      csv::Writer w(dir / "grid.csv");
      w.row({"cell_id", "col", "row", "x", "y", "eligible"});
      for (std::size_t c = 0; c < g.cell_count(); ++c) {
        const auto [x, y] = g.centroid(static_cast<CellId>(c));
        w.row({std::to_string(c), std::to_string(c % static_cast<std::size_t>(g.width_cells)),
               std::to_string(c / static_cast<std::size_t>(g.width_cells)), csv::format_double(x),
               csv::format_double(y), g.eligible[c] ? "1" : "0"});
      }
    }
    csv::Writer w(dir / "ingest_summary.csv");
    w.row({"key", "value"});
    w.row({"events_accepted", std::to_string(s.report.accepted)});
    w.row({"events_outside_grid", std::to_string(s.report.rejected_outside_grid)});
    w.row({"events_ineligible", std::to_string(s.report.rejected_ineligible)});
    w.row({"events_outside_period", std::to_string(s.report.rejected_outside_period)});
    w.row({"eligible_cells", std::to_string(s.cells)});
    w.row({"buckets", std::to_string(s.buckets)});
    w.row({"positives", std::to_string(s.balance.positives)});
    w.row({"negatives", std::to_string(s.balance.negatives)});
    w.row({"positive_ratio", csv::format_double(s.balance.ratio)});
    return s;
  });
}

}  // namespace hotspot
