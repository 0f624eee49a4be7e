// hotspot: command-line front end for the hotspot forecasting pipeline.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hotspot/config.hpp"
#include "hotspot/csv.hpp"
#include "hotspot/error.hpp"
#include "hotspot/pipeline.hpp"
#include "hotspot/synthgen.hpp"

namespace {

using namespace hotspot;

enum ExitCode { kOk = 0, kConfig = 1, kData = 2, kNumeric = 3 };

/// Config file, then --set pairs, then dedicated flags.
struct ConfigFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> strategy, learner, feature_set, output, coverages;
  std::optional<int> phi, threads;
  std::optional<std::uint64_t> seed;

  /// `rank` repurposes --coverage as the share of cells to list.
  void attach(CLI::App* app, bool report_coverages = true) {
    app->add_option("-c,--config", config, "Experiment INI file")->required()->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override section.key=value (repeatable)");
    app->add_option("--strategy", strategy, "majority|naive|cost|under|over|smote|nearmiss|hyper");
    app->add_option("--learner", learner, "forest|adaboost|logistic_l1|logistic_l2");
    app->add_option("--feature-set", feature_set, "crime|spatial|temporal|all");
    app->add_option("--phi", phi, "Ensemble size for the hyper strategy");
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--output", output, "Output directory");
    if (report_coverages) app->add_option("--coverage", coverages, "Report coverages, comma separated");
    app->add_option("--threads", threads, "Worker threads");
  }

  ExperimentConfig resolve() const {
    auto cfg = ExperimentConfig::load(config);
    for (const auto& s : sets) cfg.apply_override(s);
    if (strategy) cfg.set("model.strategy", *strategy);
    if (learner) cfg.set("model.learner", *learner);
    if (feature_set) cfg.set("model.feature_set", *feature_set);
    if (phi) cfg.phi = *phi;
    if (seed) cfg.seed = *seed;
    if (output) cfg.output = *output;
    if (coverages) cfg.set("evaluation.coverages", *coverages);
    if (threads) cfg.threads = *threads;
    cfg.validate();
    return cfg;
  }
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << text;
}

void print_report(const EvaluationOutput& out) {
  const auto& r = out.report;
  for (std::size_t c = 0; c < r.coverage.size(); ++c)
    fmt::print("coverage {:>5.1f}%  hit rate {:>6.2f}%  PAI {:.3f}\n", 100 * r.coverage[c], 100 * r.hit_rate[c], r.pai[c]);
  fmt::print("AUC {:.3f} over {} evaluable days\n", r.auc, r.curve.days_used);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Daily spatio-temporal hotspot forecasting under extreme class imbalance"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic near-repeat dataset");
  SynthConfig sc;
  std::string synth_out, synth_start;
  bool no_truth = false;
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", sc.seed, "Seed");
  synth->add_option("--width", sc.width, "Grid width in cells");
  synth->add_option("--height", sc.height, "Grid height in cells");
  synth->add_option("--days", sc.days, "Number of days");
  synth->add_option("--start", synth_start, "First day (YYYY-MM-DD)");
  synth->add_option("--target", sc.target_fraction, "Expected positive fraction");
  synth->add_option("--ineligible", sc.ineligible_fraction, "Share of ineligible cells");
  synth->add_option("--static-features", sc.static_features, "Number of static attributes");
  synth->add_option("--boost", sc.boost, "Near-repeat log-odds boost per recent event");
  synth->add_option("--decay", sc.decay_days, "Near-repeat window in days");
  synth->add_option("--neighbor-boost", sc.neighbor_boost, "Boost from neighbouring cells");
  synth->add_flag("--no-truth", no_truth, "Skip truth.csv");

  // ingest
  auto* ing = app.add_subcommand("ingest", "Build grid and labels, report class balance");
  ConfigFlags ing_flags;
  ing_flags.attach(ing);

  // train / evaluate / run
  auto* train = app.add_subcommand("train", "Assemble training features, tune and fit; writes model.txt");
  ConfigFlags train_flags;
  train_flags.attach(train);

  auto* eval = app.add_subcommand("evaluate", "Score the test period with a trained model and write metrics");
  ConfigFlags eval_flags;
  std::string eval_model;
  eval_flags.attach(eval);
  eval->add_option("--model", eval_model, "Model file (default: <output>/model.txt)");

  auto* run = app.add_subcommand("run", "train + evaluate in one go");
  ConfigFlags run_flags;
  bool run_audit = false;
  run_flags.attach(run);
  run->add_flag("--audit", run_audit, "Record test-period reads and recount crime features");

  // rank
  auto* rank = app.add_subcommand("rank", "Top hotspots for one day");
  ConfigFlags rank_flags;
  std::string rank_model, rank_date, rank_geojson, rank_csv;
  double rank_coverage = 0.05;
  rank_flags.attach(rank, false);
  rank->add_option("--model", rank_model, "Model file (default: <output>/model.txt)");
  rank->add_option("--date", rank_date, "Day to rank (YYYY-MM-DD)")->required();
  rank->add_option("--coverage,--top-coverage", rank_coverage, "Share of cells to list");
  rank->add_option("--geojson", rank_geojson, "Also write a GeoJSON point file");
  rank->add_option("--out", rank_csv, "Write the list as CSV instead of stdout");

  // compare
  auto* cmp = app.add_subcommand("compare", "Paired t-tests of run A against run B per coverage");
  std::string cmp_a, cmp_b, cmp_out;
  cmp->add_option("run_a", cmp_a, "Run directory A")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("run_b", cmp_b, "Run directory B")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("-o,--out", cmp_out, "CSV output (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      if (!synth_start.empty()) sc.start = Date::parse(synth_start);
      const auto data = generate(sc);
      write_synth(data, synth_out, !no_truth);
      fmt::print("{} events over {} cells x {} days (expected {:.1f}, intercept {:.4f}) -> {}\n", data.events.size(),
                 data.cells.size(), sc.days, data.expected_positives, data.intercept, synth_out);
    } else if (*ing) {
      const auto cfg = ing_flags.resolve();
      const auto s = ingest(cfg, cfg.output);
      fmt::print("{} events accepted ({} outside grid, {} ineligible, {} outside period)\n", s.report.accepted,
                 s.report.rejected_outside_grid, s.report.rejected_ineligible, s.report.rejected_outside_period);
      fmt::print("{} cells x {} buckets, {} positives ({:.4f}%)\n", s.cells, s.buckets, s.balance.positives,
                 100.0 * static_cast<double>(s.balance.positives) /
                     static_cast<double>(s.balance.positives + s.balance.negatives));
    } else if (*train) {
      const auto cfg = train_flags.resolve();
      const auto data = prepare(cfg);
      const auto model = train_stage(data, nullptr, &std::cout);
      std::filesystem::create_directories(cfg.output);
      model.save(cfg.output / "model.txt");
      write_file(cfg.output / "config.ini", cfg.to_ini());
      fmt::print("model written to {}\n", (cfg.output / "model.txt").string());
    } else if (*eval) {
      const auto cfg = eval_flags.resolve();
      const auto data = prepare(cfg);
      const auto model = TrainedModel::load(eval_model.empty() ? cfg.output / "model.txt" : std::filesystem::path(eval_model));
      const auto out = evaluate_stage(data, model);
      write_evaluation(data, model, out, cfg.output);
      print_report(out);
    } else if (*run) {
      const auto cfg = run_flags.resolve();
      LeakageAudit audit;
      const auto out = run_experiment(cfg, run_audit ? &audit : nullptr, &std::cout);
      print_report(out);
      if (run_audit)
        fmt::print("audit: {} test reads before evaluation, {} of {} recounted rows mismatched\n",
                   audit.test_reads_before_evaluation(), audit.crime_violations(), audit.crime_rows_checked());
    } else if (*rank) {
      const auto cfg = rank_flags.resolve();
      const auto data = prepare(cfg);
      const auto model = TrainedModel::load(rank_model.empty() ? cfg.output / "model.txt" : std::filesystem::path(rank_model));
      const Date day = Date::parse(rank_date);
      const auto hotspots = rank_day(data, model, day, rank_coverage);
      std::string text = "rank,cell_id,score,x,y\n";
      for (const auto& h : hotspots)
        text += fmt::format("{},{},{},{},{}\n", h.rank, h.cell, csv::format_double(h.score), csv::format_double(h.x),
                            csv::format_double(h.y));
      if (rank_csv.empty()) std::cout << text;
      else write_file(rank_csv, text);
      if (!rank_geojson.empty()) write_file(rank_geojson, hotspots_geojson(hotspots, day));
    } else if (*cmp) {
      const auto rows = compare_runs(cmp_a, cmp_b);
      if (!cmp_out.empty()) {
        write_compare_csv(rows, cmp_out);
      } else {
        fmt::print("coverage,n,mean_difference,t,df,p\n");
        for (const auto& r : rows)
          fmt::print("{},{},{},{},{},{}\n", csv::format_double(r.coverage), r.test.n,
                     csv::format_double(r.test.mean_difference), csv::format_double(r.test.t),
                     csv::format_double(r.test.df), csv::format_double(r.test.p));
      }
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kData;
  } catch (const NumericError& e) {
    fmt::print(stderr, "numeric error: {}\n", e.what());
    return kNumeric;
  }
  return kOk;
}
