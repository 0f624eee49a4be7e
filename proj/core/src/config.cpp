#include "hotspot/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "hotspot/csv.hpp"
#include "hotspot/error.hpp"

namespace hotspot {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Majority: return "majority";
    case Strategy::Naive: return "naive";
    case Strategy::Cost: return "cost";
    case Strategy::Under: return "under";
    case Strategy::Over: return "over";
    case Strategy::Smote: return "smote";
    case Strategy::NearMiss: return "nearmiss";
    case Strategy::Hyper: return "hyper";
  }
  return "hyper";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::Majority, Strategy::Naive, Strategy::Cost, Strategy::Under, Strategy::Over, Strategy::Smote,
                 Strategy::NearMiss, Strategy::Hyper})
    if (name == to_string(s)) return s;
  throw ConfigError(
      fmt::format("unknown strategy '{}' (majority, naive, cost, under, over, smote, nearmiss, hyper)", name));
}

std::string_view to_string(Stratum s) {
  switch (s) {
    case Stratum::All: return "all";
    case Stratum::Low: return "low";
    case Stratum::Mid: return "mid";
    case Stratum::High: return "high";
  }
  return "all";
}

Stratum parse_stratum(std::string_view name) {
  for (auto s : {Stratum::All, Stratum::Low, Stratum::Mid, Stratum::High})
    if (name == to_string(s)) return s;
  throw ConfigError(fmt::format("unknown stratum '{}' (all, low, mid, high)", name));
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t from = 0;
  while (from <= s.size()) {
    auto comma = s.find(',', from);
    if (comma == std::string_view::npos) comma = s.size();
    auto item = trim(s.substr(from, comma - from));
    if (!item.empty()) out.push_back(std::move(item));
    from = comma + 1;
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  try {
    return csv::parse_double(v, key);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

long long to_int(std::string_view key, std::string_view v) {
  try {
    return csv::parse_int(v, key);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, v));
}

std::vector<double> to_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

std::filesystem::path to_path(std::string_view v, const std::filesystem::path& base) {
  std::filesystem::path p{std::string(v)};
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

Date to_date(std::string_view key, std::string_view v) {
  try {
    return Date::parse(v);
  } catch (const DataError& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + csv::format_double(v[i]);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& ini) {
  std::ifstream in(ini);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", ini.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), ini.parent_path());
}

ExperimentConfig ExperimentConfig::parse(std::string_view ini_text, const std::filesystem::path& base_dir) {
  // The INI reader only knows ';' comments; accept '#' too.
  std::string text;
  std::istringstream lines{std::string(ini_text)};
  for (std::string line; std::getline(lines, line);) {
    const auto t = trim(line);
    if (!t.empty() && t.front() == '#') continue;
    text += line + '\n';
  }
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(fmt::format("config key '{}' is outside any section", section));
    for (const auto& [key, value] : body) cfg.set(section + "." + key, trim(value.data()), base_dir);
  }
  return cfg;
}

void ExperimentConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError(fmt::format("override '{}' is not key=value", assignment));
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ExperimentConfig::set(std::string_view key, std::string_view value, const std::filesystem::path& base) {
  if (key.starts_with("learner.grid.")) {
    const auto param = std::string(key.substr(13));
    auto items = split_list(value);
    if (items.empty()) throw ConfigError(fmt::format("{}: empty candidate list", key));
    LearnerSpec probe = learner;
    for (const auto& item : items) probe.set(param, item);  // rejects unknown names and values early
    learner_grid[param] = std::move(items);
    return;
  }
  if (key.starts_with("learner.")) {
    const auto param = key.substr(8);
    if (param == "seed") throw ConfigError("learner.seed is derived from run.seed");
    learner.set(param, value);
    return;
  }
  const std::string v = trim(value);
  if (key == "data.events") events = to_path(v, base);
  else if (key == "data.eligibility") eligibility = to_path(v, base);
  else if (key == "data.statics") statics = to_path(v, base);
  else if (key == "data.weather") weather = to_path(v, base);
  else if (key == "data.public_events") public_events = to_path(v, base);
  else if (key == "data.schema") schema = to_path(v, base);
  else if (key == "data.truth") {}  // informational, written by the generator
  else if (key == "grid.cell_size") cell_size = to_double(key, v);
  else if (key == "grid.origin_x") origin_x = to_double(key, v);
  else if (key == "grid.origin_y") origin_y = to_double(key, v);
  else if (key == "grid.width") width = static_cast<int>(to_int(key, v));
  else if (key == "grid.height") height = static_cast<int>(to_int(key, v));
  else if (key == "grid.start") start = to_date(key, v);
  else if (key == "grid.end") end = to_date(key, v);
  else if (key == "grid.resolution") {
    if (v == "daily") resolution = Resolution::Daily;
    else if (v == "weekly") resolution = Resolution::Weekly;
    else throw ConfigError(fmt::format("{}: expected daily or weekly, got '{}'", key, v));
  } else if (key == "grid.invalid_events") {
    if (v == "reject") invalid_events = InvalidEventPolicy::Reject;
    else if (v == "error") invalid_events = InvalidEventPolicy::Error;
    else throw ConfigError(fmt::format("{}: expected reject or error, got '{}'", key, v));
  } else if (key == "split.train_fraction") train_fraction = to_double(key, v);
  else if (key == "split.cv_folds") cv_folds = static_cast<int>(to_int(key, v));
  else if (key == "split.tune") tune = to_bool(key, v);
  else if (key == "model.strategy") strategy = parse_strategy(v);
  else if (key == "model.phi") phi = static_cast<int>(to_int(key, v));
  else if (key == "model.feature_set") feature_set = parse_feature_set(v);
  else if (key == "model.learner") learner.kind = parse_learner_kind(v);
  else if (key == "model.prior_windows") {
    prior_windows.clear();
    for (const auto& item : split_list(v)) prior_windows.push_back(static_cast<int>(to_int(key, item)));
  } else if (key == "resampling.k_neighbors") k_neighbors = static_cast<int>(to_int(key, v));
  else if (key == "resampling.strict") strict = to_bool(key, v);
  else if (key == "resampling.standardize") standardize = to_bool(key, v);
  else if (key == "evaluation.coverages") coverages = to_doubles(key, v);
  else if (key == "evaluation.curve_step") curve_step = to_double(key, v);
  else if (key == "evaluation.averaging") {
    if (v == "mean_of_ratios") averaging = Averaging::MeanOfRatios;
    else if (v == "ratio_of_sums") averaging = Averaging::RatioOfSums;
    else throw ConfigError(fmt::format("{}: expected mean_of_ratios or ratio_of_sums, got '{}'", key, v));
  } else if (key == "evaluation.write_rankings") write_rankings = to_bool(key, v);
  else if (key == "evaluation.write_svg") write_svg = to_bool(key, v);
  else if (key == "strata.feature") strata.feature = v;
  else if (key == "strata.thresholds") strata.thresholds = to_doubles(key, v);
  else if (key == "strata.percentiles") strata.percentiles = to_doubles(key, v);
  else if (key == "strata.stratum") strata.stratum = parse_stratum(v);
  else if (key == "run.seed") seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "run.output") output = to_path(v, base);
  else if (key == "run.threads") threads = static_cast<int>(to_int(key, v));
  else throw ConfigError(fmt::format("unknown config key '{}'", key));
}

void ExperimentConfig::validate() const {
  if (events.empty()) throw ConfigError("data.events is required");
  if (!(cell_size > 0.0)) throw ConfigError("grid.cell_size must be positive");
  if (width.has_value() != height.has_value()) throw ConfigError("grid.width and grid.height go together");
  if (width && (!origin_x || !origin_y)) throw ConfigError("an explicit grid needs grid.origin_x and grid.origin_y");
  if (width && (*width < 1 || *height < 1)) throw ConfigError("grid dimensions must be positive");
  if (start && end && *end < *start) throw ConfigError("grid.end is before grid.start");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split.train_fraction must be in (0, 1)");
  if (cv_folds < 2) throw ConfigError("split.cv_folds must be >= 2");
  if (phi < 1) throw ConfigError("model.phi must be >= 1");
  if (prior_windows.empty()) throw ConfigError("model.prior_windows is empty");
  for (int w : prior_windows)
    if (w < 1) throw ConfigError("model.prior_windows entries must be >= 1");
  if (k_neighbors < 1) throw ConfigError("resampling.k_neighbors must be >= 1");
  if (coverages.empty()) throw ConfigError("evaluation.coverages is empty");
  for (double c : coverages)
    if (!(c > 0.0) || c > 1.0) throw ConfigError(fmt::format("coverage {} is outside (0, 1]", c));
  if (!(curve_step > 0.0) || curve_step > 1.0) throw ConfigError("evaluation.curve_step must be in (0, 1]");
  if (threads < 1) throw ConfigError("run.threads must be >= 1");
  if (strata.active()) {
    const bool has_t = !strata.thresholds.empty(), has_p = !strata.percentiles.empty();
    if (has_t == has_p) throw ConfigError("strata needs exactly one of strata.thresholds or strata.percentiles");
    const auto& cuts = has_t ? strata.thresholds : strata.percentiles;
    if (cuts.size() != 2 || !(cuts[0] <= cuts[1])) throw ConfigError("strata cut points must be two ascending values");
    if (has_p && (!(cuts[0] > 0.0) || !(cuts[1] < 100.0))) throw ConfigError("strata percentiles must be in (0, 100)");
  }
  if (feature_set_includes(feature_set, FeatureGroup::Spatial) && statics.empty())
    throw ConfigError(fmt::format("feature set '{}' needs data.statics", to_string(feature_set)));
  if (feature_set_includes(feature_set, FeatureGroup::Temporal) && weather.empty())
    throw ConfigError(fmt::format("feature set '{}' needs data.weather", to_string(feature_set)));
  if (strata.active() && statics.empty()) throw ConfigError("stratification needs data.statics");
  learner.validate();
  for (const auto& spec : candidate_specs()) spec.validate();
}

std::map<std::string, std::vector<std::string>> default_learner_grid(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::RandomForest: return {{"trees", {"100", "300"}}, {"max_depth", {"8", "16", "0"}}};
    case LearnerKind::AdaBoost: return {{"trees", {"50", "200"}}, {"learning_rate", {"0.1", "1"}}};
    case LearnerKind::LogisticL1:
    case LearnerKind::LogisticL2: return {{"strength", {"0.0001", "0.001", "0.01", "0.1"}}};
  }
  return {};
}

std::vector<LearnerSpec> ExperimentConfig::candidate_specs() const {
  if (!tune) return {learner};
  const auto grid = learner_grid.empty() ? default_learner_grid(learner.kind) : learner_grid;
  std::vector<LearnerSpec> out{learner};
  for (const auto& [param, values] : grid) {
    std::vector<LearnerSpec> next;
    for (const auto& base : out)
      for (const auto& v : values) {
        LearnerSpec s = base;
        s.set(param, v);
        next.push_back(s);
      }
    out = std::move(next);
  }
  return out;
}

std::vector<double> ExperimentConfig::curve_grid() const {
  std::vector<double> g;
  const auto steps = static_cast<int>(std::floor(1.0 / curve_step + 1e-9));
  for (int i = 1; i <= steps; ++i) g.push_back(std::min(1.0, i * curve_step));
  if (g.empty() || g.back() < 1.0) g.push_back(1.0);
  return g;
}

std::string ExperimentConfig::to_ini() const {
  std::string s;
  auto line = [&](std::string_view k, const std::string& v) { s += fmt::format("{} = {}\n", k, v); };
  s += "[data]\n";
  line("events", events.string());
  if (!eligibility.empty()) line("eligibility", eligibility.string());
  if (!statics.empty()) line("statics", statics.string());
  if (!weather.empty()) line("weather", weather.string());
  if (!public_events.empty()) line("public_events", public_events.string());
  if (!schema.empty()) line("schema", schema.string());
  s += "\n[grid]\n";
  line("cell_size", csv::format_double(cell_size));
  if (origin_x) line("origin_x", csv::format_double(*origin_x));
  if (origin_y) line("origin_y", csv::format_double(*origin_y));
  if (width) line("width", std::to_string(*width));
  if (height) line("height", std::to_string(*height));
  if (start) line("start", start->iso());
  if (end) line("end", end->iso());
  line("resolution", resolution == Resolution::Daily ? "daily" : "weekly");
  line("invalid_events", invalid_events == InvalidEventPolicy::Reject ? "reject" : "error");
  s += "\n[split]\n";
  line("train_fraction", csv::format_double(train_fraction));
  line("cv_folds", std::to_string(cv_folds));
  line("tune", tune ? "true" : "false");
  s += "\n[model]\n";
  line("strategy", std::string(to_string(strategy)));
  line("phi", std::to_string(phi));
  line("feature_set", std::string(to_string(feature_set)));
  std::string windows;
  for (std::size_t i = 0; i < prior_windows.size(); ++i) windows += (i ? "," : "") + std::to_string(prior_windows[i]);
  line("prior_windows", windows);
  s += "\n[learner]\n";
  std::istringstream desc(learner.describe());
  std::string tok;
  desc >> tok;
  line("kind", tok);
  while (desc >> tok) {
    const auto eq = tok.find('=');
    if (tok.substr(0, eq) != "seed") line(tok.substr(0, eq), tok.substr(eq + 1));
  }
  if (!learner_grid.empty()) {
    s += "\n[learner.grid]\n";
    for (const auto& [param, values] : learner_grid) {
      std::string joined;
      for (std::size_t i = 0; i < values.size(); ++i) joined += (i ? "," : "") + values[i];
      line(param, joined);
    }
  }
  s += "\n[resampling]\n";
  line("k_neighbors", std::to_string(k_neighbors));
  line("strict", strict ? "true" : "false");
  line("standardize", standardize ? "true" : "false");
  s += "\n[evaluation]\n";
  line("coverages", join(coverages));
  line("curve_step", csv::format_double(curve_step));
  line("averaging", averaging == Averaging::MeanOfRatios ? "mean_of_ratios" : "ratio_of_sums");
  line("write_rankings", write_rankings ? "true" : "false");
  line("write_svg", write_svg ? "true" : "false");
  if (!strata.feature.empty()) {
    s += "\n[strata]\n";
    line("feature", strata.feature);
    if (!strata.thresholds.empty()) line("thresholds", join(strata.thresholds));
    if (!strata.percentiles.empty()) line("percentiles", join(strata.percentiles));
    line("stratum", std::string(to_string(strata.stratum)));
  }
  s += "\n[run]\n";
  line("seed", std::to_string(seed));
  line("output", output.string());
  line("threads", std::to_string(threads));
  return s;
}

}  // namespace hotspot
