#include "hotspot/learners.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "hotspot/csv.hpp"
#include "hotspot/error.hpp"
#include "hotspot/random.hpp"

namespace hotspot {

namespace {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_training_data(MatrixView X, std::span<const std::uint8_t> y, std::span<const double> weights) {
  if (X.rows() != y.size()) throw DataError(fmt::format("{} feature rows but {} labels", X.rows(), y.size()));
  if (y.size() < 2) throw DataError("need at least two training rows");
  if (X.cols() == 0) throw DataError("need at least one feature column");
  bool pos = false, neg = false;
  for (auto l : y) {
    if (l > 1) throw DataError("labels must be binary");
    (l ? pos : neg) = true;
  }
  if (!pos || !neg) throw DataError("training labels hold a single class");
  for (std::size_t i = 0; i < X.rows() * X.cols(); ++i)
    if (!std::isfinite(X.data()[i])) throw DataError("training features contain non-finite values");
  if (!weights.empty()) {
    if (weights.size() != y.size()) throw DataError("sample weights and labels differ in length");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("sample weights must be finite and non-negative");
      total += w;
    }
    if (total <= 0.0) throw DataError("sample weights are all zero");
  }
}

int resolve_max_features(int requested, std::size_t d) {
  if (requested < 0) return static_cast<int>(d);
  if (requested == 0) return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
  return std::min(requested, static_cast<int>(d));
}

// ---------------------------------------------------------------------------
// Hex-float text helpers for the model format.

std::string hex(double v) { return fmt::format("{:a}", v); }

double read_hex(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw DataError("truncated model file");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) throw DataError(fmt::format("bad number '{}' in model file", tok));
  return v;
}

template <typename T>
T read_int(std::istream& in) {
  long long v;
  if (!(in >> v)) throw DataError("truncated model file");
  return static_cast<T>(v);
}

void expect(std::istream& in, std::string_view word) {
  std::string tok;
  if (!(in >> tok) || tok != word) throw DataError(fmt::format("model file: expected '{}', found '{}'", word, tok));
}

void write_tree(std::ostream& out, const DecisionTree& tree) {
  out << "tree " << tree.nodes().size() << '\n';
  for (const auto& n : tree.nodes())
    out << n.feature << ' ' << hex(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << hex(n.value) << '\n';
}

DecisionTree read_tree(std::istream& in, std::size_t arity) {
  expect(in, "tree");
  const auto count = read_int<std::size_t>(in);
  std::vector<TreeNode> nodes(count);
  for (auto& n : nodes) {
    n.feature = read_int<std::int32_t>(in);
    n.threshold = read_hex(in);
    n.left = read_int<std::int32_t>(in);
    n.right = read_int<std::int32_t>(in);
    n.value = read_hex(in);
  }
  for (const auto& n : nodes) {
    if (n.feature >= static_cast<std::int32_t>(arity)) throw DataError("model tree references an unknown feature");
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || static_cast<std::size_t>(n.left) >= count ||
                           static_cast<std::size_t>(n.right) >= count))
      throw DataError("model tree has dangling children");
  }
  if (nodes.empty()) throw DataError("model tree is empty");
  return DecisionTree(std::move(nodes));
}

void write_vector(std::ostream& out, std::string_view name, std::span<const double> v) {
  out << name;
  for (double x : v) out << ' ' << hex(x);
  out << '\n';
}

std::vector<double> read_vector(std::istream& in, std::string_view name, std::size_t n) {
  expect(in, name);
  std::vector<double> v(n);
  for (auto& x : v) x = read_hex(in);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// LearnerSpec

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::RandomForest: return "forest";
    case LearnerKind::AdaBoost: return "adaboost";
    case LearnerKind::LogisticL1: return "logistic_l1";
    case LearnerKind::LogisticL2: return "logistic_l2";
  }
  return "forest";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "forest" || name == "random_forest" || name == "rf") return LearnerKind::RandomForest;
  if (name == "adaboost") return LearnerKind::AdaBoost;
  if (name == "logistic_l1" || name == "lasso") return LearnerKind::LogisticL1;
  if (name == "logistic_l2" || name == "ridge") return LearnerKind::LogisticL2;
  throw ConfigError(fmt::format("unknown learner '{}' (forest, adaboost, logistic_l1, logistic_l2)", name));
}

void LearnerSpec::validate() const {
  switch (kind) {
    case LearnerKind::RandomForest:
      if (trees < 1) throw ConfigError("forest needs at least one tree");
      if (max_depth < 0) throw ConfigError("max_depth must be >= 1, or 0 for unlimited");
      if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
      if (max_features < -1) throw ConfigError("max_features must be >= 1, 0 (sqrt) or -1 (all)");
      break;
    case LearnerKind::AdaBoost:
      if (trees < 1) throw ConfigError("AdaBoost needs at least one round");
      if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
      if (weak_depth < 1) throw ConfigError("weak_depth must be >= 1");
      break;
    case LearnerKind::LogisticL1:
    case LearnerKind::LogisticL2:
      if (!(strength >= 0.0) || !std::isfinite(strength)) throw ConfigError("strength must be finite and >= 0");
      if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
      if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
      break;
  }
}

void LearnerSpec::set(std::string_view name, std::string_view value) {
  const std::string ctx = fmt::format("learner parameter '{}'", name);
  auto as_int = [&] {
    try {
      return static_cast<int>(csv::parse_int(value, ctx));
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  };
  auto as_double = [&] {
    try {
      return csv::parse_double(value, ctx);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  };
  if (name == "kind") kind = parse_learner_kind(value);
  else if (name == "trees" || name == "rounds") trees = as_int();
  else if (name == "max_depth" || name == "depth") max_depth = value == "none" || value == "unlimited" ? 0 : as_int();
  else if (name == "min_samples_leaf") min_samples_leaf = as_int();
  else if (name == "max_features") max_features = value == "sqrt" ? 0 : value == "all" ? -1 : as_int();
  else if (name == "bootstrap") bootstrap = value == "1" || value == "true" || value == "yes";
  else if (name == "learning_rate") learning_rate = as_double();
  else if (name == "weak_depth") weak_depth = as_int();
  else if (name == "strength" || name == "lambda") strength = as_double();
  else if (name == "tolerance") tolerance = as_double();
  else if (name == "max_iterations") max_iterations = as_int();
  else if (name == "seed") seed = static_cast<std::uint64_t>(as_int());
  else throw ConfigError(fmt::format("unknown learner parameter '{}'", name));
}

std::string LearnerSpec::describe() const {
  return fmt::format(
      "{} trees={} max_depth={} min_samples_leaf={} max_features={} bootstrap={} learning_rate={} weak_depth={} "
      "strength={} tolerance={} max_iterations={} seed={}",
      to_string(kind), trees, max_depth, min_samples_leaf, max_features, bootstrap ? 1 : 0,
      learning_rate, weak_depth, strength, tolerance,
      max_iterations, seed);
}

LearnerSpec LearnerSpec::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tok;
  LearnerSpec spec;
  if (!(in >> tok)) throw ConfigError("empty learner description");
  spec.kind = parse_learner_kind(tok);
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("bad learner parameter '{}'", tok));
    const auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "seed") {
      std::uint64_t s = 0;
      auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), s);
      if (ec != std::errc{} || p != val.data() + val.size()) throw ConfigError(fmt::format("bad seed '{}'", val));
      spec.seed = s;
    } else {
      spec.set(key, val);
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Prediction

double LearnerModel::predict_one(std::span<const double> x) const {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ForestModel>) {
          double sum = 0.0;
          for (const auto& t : m.trees) sum += t.predict(x);
          return sum / static_cast<double>(m.trees.size());
        } else if constexpr (std::is_same_v<T, AdaBoostModel>) {
          double margin = 0.0;
          for (std::size_t i = 0; i < m.learners.size(); ++i)
            margin += m.alphas[i] * (m.learners[i].predict(x) > 0.5 ? 1.0 : -1.0);
          return sigmoid(2.0 * margin);
        } else {
          double z = m.intercept;
          for (std::size_t j = 0; j < m.weights.size(); ++j) z += m.weights[j] * (x[j] - m.mean[j]) / m.scale[j];
          return sigmoid(z);
        }
      },
      params_);
}

std::vector<double> LearnerModel::predict_proba(MatrixView X) const {
  if (X.cols() != arity_)
    throw DataError(fmt::format("model expects {} features, input has {}", arity_, X.cols()));
  std::vector<double> out(X.rows());
  if (const auto* forest = std::get_if<ForestModel>(&params_)) {
    // Tree-major accumulation keeps each tree hot in cache.
    for (const auto& t : forest->trees)
      for (std::size_t i = 0; i < X.rows(); ++i) out[i] += t.predict(X.row(i));
    const double n = static_cast<double>(forest->trees.size());
    for (auto& p : out) p /= n;
    return out;
  }
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_one(X.row(i));
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

ForestModel fit_forest(const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                       std::span<const double> weights) {
  TreeBuilder builder(X, y);
  const TreeParams params{spec.max_depth, spec.min_samples_leaf, resolve_max_features(spec.max_features, X.cols())};
  ForestModel model;
  model.trees.reserve(static_cast<std::size_t>(spec.trees));
  std::vector<double> w(X.rows());
  for (int t = 0; t < spec.trees; ++t) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(t)));
    if (spec.bootstrap) {
      std::fill(w.begin(), w.end(), 0.0);
      for (std::size_t i = 0; i < X.rows(); ++i) w[uniform_index(rng, X.rows())] += 1.0;
      if (!weights.empty())
        for (std::size_t i = 0; i < w.size(); ++i) w[i] *= weights[i];
      // A bootstrap draw may miss every weighted row; fall back to the full sample.
      if (std::all_of(w.begin(), w.end(), [](double v) { return v <= 0.0; })) {
        if (weights.empty()) std::fill(w.begin(), w.end(), 1.0);
        else std::copy(weights.begin(), weights.end(), w.begin());
      }
    } else if (weights.empty()) {
      std::fill(w.begin(), w.end(), 1.0);
    } else {
      std::copy(weights.begin(), weights.end(), w.begin());
    }
    model.trees.push_back(builder.grow(w, params, rng));
  }
  return model;
}

AdaBoostModel fit_adaboost(const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                           std::span<const double> weights) {
  TreeBuilder builder(X, y);
  const TreeParams params{spec.weak_depth, 1, -1};
  const std::size_t n = X.rows();
  std::vector<double> w(n, 1.0);
  if (!weights.empty()) std::copy(weights.begin(), weights.end(), w.begin());
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;

  constexpr double kMinError = 1e-10;
  AdaBoostModel model;
  std::vector<double> h(n);
  for (int round = 0; round < spec.trees; ++round) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(round)));
    auto tree = builder.grow(w, params, rng);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = tree.predict(X.row(i)) > 0.5 ? 1.0 : -1.0;
      if ((h[i] > 0) != (y[i] == 1)) err += w[i];
    }
    if (err >= 0.5) break;  // no better than chance on this distribution
    const double e = std::max(err, kMinError);
    const double alpha = spec.learning_rate * 0.5 * std::log((1.0 - e) / e);
    model.learners.push_back(std::move(tree));
    model.alphas.push_back(alpha);
    model.round_errors.push_back(err);
    if (err <= kMinError) break;
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = y[i] ? 1.0 : -1.0;
      w[i] *= std::exp(-alpha * yi * h[i]);
      norm += w[i];
    }
    for (auto& v : w) v /= norm;
  }
  return model;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

LogisticModel fit_logistic(const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                           std::span<const double> weights) {
  const bool l1 = spec.kind == LearnerKind::LogisticL1;
  const auto scaling = ColumnScaling::fit(X);
  Matrix Xs(X.rows(), X.cols());
  for (std::size_t i = 0; i < X.rows(); ++i) scaling.apply(X.row(i), Xs.row(i));
  LogisticObjective obj(Xs, y, weights, spec.strength, l1);

  const std::size_t d = X.cols();
  std::vector<double> w(d, 0.0), gw(d), cand(d);
  double b = 0.0, gb = 0.0;
  double step = 1.0;
  LogisticModel model;
  model.mean = scaling.mean;
  model.scale = scaling.scale;

  for (int it = 0; it < spec.max_iterations; ++it) {
    model.iterations = it + 1;
    if (!l1) {
      obj.gradient(w, b, gw, gb);
      const double gnorm2 = dot(gw, gw) + gb * gb;
      if (!std::isfinite(gnorm2)) throw NumericError("logistic gradient is not finite");
      if (std::sqrt(gnorm2) <= spec.tolerance) {
        model.converged = true;
        break;
      }
      const double f = obj.value(w, b);
      step = std::min(step * 2.0, 1e6);
      double fc = 0.0, bc = 0.0;
      while (true) {
        for (std::size_t j = 0; j < d; ++j) cand[j] = w[j] - step * gw[j];
        bc = b - step * gb;
        fc = obj.value(cand, bc);
        if (fc <= f - 0.5 * step * gnorm2) break;
        step *= 0.5;
        if (step < 1e-30) throw NumericError("logistic line search failed to make progress");
      }
      w.swap(cand);
      b = bc;
    } else {
      obj.smooth_gradient(w, b, gw, gb);
      const double f = obj.smooth_value(w, b);
      step = std::min(step * 2.0, 1e6);
      double bc = 0.0, diff2 = 0.0;
      while (true) {
        const double shrink = step * spec.strength;
        double lin = 0.0;
        diff2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double z = w[j] - step * gw[j];
          cand[j] = z > shrink ? z - shrink : (z < -shrink ? z + shrink : 0.0);
          const double dj = cand[j] - w[j];
          lin += gw[j] * dj;
          diff2 += dj * dj;
        }
        bc = b - step * gb;
        lin += gb * (bc - b);
        diff2 += (bc - b) * (bc - b);
        if (!std::isfinite(lin)) throw NumericError("logistic proximal step is not finite");
        if (obj.smooth_value(cand, bc) <= f + lin + diff2 / (2.0 * step)) break;
        step *= 0.5;
        if (step < 1e-30) throw NumericError("logistic line search failed to make progress");
      }
      w.swap(cand);
      b = bc;
      if (std::sqrt(diff2) / step <= spec.tolerance) {
        model.converged = true;
        break;
      }
    }
  }
  model.weights = std::move(w);
  model.intercept = b;
  return model;
}

}  // namespace

LearnerModel fit(const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                 std::span<const double> weights) {
  spec.validate();
  check_training_data(X, y, weights);
  switch (spec.kind) {
    case LearnerKind::RandomForest: return {spec, X.cols(), fit_forest(spec, X, y, weights)};
    case LearnerKind::AdaBoost: return {spec, X.cols(), fit_adaboost(spec, X, y, weights)};
    case LearnerKind::LogisticL1:
    case LearnerKind::LogisticL2: return {spec, X.cols(), fit_logistic(spec, X, y, weights)};
  }
  throw ConfigError("unknown learner kind");
}

std::vector<double> cost_weights(std::span<const std::uint8_t> y) {
  std::size_t pos = 0;
  for (auto l : y) pos += l ? 1 : 0;
  const std::size_t neg = y.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("cost weights need both classes");
  const bool pos_minority = pos <= neg;
  const double minority_weight =
      pos_minority ? static_cast<double>(neg) / static_cast<double>(pos) : static_cast<double>(pos) / static_cast<double>(neg);
  std::vector<double> w(y.size(), 1.0);
  for (std::size_t i = 0; i < y.size(); ++i)
    if ((y[i] == 1) == pos_minority) w[i] = minority_weight;
  return w;
}

// ---------------------------------------------------------------------------
// LogisticObjective

LogisticObjective::LogisticObjective(MatrixView Xs, std::span<const std::uint8_t> y, std::span<const double> weights,
                                     double strength, bool l1)
    : X_(Xs), y_(y), weights_(y.size(), 1.0), strength_(strength), l1_(l1) {
  if (!weights.empty()) std::copy(weights.begin(), weights.end(), weights_.begin());
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  for (auto& w : weights_) w /= total;
}

double LogisticObjective::smooth_value(std::span<const double> w, double b) const {
  double loss = 0.0;
  for (std::size_t i = 0; i < X_.rows(); ++i) {
    const double z = b + dot(w, X_.row(i));
    loss += weights_[i] * (softplus(z) - (y_[i] ? z : 0.0));
  }
  if (!l1_) loss += 0.5 * strength_ * dot(w, w);
  return loss;
}

double LogisticObjective::value(std::span<const double> w, double b) const {
  double v = smooth_value(w, b);
  if (l1_)
    for (double x : w) v += strength_ * std::abs(x);
  return v;
}

void LogisticObjective::smooth_gradient(std::span<const double> w, double b, std::span<double> grad_w,
                                        double& grad_b) const {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0.0;
  for (std::size_t i = 0; i < X_.rows(); ++i) {
    const auto row = X_.row(i);
    const double r = weights_[i] * (sigmoid(b + dot(w, row)) - (y_[i] ? 1.0 : 0.0));
    for (std::size_t j = 0; j < row.size(); ++j) grad_w[j] += r * row[j];
    grad_b += r;
  }
  if (!l1_)
    for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += strength_ * w[j];
}

void LogisticObjective::gradient(std::span<const double> w, double b, std::span<double> grad_w, double& grad_b) const {
  smooth_gradient(w, b, grad_w, grad_b);
  if (l1_)
    for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += strength_ * (w[j] > 0 ? 1.0 : (w[j] < 0 ? -1.0 : 0.0));
}

// ---------------------------------------------------------------------------
// Serialization

void LearnerModel::write(std::ostream& out) const {
  out << "hotspot-learner 1\n";
  out << "spec " << spec_.describe() << '\n';
  out << "arity " << arity_ << '\n';
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ForestModel>) {
          out << "forest " << m.trees.size() << '\n';
          for (const auto& t : m.trees) write_tree(out, t);
        } else if constexpr (std::is_same_v<T, AdaBoostModel>) {
          out << "adaboost " << m.learners.size() << '\n';
          for (std::size_t i = 0; i < m.learners.size(); ++i) {
            out << "round " << hex(m.alphas[i]) << ' ' << hex(m.round_errors[i]) << '\n';
            write_tree(out, m.learners[i]);
          }
        } else {
          out << "logistic " << m.weights.size() << ' ' << m.iterations << ' ' << (m.converged ? 1 : 0) << '\n';
          write_vector(out, "mean", m.mean);
          write_vector(out, "scale", m.scale);
          write_vector(out, "weights", m.weights);
          out << "intercept " << hex(m.intercept) << '\n';
        }
      },
      params_);
  out << "end-learner\n";
}

LearnerModel LearnerModel::read(std::istream& in) {
  expect(in, "hotspot-learner");
  if (read_int<int>(in) != 1) throw DataError("unsupported learner format version");
  expect(in, "spec");
  std::string line;
  std::getline(in, line);
  LearnerSpec spec = LearnerSpec::parse(line);
  expect(in, "arity");
  const auto arity = read_int<std::size_t>(in);
  std::string kind;
  in >> kind;
  Params params;
  if (kind == "forest") {
    ForestModel m;
    const auto n = read_int<std::size_t>(in);
    for (std::size_t i = 0; i < n; ++i) m.trees.push_back(read_tree(in, arity));
    params = std::move(m);
  } else if (kind == "adaboost") {
    AdaBoostModel m;
    const auto n = read_int<std::size_t>(in);
    for (std::size_t i = 0; i < n; ++i) {
      expect(in, "round");
      m.alphas.push_back(read_hex(in));
      m.round_errors.push_back(read_hex(in));
      m.learners.push_back(read_tree(in, arity));
    }
    params = std::move(m);
  } else if (kind == "logistic") {
    LogisticModel m;
    const auto d = read_int<std::size_t>(in);
    if (d != arity) throw DataError("logistic weight count differs from arity");
    m.iterations = read_int<int>(in);
    m.converged = read_int<int>(in) != 0;
    m.mean = read_vector(in, "mean", d);
    m.scale = read_vector(in, "scale", d);
    m.weights = read_vector(in, "weights", d);
    expect(in, "intercept");
    m.intercept = read_hex(in);
    params = std::move(m);
  } else {
    throw DataError(fmt::format("unknown learner block '{}'", kind));
  }
  expect(in, "end-learner");
  return {std::move(spec), arity, std::move(params)};
}

}  // namespace hotspot
