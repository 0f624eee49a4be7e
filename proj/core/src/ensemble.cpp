#include "hotspot/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <istream>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "hotspot/dataset.hpp"
#include "hotspot/error.hpp"
#include "hotspot/random.hpp"
#include "hotspot/resampling.hpp"

namespace hotspot {

std::uint64_t ensemble_member_seed(std::uint64_t master, std::size_t index) { return derive_seed(master, index); }

LearnerModel train_under_sampled_member(const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                                        std::uint64_t member_seed, std::span<const std::size_t> rows) {
  std::vector<std::size_t> picked;
  if (rows.empty()) {
    picked = random_under_sample_indices(y, derive_seed(member_seed, 0));
  } else {
    std::vector<std::uint8_t> sub(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) sub[i] = y[rows[i]];
    picked = random_under_sample_indices(sub, derive_seed(member_seed, 0));
    for (auto& p : picked) p = rows[p];
  }
  const Matrix Xs = gather_rows(X, picked);
  std::vector<std::uint8_t> ys(picked.size());
  for (std::size_t i = 0; i < picked.size(); ++i) ys[i] = y[picked[i]];
  LearnerSpec s = spec;
  s.seed = derive_seed(member_seed, 1);
  return fit(s, Xs, ys);
}

HyperEnsemble::HyperEnsemble(LearnerSpec base_spec, std::uint64_t master_seed, std::vector<std::uint64_t> member_seeds,
                             std::vector<LearnerModel> members)
    : base_spec_(std::move(base_spec)),
      master_seed_(master_seed),
      member_seeds_(std::move(member_seeds)),
      members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("an ensemble needs at least one member");
  if (member_seeds_.size() != members_.size()) throw DataError("ensemble seed count differs from member count");
  for (const auto& m : members_)
    if (m.arity() != members_.front().arity()) throw DataError("ensemble members disagree on feature arity");
}

std::vector<double> HyperEnsemble::predict_proba(MatrixView X) const {
  if (X.cols() != arity())
    throw DataError(fmt::format("ensemble expects {} features, input has {}", arity(), X.cols()));
  const std::size_t phi = members_.size();
  std::vector<double> all(X.rows() * phi);
  for (std::size_t m = 0; m < phi; ++m) {
    const auto p = members_[m].predict_proba(X);
    for (std::size_t i = 0; i < p.size(); ++i) all[i * phi + m] = p[i];
  }
  // Summing in sorted order makes the mean independent of member order, bit for bit.
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto first = all.begin() + static_cast<std::ptrdiff_t>(i * phi);
    std::sort(first, first + static_cast<std::ptrdiff_t>(phi));
    double sum = 0.0;
    for (std::size_t m = 0; m < phi; ++m) sum += first[static_cast<std::ptrdiff_t>(m)];
    out[i] = sum / static_cast<double>(phi);
  }
  return out;
}

void HyperEnsemble::write(std::ostream& out) const {
  out << "hotspot-ensemble 1\n";
  out << "phi " << members_.size() << '\n';
  out << "master_seed " << master_seed_ << '\n';
  out << "base " << base_spec_.describe() << '\n';
  out << "seeds";
  for (auto s : member_seeds_) out << ' ' << s;
  out << '\n';
  for (const auto& m : members_) m.write(out);
  out << "end-ensemble\n";
}

HyperEnsemble HyperEnsemble::read(std::istream& in) {
  auto expect = [&](std::string_view word) {
    std::string tok;
    if (!(in >> tok) || tok != word)
      throw DataError(fmt::format("ensemble file: expected '{}', found '{}'", word, tok));
  };
  expect("hotspot-ensemble");
  int version = 0;
  in >> version;
  if (version != 1) throw DataError("unsupported ensemble format version");
  std::size_t phi = 0;
  std::uint64_t master = 0;
  expect("phi");
  in >> phi;
  expect("master_seed");
  in >> master;
  expect("base");
  std::string line;
  std::getline(in, line);
  LearnerSpec base = LearnerSpec::parse(line);
  expect("seeds");
  std::vector<std::uint64_t> seeds(phi);
  for (auto& s : seeds)
    if (!(in >> s)) throw DataError("truncated ensemble file");
  std::vector<LearnerModel> members;
  for (std::size_t i = 0; i < phi; ++i) members.push_back(LearnerModel::read(in));
  expect("end-ensemble");
  return {std::move(base), master, std::move(seeds), std::move(members)};
}

HyperEnsemble train_hyper_ensemble(MatrixView X, std::span<const std::uint8_t> y, int phi,
                                   const LearnerSpec& base_spec, std::uint64_t seed, int threads) {
  if (phi < 1) throw ConfigError("phi must be at least 1");
  base_spec.validate();
  const auto n = static_cast<std::size_t>(phi);
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = ensemble_member_seed(seed, i);
  std::vector<LearnerModel> members(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        members[i] = train_under_sampled_member(base_spec, X, y, seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, phi));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return {base_spec, seed, std::move(seeds), std::move(members)};
}

HyperEnsemble train_hyper_ensemble(const SpatioTemporalFrame& train, int phi, const LearnerSpec& base_spec,
                                   std::uint64_t seed, int threads) {
  return train_hyper_ensemble(train.features(), train.labels(), phi, base_spec, seed, threads);
}

FoldTrainer under_sampling_trainer() {
  return [](const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y, std::span<const std::size_t> rows,
            std::uint64_t seed) -> std::unique_ptr<Scorer> {
    return std::make_unique<LearnerModel>(train_under_sampled_member(spec, X, y, seed, rows));
  };
}

}  // namespace hotspot
