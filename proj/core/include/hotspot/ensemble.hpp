#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hotspot/learners.hpp"

namespace hotspot {

class SpatioTemporalFrame;

/// Seed of member `index` in an ensemble trained from `master`.
std::uint64_t ensemble_member_seed(std::uint64_t master, std::size_t index);

/// One balanced random under-sample of `rows` (all rows when empty) fitted with `spec`.
/// The draw uses derive_seed(member_seed, 0), the learner derive_seed(member_seed, 1).
LearnerModel train_under_sampled_member(const LearnerSpec& spec, MatrixView X, std::span<const std::uint8_t> y,
                                        std::uint64_t member_seed, std::span<const std::size_t> rows = {});

/// phi learners, each fitted on its own under-sample; predictions are the member mean.
class HyperEnsemble final : public Scorer {
 public:
  HyperEnsemble() = default;
  HyperEnsemble(LearnerSpec base_spec, std::uint64_t master_seed, std::vector<std::uint64_t> member_seeds,
                std::vector<LearnerModel> members);

  std::vector<double> predict_proba(MatrixView X) const override;
  std::size_t arity() const override { return members_.front().arity(); }

  int phi() const { return static_cast<int>(members_.size()); }
  const LearnerSpec& base_spec() const { return base_spec_; }
  std::uint64_t master_seed() const { return master_seed_; }
  const std::vector<std::uint64_t>& member_seeds() const { return member_seeds_; }
  const std::vector<LearnerModel>& members() const { return members_; }

  void write(std::ostream& out) const;
  static HyperEnsemble read(std::istream& in);

  friend bool operator==(const HyperEnsemble& a, const HyperEnsemble& b) {
    return a.base_spec_ == b.base_spec_ && a.master_seed_ == b.master_seed_ && a.member_seeds_ == b.member_seeds_ &&
           a.members_ == b.members_;
  }

 private:
  LearnerSpec base_spec_;
  std::uint64_t master_seed_ = 0;
  std::vector<std::uint64_t> member_seeds_;
  std::vector<LearnerModel> members_;
};

/// Members are trained on `threads` worker threads; the result does not depend on it.
HyperEnsemble train_hyper_ensemble(MatrixView X, std::span<const std::uint8_t> y, int phi,
                                   const LearnerSpec& base_spec, std::uint64_t seed, int threads = 1);
HyperEnsemble train_hyper_ensemble(const SpatioTemporalFrame& train, int phi, const LearnerSpec& base_spec,
                                   std::uint64_t seed, int threads = 1);

/// Cross-validation trainer that fits one under-sampled member per fold.
FoldTrainer under_sampling_trainer();

}  // namespace hotspot
