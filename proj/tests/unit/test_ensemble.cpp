#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "hotspot/ensemble.hpp"
#include "hotspot/error.hpp"
#include "hotspot/random.hpp"
#include "hotspot/resampling.hpp"

using namespace hotspot;

namespace {

struct Data {
  Matrix X;
  std::vector<std::uint8_t> y;
};

/// Rare positives driven by the first column.
Data rare_data(std::size_t n, double pos_rate, std::uint64_t seed) {
  Rng rng(seed);
  Data d{Matrix(n, 3), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) d.X(i, j) = uniform01(rng);
    const double p = pos_rate * 2.0 * d.X(i, 0);
    d.y.push_back(uniform01(rng) < p ? 1 : 0);
  }
  d.y[0] = 1;
  return d;
}

LearnerModel leaf_model(double value) {
  ForestModel f;
  f.trees.emplace_back(std::vector<TreeNode>{{-1, 0.0, -1, -1, value}});
  LearnerSpec s;
  s.trees = 1;
  return LearnerModel(s, 1, f);
}

LearnerSpec small_forest() {
  LearnerSpec s;
  s.trees = 10;
  s.max_depth = 4;
  return s;
}

}  // namespace

TEST_CASE("mean aggregation of member outputs") {
  Matrix X(2, 1);
  HyperEnsemble e(LearnerSpec{}, 0, {1, 2, 3}, {leaf_model(0.2), leaf_model(0.4), leaf_model(0.6)});
  for (double p : e.predict_proba(X)) CHECK(p == doctest::Approx(0.4).epsilon(1e-15));
  HyperEnsemble flat(LearnerSpec{}, 0, {1, 2}, {leaf_model(0.3), leaf_model(0.3)});
  for (double p : flat.predict_proba(X)) CHECK(p == 0.3);
  Matrix wrong(2, 2);
  CHECK_THROWS_AS(e.predict_proba(wrong), DataError);
}

TEST_CASE("member order does not change predictions") {
  auto d = rare_data(600, 0.05, 3);
  auto e = train_hyper_ensemble(d.X, d.y, 6, small_forest(), 11);
  auto members = e.members();
  auto seeds = e.member_seeds();
  std::reverse(members.begin(), members.end());
  std::reverse(seeds.begin(), seeds.end());
  HyperEnsemble permuted(e.base_spec(), e.master_seed(), seeds, members);
  CHECK(permuted.predict_proba(d.X) == e.predict_proba(d.X));
}

TEST_CASE("phi = 1 reduces to one under-sampled learner") {
  auto d = rare_data(800, 0.05, 9);
  for (auto kind : {LearnerKind::RandomForest, LearnerKind::AdaBoost, LearnerKind::LogisticL2}) {
    LearnerSpec s = small_forest();
    s.kind = kind;
    s.strength = 1e-3;
    const std::uint64_t master = 77;
    auto e = train_hyper_ensemble(d.X, d.y, 1, s, master);
    auto single = train_under_sampled_member(s, d.X, d.y, ensemble_member_seed(master, 0));
    CHECK(e.phi() == 1);
    CHECK(e.predict_proba(d.X) == single.predict_proba(d.X));
  }
}

TEST_CASE("members train on balanced draws of twice the minority") {
  Data d{Matrix(1005, 1), std::vector<std::uint8_t>(1005, 0)};
  for (std::size_t i = 0; i < 1005; ++i) d.X(i, 0) = static_cast<double>(i % 17);
  for (std::size_t i = 0; i < 5; ++i) d.y[i * 200] = 1;
  LearnerSpec stump;
  stump.trees = 1;
  stump.max_depth = 1;
  stump.bootstrap = false;
  auto e = train_hyper_ensemble(d.X, d.y, 3, stump, 5);
  REQUIRE(e.phi() == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(random_under_sample_indices(d.y, derive_seed(e.member_seeds()[m], 0)).size() == 10);
    // The root of an unweighted tree stores the positive share of its training rows.
    const auto& tree = std::get<ForestModel>(e.members()[m].params()).trees.front();
    CHECK(tree.nodes().front().value == 0.5);
  }
  auto ten = train_hyper_ensemble(d.X, d.y, 10, stump, 5);
  CHECK(ten.phi() == 10);
  CHECK(ten.member_seeds()[0] == e.member_seeds()[0]);
}

TEST_CASE("thread count does not change the ensemble") {
  auto d = rare_data(500, 0.05, 4);
  auto one = train_hyper_ensemble(d.X, d.y, 5, small_forest(), 8, 1);
  auto three = train_hyper_ensemble(d.X, d.y, 5, small_forest(), 8, 3);
  CHECK(one == three);
}

TEST_CASE("ensemble serialization round trip") {
  auto d = rare_data(400, 0.05, 6);
  auto e = train_hyper_ensemble(d.X, d.y, 4, small_forest(), 19);
  std::stringstream buf;
  e.write(buf);
  auto back = HyperEnsemble::read(buf);
  CHECK(back == e);
  CHECK(back.predict_proba(d.X) == e.predict_proba(d.X));
  std::stringstream junk("hotspot-ensemble 1\nphi 0\n");
  CHECK_THROWS_AS(HyperEnsemble::read(junk), DataError);
  CHECK_THROWS_AS(train_hyper_ensemble(d.X, d.y, 0, small_forest(), 1), ConfigError);
}

TEST_CASE("across-seed variance shrinks from phi 1 to phi 10") {
  auto d = rare_data(2000, 0.03, 12);
  Rng rng(2);
  Matrix probe(40, 3);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 3; ++j) probe(i, j) = uniform01(rng);

  auto variance = [&](int phi) {
    const int seeds = 12;
    std::vector<double> sum(40, 0.0), sq(40, 0.0);
    for (int s = 0; s < seeds; ++s) {
      auto p = train_hyper_ensemble(d.X, d.y, phi, small_forest(), 1000 + static_cast<std::uint64_t>(s)).predict_proba(probe);
      for (std::size_t i = 0; i < 40; ++i) {
        sum[i] += p[i];
        sq[i] += p[i] * p[i];
      }
    }
    std::vector<double> v(40);
    for (std::size_t i = 0; i < 40; ++i) v[i] = sq[i] / seeds - (sum[i] / seeds) * (sum[i] / seeds);
    return v;
  };
  auto v1 = variance(1);
  auto v10 = variance(10);
  int ok = 0;
  for (std::size_t i = 0; i < 40; ++i) ok += v10[i] <= v1[i] ? 1 : 0;
  CHECK(ok >= 36);
}
