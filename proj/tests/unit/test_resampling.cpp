#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "hotspot/error.hpp"
#include "hotspot/random.hpp"
#include "hotspot/resampling.hpp"

using namespace hotspot;

namespace {

struct Toy {
  Matrix X;
  std::vector<std::uint8_t> y;
};

Toy make_toy(std::size_t pos, std::size_t neg, std::size_t cols = 1) {
  Toy t;
  t.X = Matrix(pos + neg, cols);
  for (std::size_t i = 0; i < pos + neg; ++i) {
    for (std::size_t j = 0; j < cols; ++j) t.X(i, j) = static_cast<double>(10 * i + j);
    t.y.push_back(i < pos ? 1 : 0);
  }
  return t;
}

Toy random_toy(Rng& rng) {
  const std::size_t n = 4 + uniform_index(rng, 40);
  const std::size_t d = 1 + uniform_index(rng, 4);
  Toy t;
  t.X = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) t.X(i, j) = 10.0 * uniform01(rng) - 5.0;
  for (std::size_t i = 0; i < n; ++i) t.y.push_back(uniform01(rng) < 0.3 ? 1 : 0);
  t.y[0] = 1;
  t.y[1] = 0;
  return t;
}

std::size_t count(std::span<const std::uint8_t> y, std::uint8_t label) {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

void check_balanced(const Resampled& r) {
  CHECK(r.X.rows() == r.y.size());
  CHECK(r.origin.size() == r.y.size());
  CHECK(count(r.y, 1) == count(r.y, 0));
}

}  // namespace

TEST_CASE("random under-sampling examples") {
  auto t = make_toy(3, 7);
  auto r = random_under_sample(t.X, t.y, 1);
  CHECK(r.y.size() == 6);
  check_balanced(r);
  for (std::size_t i = 0; i < r.y.size(); ++i) CHECK(r.X(i, 0) == t.X(r.origin[i], 0));

  auto b = make_toy(5, 5);
  auto rb = random_under_sample(b.X, b.y, 9);
  CHECK(rb.X == b.X);

  std::vector<std::uint8_t> single{1, 1, 1};
  Matrix X(3, 1);
  CHECK_THROWS_AS(random_under_sample(X, single, 1), DataError);
}

TEST_CASE("random over-sampling examples") {
  auto t = make_toy(2, 6);
  auto r = random_over_sample(t.X, t.y, 4);
  CHECK(r.y.size() == 12);
  check_balanced(r);
  CHECK(r.y.size() - t.y.size() == 4);

  auto one = make_toy(1, 4);
  auto r1 = random_over_sample(one.X, one.y, 2);
  CHECK(std::count(r1.origin.begin(), r1.origin.end(), std::size_t{0}) == 4);

  auto b = make_toy(4, 4);
  CHECK(random_over_sample(b.X, b.y, 3).X == b.X);
}

TEST_CASE("smote interpolates towards a neighbour") {
  Matrix X = Matrix::from_rows({{0, 0}, {2, 2}, {9, 9}, {8, 8}, {7, 9}, {6, 1}});
  std::vector<std::uint8_t> y{1, 1, 0, 0, 0, 0};
  SmoteOptions opt;
  opt.fixed_gap = 0.5;
  auto r = smote(X, y, 3, opt);
  check_balanced(r);
  REQUIRE(r.y.size() == 8);
  for (std::size_t i = 6; i < 8; ++i) {
    CHECK(r.origin[i] == kSyntheticRow);
    CHECK(r.X(i, 0) == 1.0);
    CHECK(r.X(i, 1) == 1.0);
  }
}

TEST_CASE("smote on collinear minority stays on the line") {
  Matrix X = Matrix::from_rows({{0, 1}, {1, 3}, {3, 7}, {5, 0}, {6, 0}, {7, 0}, {8, 0}, {9, 0}, {4, 4}});
  std::vector<std::uint8_t> y{1, 1, 1, 0, 0, 0, 0, 0, 0};
  auto r = smote(X, y, 21);
  check_balanced(r);
  for (std::size_t i = 0; i < r.y.size(); ++i)
    if (r.origin[i] == kSyntheticRow) CHECK(r.X(i, 1) == doctest::Approx(2.0 * r.X(i, 0) + 1.0).epsilon(1e-12));
}

TEST_CASE("smote with one minority row falls back or errors when strict") {
  auto t = make_toy(1, 5);
  auto r = smote(t.X, t.y, 1);
  CHECK(r.fell_back);
  check_balanced(r);
  SmoteOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(smote(t.X, t.y, 1, strict), DataError);
}

TEST_CASE("near miss examples") {
  Matrix X = Matrix::from_rows({{0, 0}, {1, 0}, {5, 0}, {9, 0}});
  std::vector<std::uint8_t> y{1, 0, 0, 0};
  auto r = near_miss(X, y, 3, false);
  REQUIRE(r.origin == std::vector<std::size_t>{0, 1});

  // All three majority rows sit at mean distance 5.0; the lowest indices win.
  Matrix X2 = Matrix::from_rows({{0, 0}, {10, 0}, {1, 0}, {5, 0}, {9, 0}});
  std::vector<std::uint8_t> y2{1, 1, 0, 0, 0};
  auto r2 = near_miss(X2, y2, 2, false);
  CHECK(r2.origin == std::vector<std::size_t>{0, 1, 2, 3});

  Matrix X3 = Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}, {-1, 0}, {0, -1}});
  std::vector<std::uint8_t> y3{1, 0, 0, 0, 0};
  auto r3 = near_miss(X3, y3, 1, false);
  CHECK(r3.origin == std::vector<std::size_t>{0, 1});
}

TEST_CASE("resampler contracts on random inputs") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = random_toy(rng);
    const auto seed = rng();
    auto minority = std::min(count(t.y, 1), count(t.y, 0));
    auto majority = std::max(count(t.y, 1), count(t.y, 0));
    for (auto method : {ResampleMethod::RandomUnder, ResampleMethod::RandomOver, ResampleMethod::Smote,
                        ResampleMethod::NearMiss}) {
      ResampleSpec spec;
      spec.method = method;
      spec.seed = seed;
      auto r = resample(t.X, t.y, spec);
      check_balanced(r);
      auto again = resample(t.X, t.y, spec);
      CHECK(again.X == r.X);
      CHECK(again.origin == r.origin);

      const bool under = method == ResampleMethod::RandomUnder || method == ResampleMethod::NearMiss;
      CHECK(r.y.size() == 2 * (under ? minority : majority));
      std::map<std::size_t, int> uses;
      for (auto o : r.origin)
        if (o != kSyntheticRow) ++uses[o];
      if (under) {
        for (auto [row, n] : uses) CHECK(n == 1);  // subset of the input rows
      } else {
        for (std::size_t i = 0; i < t.y.size(); ++i) CHECK(uses[i] >= 1);  // superset of the input
      }
    }
  }
}

TEST_CASE("determinism and parameter validation") {
  ResampleSpec bad;
  bad.k_neighbors = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  auto t = make_toy(3, 9, 2);
  auto a = random_under_sample(t.X, t.y, 77);
  auto b = random_under_sample(t.X, t.y, 77);
  CHECK(a.origin == b.origin);
  CHECK(random_under_sample_indices(t.y, 77) == a.origin);
}

TEST_CASE("class split picks the smaller class and label 1 on ties") {
  std::vector<std::uint8_t> more_pos{1, 1, 1, 0};
  auto s = split_classes(more_pos);
  CHECK(s.minority_label == 0);
  CHECK(s.minority == std::vector<std::size_t>{3});
  std::vector<std::uint8_t> tie{1, 0};
  CHECK(split_classes(tie).minority_label == 1);
}
