#include "canclust/clusim.hpp"
#include "canclust/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace canclust;
using namespace canclust::testing;

namespace {

std::vector<std::string> four() { return {"X1", "X2", "X3", "X4"}; }

Dendrogram caterpillar(const std::vector<std::size_t>& order) {
  // ((o0,o1),o2),o3
  return Dendrogram(four(), {{order[0], order[1], 1, 0}, {4, order[2], 2, 0}, {5, order[3], 3, 0}}, Linkage::average);
}

Dendrogram relabel(const Dendrogram& t, const std::map<std::string, std::string>& names) {
  std::vector<std::string> ids;
  for (const auto& id : t.leaf_ids()) ids.push_back(names.at(id));
  return Dendrogram(ids, t.merges(), t.linkage());
}

} // namespace

TEST_CASE("r = 0 gives uniform level weights") {
  Rng rng(3);
  const auto t = random_dendrogram(rng, 7);
  for (const auto& id : t.leaf_ids()) {
    const auto w = level_weights(t, id, 0.0);
    const auto path = t.root_path(*t.leaf_index(id));
    REQUIRE(w.size() == path.size());
    for (const auto& lw : w) CHECK(lw.weight == doctest::Approx(1.0 / static_cast<double>(path.size())));
  }
}

TEST_CASE("two-leaf weights are a softmax of (0, r)") {
  const Dendrogram t({"a", "b"}, {{0, 1, 1, 0}}, Linkage::single);
  const auto w = level_weights(t, "a", -5.0);
  REQUIRE(w.size() == 2);
  CHECK(w[0].node == t.root());
  CHECK(w[0].depth == 0.0);
  CHECK(w[1].depth == 1.0);
  CHECK(w[0].weight == doctest::Approx(1.0 / (1.0 + std::exp(-5.0))).epsilon(1e-12));
  CHECK(w[0].weight == doctest::Approx(0.9933).epsilon(1e-4));
  CHECK(w[1].weight == doctest::Approx(0.0067).epsilon(0.01));
  CHECK_THROWS_AS(level_weights(t, "zz", -5.0), DataError);
}

TEST_CASE("negative r favours the root, positive r the leaf") {
  Rng rng(4);
  const auto t = random_dendrogram(rng, 8);
  const auto low = level_weights(t, "s3", -50.0);
  const auto high = level_weights(t, "s3", 50.0);
  CHECK(low.front().weight > 0.99);
  CHECK(high.back().weight > 0.99);
}

TEST_CASE("transition matrix follows the projection rule") {
  // ((a,b),c): for a, ancestors root {a,b,c}, {a,b}, {a}.
  const Dendrogram t({"a", "b", "c"}, {{0, 1, 1, 0}, {3, 2, 2, 0}}, Linkage::single);
  const double r = 1.3;
  const double e0 = 1.0, e1 = std::exp(r * 0.5), e2 = std::exp(r);
  const double z = e0 + e1 + e2;
  const auto w = transition_matrix(t, r);
  CHECK(w(0, 0) == doctest::Approx((e0 / 3 + e1 / 2 + e2) / z).epsilon(1e-12));
  CHECK(w(0, 1) == doctest::Approx((e0 / 3 + e1 / 2) / z).epsilon(1e-12));
  CHECK(w(0, 2) == doctest::Approx((e0 / 3) / z).epsilon(1e-12));
  // c hangs off the root: path root -> c, depths 0 and 1.
  const double zc = 1.0 + std::exp(r);
  CHECK(w(2, 2) == doctest::Approx((1.0 / 3 + std::exp(r)) / zc).epsilon(1e-12));
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 3; ++j) s += w(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("power iteration matches the linear solve") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = 2 + static_cast<std::size_t>(rng.uniform() * 5);
    const auto t = random_dendrogram(rng, n);
    const HierarchyParams params{rng.uniform(-6, 6), rng.uniform(0.5, 0.95)};
    const auto aff = affinity(t, params);
    const auto want = linear_solve_affinity(transition_matrix(t, params.r), params.alpha);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0;
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(std::fabs(aff.p(i, j) - want(i, j)) < 1e-10);
        CHECK(aff.p(i, j) >= 0.0);
        sum += aff.p(i, j);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("non-convergence is a numeric error") {
  Rng rng(1);
  const auto t = random_dendrogram(rng, 5);
  try {
    affinity(t, {}, PowerIteration{1e-12, 3});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.residual() > 1e-12);
  }
}

TEST_CASE("flat clustering gives uniform rows") {
  // Every element sits in one root cluster; r -> -inf leaves only the root.
  const Dendrogram t({"a", "b", "c", "d"}, {{0, 1, 1, 0}, {2, 3, 1, 0}, {4, 5, 1, 0}}, Linkage::single);
  const auto aff = affinity(t, {-200.0, 0.9});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double want = (i == j ? 0.1 : 0.0) + 0.9 * 0.25;
      CHECK(aff.p(i, j) == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("affinity is deterministic") {
  Rng rng(6);
  const auto t = random_dendrogram(rng, 10);
  const auto a = affinity(t, {});
  const auto b = affinity(t, {});
  CHECK(a.p == b.p);
}

TEST_CASE("identity, symmetry, range and label equivariance") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 3 + static_cast<std::size_t>(rng.uniform() * 10);
    const auto a = random_dendrogram(rng, n);
    const auto b = random_dendrogram(rng, n);
    const HierarchyParams params{rng.uniform(-6, 6), rng.uniform(0.3, 0.95)};
    CHECK(std::fabs(similarity(a, a, params).value - 1.0) < 1e-12);
    const auto ab = similarity(a, b, params);
    const auto ba = similarity(b, a, params);
    CHECK(std::fabs(ab.value - ba.value) < 1e-12);
    double mean = 0;
    for (const auto& [id, s] : ab.per_element) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      mean += s;
    }
    CHECK(std::fabs(mean / static_cast<double>(n) - ab.value) < 1e-12);

    std::map<std::string, std::string> names;
    for (std::size_t i = 0; i < n; ++i) names["s" + std::to_string(i)] = "t" + std::to_string(n - 1 - i);
    const auto ra = relabel(a, names), rb = relabel(b, names);
    CHECK(std::fabs(similarity(ra, rb, params).value - ab.value) < 1e-12);
  }
}

TEST_CASE("more swaps, less similarity") {
  const auto base = caterpillar({0, 1, 2, 3});
  const auto one = caterpillar({0, 1, 3, 2});
  const auto two = caterpillar({0, 3, 1, 2});
  for (const double r : {-5.0, 5.0}) {
    const HierarchyParams params{r, 0.9};
    CHECK(similarity(base, one, params).value > similarity(base, two, params).value);
  }
}

TEST_CASE("element sets: strict and intersect") {
  const Dendrogram a({"a", "b", "c", "d"}, {{0, 1, 1, 0}, {4, 2, 2, 0}, {5, 3, 3, 0}}, Linkage::ward);
  const Dendrogram b({"a", "b", "c", "e"}, {{0, 1, 1, 0}, {4, 2, 2, 0}, {5, 3, 3, 0}}, Linkage::ward);
  try {
    similarity(a, b, {});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("d") != std::string::npos);
    CHECK(msg.find("e") != std::string::npos);
  }
  const auto s = similarity(a, b, {}, Alignment::intersect);
  CHECK(s.aligned_count() == 3);
  CHECK(s.excluded == std::vector<std::string>{"d", "e"});
  CHECK(s.value == doctest::Approx(1.0).epsilon(1e-12));
  const auto [only_a, only_b] = element_difference(a.leaf_ids(), b.leaf_ids());
  CHECK(only_a == std::vector<std::string>{"d"});
  CHECK(only_b == std::vector<std::string>{"e"});
}

TEST_CASE("same leaves in a different order compare as equal trees") {
  const Dendrogram a({"a", "b", "c"}, {{0, 1, 1, 0}, {3, 2, 2, 0}}, Linkage::ward);
  const Dendrogram b({"c", "b", "a"}, {{2, 1, 1, 0}, {3, 0, 2, 0}}, Linkage::ward);
  CHECK(similarity(a, b, {}).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("params validation") {
  CHECK_THROWS_AS((HierarchyParams{-5, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((HierarchyParams{-5, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((HierarchyParams{INFINITY, 0.5}.validate()), ConfigError);
  CHECK_NOTHROW(HierarchyParams{}.validate());
}
