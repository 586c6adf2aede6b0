#include "canclust/error.hpp"
#include "canclust/stats.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace canclust;
using namespace canclust::testing;

namespace {

std::vector<NamedDendrogram> named(Rng& rng, std::size_t count, const std::string& prefix, std::size_t n = 6) {
  std::vector<NamedDendrogram> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back({prefix + std::to_string(i), random_dendrogram(rng, n)});
  return out;
}

/// Textbook normal approximation without ties: continuity-corrected two-sided p.
double normal_two_sided(double u, std::size_t n1, std::size_t n2) {
  const double mean = static_cast<double>(n1 * n2) / 2.0;
  const double sd = std::sqrt(static_cast<double>(n1 * n2) * static_cast<double>(n1 + n2 + 1) / 12.0);
  const double z = std::max(0.0, std::fabs(u - mean) - 0.5) / sd;
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

double trapezoid(const std::vector<DensityPoint>& c) {
  double s = 0;
  for (std::size_t k = 1; k < c.size(); ++k) s += 0.5 * (c[k].density + c[k - 1].density) * (c[k].x - c[k - 1].x);
  return s;
}

} // namespace

TEST_CASE("pair counts") {
  Rng rng(1);
  const auto benign = named(rng, 12, "b");
  const auto attack = named(rng, 3, "a");
  const auto bb = benign_pairs(benign, {});
  CHECK(bb.values.size() == 66);
  CHECK(bb.pair_ids.size() == 66);
  CHECK(bb.pair_ids.front() == std::pair<std::string, std::string>{"b0", "b1"});
  CHECK(bb.group_name() == "benign_benign");
  const auto ab = attack_vs_benign("correlated", attack, benign, {});
  CHECK(ab.values.size() == 36);
  CHECK(ab.pair_ids[12] == std::pair<std::string, std::string>{"a1", "b0"});
  CHECK(ab.group_name() == "attack_benign:correlated");
  CHECK(attack_vs_benign("coolant", std::span(attack).first(1), benign, {}).values.size() == 12);
  CHECK(benign_pairs(std::span(benign).first(2), {}).values.size() == 1);
  CHECK_THROWS_AS(benign_pairs(std::span(benign).first(1), {}), ConfigError);
  CHECK_THROWS_AS(attack_vs_benign("x", {}, benign, {}), ConfigError);
}

TEST_CASE("identical dendrograms give similarity 1") {
  Rng rng(2);
  const auto t = random_dendrogram(rng, 7);
  std::vector<NamedDendrogram> same;
  for (int i = 0; i < 4; ++i) same.push_back({"c" + std::to_string(i), t});
  for (double v : benign_pairs(same, {}).values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mann-whitney: fully separated 3 vs 3") {
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  const auto r = mann_whitney(x, y);
  CHECK(r.u_statistic == 0.0);
  CHECK(r.p_value == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.method == TestMethod::exact);
  CHECK_FALSE(r.significant);
}

TEST_CASE("mann-whitney: identical samples") {
  const std::vector<double> x{0.3, 0.5, 0.9, 0.1};
  const auto r = mann_whitney(x, x);
  CHECK(r.u_statistic == 8.0);
  CHECK(r.p_value == 1.0);
  const std::vector<double> flat{2, 2, 2};
  CHECK(mann_whitney(flat, flat).p_value == 1.0);
  CHECK_THROWS_AS(mann_whitney({}, x), DataError);
}

TEST_CASE("exact null distribution counts") {
  // 2 vs 2: counts over u = 0..4 are 1,1,2,1,1 out of C(4,2) = 6.
  const auto d = exact_u_distribution(2, 2);
  REQUIRE(d.size() == 5);
  const double want[] = {1, 1, 2, 1, 1};
  for (std::size_t u = 0; u < 5; ++u) CHECK(d[u] * 6 == doctest::Approx(want[u]));
  for (std::size_t n1 : {1u, 4u, 9u}) {
    for (std::size_t n2 : {1u, 3u, 8u}) {
      const auto dist = exact_u_distribution(n1, n2);
      CHECK(dist.size() == n1 * n2 + 1);
      CHECK(std::accumulate(dist.begin(), dist.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t u = 0; u < dist.size(); ++u) CHECK(dist[u] == doctest::Approx(dist[dist.size() - 1 - u]));
    }
  }
}

TEST_CASE("exact p matches brute-force enumeration") {
  Rng rng(77);
  for (std::size_t n1 = 1; n1 <= 7; ++n1) {
    for (std::size_t n2 = 1; n2 <= 7; ++n2) {
      const auto [x, y] = tie_free_samples(rng, n1, n2, 0.7);
      const auto oracle = brute_force_mann_whitney(x, y);
      CHECK(std::fabs(mann_whitney(x, y).p_value - oracle.p_two_sided) < 1e-12);
      CHECK(std::fabs(mann_whitney(x, y, Alternative::less).p_value - oracle.p_less) < 1e-12);
      CHECK(std::fabs(mann_whitney(x, y, Alternative::greater).p_value - oracle.p_greater) < 1e-12);
    }
  }
}

TEST_CASE("U(x,y) + U(y,x) = n1 n2, with ties") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x, y;
    for (int i = 0; i < 9; ++i) x.push_back(std::round(rng.normal() * 2));
    for (int i = 0; i < 6; ++i) y.push_back(std::round(rng.normal() * 2));
    CHECK(mann_whitney_u(x, y) + mann_whitney_u(y, x) == 54.0);
  }
}

TEST_CASE("p is invariant under a monotone transform") {
  Rng rng(8);
  for (const std::size_t n : {5u, 40u, 120u}) {
    const auto [x, y] = tie_free_samples(rng, n, n + 3, 0.4);
    std::vector<double> tx, ty;
    for (double v : x) tx.push_back(2 * v + 1);
    for (double v : y) ty.push_back(2 * v + 1);
    CHECK(mann_whitney(x, y).p_value == mann_whitney(tx, ty).p_value);
  }
}

TEST_CASE("exact and normal approximation agree for n >= 20") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n1 = 20 + static_cast<std::size_t>(trial);
    const auto [x, y] = tie_free_samples(rng, n1, 25, 0.3);
    const auto exact = mann_whitney(x, y);
    REQUIRE(exact.method == TestMethod::exact);
    CHECK(std::fabs(exact.p_value - normal_two_sided(exact.u_statistic, n1, 25)) < 0.01);
  }
}

TEST_CASE("large samples use the normal approximation") {
  Rng rng(3);
  const auto [x, y] = tie_free_samples(rng, 120, 100, 0.2);
  const auto r = mann_whitney(x, y);
  CHECK(r.method == TestMethod::normal_approx);
  CHECK(r.p_value == doctest::Approx(normal_two_sided(r.u_statistic, 120, 100)).epsilon(1e-12));
}

TEST_CASE("ties force the normal approximation with corrected variance") {
  const std::vector<double> x{1, 2, 2, 3}, y{2, 3, 4, 4, 5};
  const auto r = mann_whitney(x, y);
  CHECK(r.method == TestMethod::normal_approx);
  CHECK(r.u_statistic == 2.5);
  // Tie groups among the 9 pooled values: {2 x3}, {3 x2}, {4 x2}.
  const double n = 9, n1n2 = 20;
  const double tie = (27 - 3) + (8 - 2) + (8 - 2);
  const double sd = std::sqrt(n1n2 / 12.0 * ((n + 1) - tie / (n * (n - 1))));
  const double z = (std::fabs(2.5 - 10.0) - 0.5) / sd;
  CHECK(r.p_value == doctest::Approx(std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("significant flag follows the level") {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{6, 7, 8, 9, 10};
  const auto r = mann_whitney(x, y, Alternative::two_sided, 0.05);
  CHECK(r.significant == (r.p_value < 0.05));
  CHECK(mann_whitney(x, y, Alternative::two_sided, 0.001).significant == false);
}

TEST_CASE("kde normalization and scott bandwidth") {
  Rng rng(4);
  std::vector<double> v;
  for (int i = 0; i < 66; ++i) v.push_back(0.9 + 0.03 * rng.normal());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / 66.0;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / 65.0);
  CHECK(scott_bandwidth(v) == doctest::Approx(sd * std::pow(66.0, -0.2)).epsilon(1e-12));
  const auto curve = density_export(v);
  CHECK(curve.size() == kDensityPoints);
  const double integral = trapezoid(curve);
  CHECK(integral >= 0.997);
  CHECK(integral <= 1.003);
}

TEST_CASE("kde of two points with a fixed bandwidth") {
  const std::vector<double> v{0.0, 1.0};
  const auto curve = density_export(v, Bandwidth::of(0.1));
  CHECK(curve.front().x == doctest::Approx(-0.3));
  CHECK(curve.back().x == doctest::Approx(1.3));
  for (const auto& p : curve) {
    const double g0 = std::exp(-0.5 * p.x * p.x / 0.01), g1 = std::exp(-0.5 * (p.x - 1) * (p.x - 1) / 0.01);
    CHECK(p.density == doctest::Approx((g0 + g1) / (2 * 0.1 * std::sqrt(2 * M_PI))).epsilon(1e-12));
  }
  CHECK(trapezoid(curve) == doctest::Approx(1.0).epsilon(3e-3));
  const std::vector<double> one{0.5};
  CHECK_THROWS_AS(density_export(one), DataError);
  CHECK_THROWS_AS(density_export(v, Bandwidth::of(0.0)), Error);
}
