#include "canclust/stats.hpp"

#include "canclust/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace canclust {

namespace {

/// Affinities are computed once per dendrogram and reused across pairs whose
/// element sets already match.
class AffinityCache {
public:
  AffinityCache(std::span<const NamedDendrogram> trees, const HierarchyParams& params)
      : trees_(trees), params_(params), cache_(trees.size()) {}

  const ElementAffinity& get(std::size_t i) {
    if (!cache_[i]) cache_[i] = affinity(trees_[i].tree, params_);
    return *cache_[i];
  }

private:
  std::span<const NamedDendrogram> trees_;
  HierarchyParams params_;
  std::vector<std::optional<ElementAffinity>> cache_;
};

bool same_elements(const Dendrogram& a, const Dendrogram& b) {
  const auto [only_a, only_b] = element_difference(a.leaf_ids(), b.leaf_ids());
  return only_a.empty() && only_b.empty();
}

void add_pair(SimilaritySample& sample, const NamedDendrogram& a, const NamedDendrogram& b,
              AffinityCache& cache_a, std::size_t ia, AffinityCache& cache_b, std::size_t ib,
              const HierarchyParams& params, Alignment alignment) {
  SimilarityScore score;
  try {
    score = same_elements(a.tree, b.tree)
                ? similarity(cache_a.get(ia), cache_b.get(ib), params.alpha)
                : similarity(a.tree, b.tree, params, alignment);
  } catch (const DataError& e) {
    throw DataError("comparing '" + a.capture_id + "' with '" + b.capture_id + "': " + e.what());
  }
  sample.values.push_back(score.value);
  sample.pair_ids.emplace_back(a.capture_id, b.capture_id);
  sample.aligned.push_back(score.aligned_count());
}

} // namespace

SimilaritySample benign_pairs(std::span<const NamedDendrogram> dendrograms, const HierarchyParams& params,
                              Alignment alignment) {
  if (dendrograms.size() < 2) {
    throw ConfigError("benign-benign comparison needs at least 2 dendrograms, got " +
                      std::to_string(dendrograms.size()));
  }
  params.validate();
  AffinityCache cache(dendrograms, params);
  SimilaritySample sample;
  for (std::size_t i = 0; i < dendrograms.size(); ++i) {
    for (std::size_t j = i + 1; j < dendrograms.size(); ++j) {
      add_pair(sample, dendrograms[i], dendrograms[j], cache, i, cache, j, params, alignment);
    }
  }
  return sample;
}

SimilaritySample attack_vs_benign(std::string attack_kind, std::span<const NamedDendrogram> attack,
                                  std::span<const NamedDendrogram> benign, const HierarchyParams& params,
                                  Alignment alignment) {
  if (attack.empty() || benign.empty()) {
    throw ConfigError("attack-benign comparison for '" + attack_kind + "' needs both sides non-empty");
  }
  params.validate();
  AffinityCache attack_cache(attack, params);
  AffinityCache benign_cache(benign, params);
  SimilaritySample sample;
  sample.attack_kind = std::move(attack_kind);
  for (std::size_t i = 0; i < attack.size(); ++i) {
    for (std::size_t j = 0; j < benign.size(); ++j) {
      add_pair(sample, attack[i], benign[j], attack_cache, i, benign_cache, j, params, alignment);
    }
  }
  return sample;
}

Alternative parse_alternative(std::string_view name) {
  if (name == "two_sided" || name == "two-sided") return Alternative::two_sided;
  if (name == "less") return Alternative::less;
  if (name == "greater") return Alternative::greater;
  throw ConfigError("unknown alternative '" + std::string(name) + "'");
}

std::string_view to_string(Alternative alt) {
  switch (alt) {
    case Alternative::two_sided: return "two_sided";
    case Alternative::less: return "less";
    case Alternative::greater: return "greater";
  }
  return "?";
}

std::string_view to_string(TestMethod method) {
  return method == TestMethod::exact ? "exact" : "normal_approx";
}

double mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  double u = 0.0;
  for (const double xi : x) {
    for (const double yj : y) {
      if (xi > yj) {
        u += 1.0;
      } else if (xi == yj) {
        u += 0.5;
      }
    }
  }
  return u;
}

std::vector<double> exact_u_distribution(std::size_t n1, std::size_t n2) {
  // count[m][u]: arrangements of m x-values among the current n y-values with U = u.
  // Adding one y-value: c_{m,n}(u) = c_{m-1,n}(u - n) + c_{m,n-1}(u).
  const auto max_u = n1 * n2;
  std::vector<std::vector<double>> count(n1 + 1, std::vector<double>(max_u + 1, 0.0));
  for (auto& row : count) row[0] = 1.0;  // n = 0
  for (std::size_t n = 1; n <= n2; ++n) {
    for (std::size_t m = 1; m <= n1; ++m) {
      // c_{m-1,n} is already updated; c_{m,n-1} is the current row m. Walk u downward.
      for (std::size_t u = m * n + 1; u-- > 0;) {
        if (u >= n) count[m][u] += count[m - 1][u - n];
      }
    }
  }
  auto& dist = count[n1];
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  for (auto& v : dist) v /= total;
  return dist;
}

namespace {

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

} // namespace

TestResult mann_whitney(std::span<const double> x, std::span<const double> y, Alternative alternative,
                        double significance) {
  if (x.empty() || y.empty()) throw DataError("Mann-Whitney test needs two non-empty samples");
  if (!(significance > 0.0 && significance < 1.0)) {
    throw ConfigError("significance level must lie in (0, 1)");
  }
  for (const auto s : {x, y}) {
    for (const double v : s) {
      if (!std::isfinite(v)) throw DataError("Mann-Whitney input contains a non-finite value");
    }
  }

  TestResult result;
  result.n1 = x.size();
  result.n2 = y.size();
  result.u_statistic = mann_whitney_u(x, y);
  const double n1 = static_cast<double>(result.n1);
  const double n2 = static_cast<double>(result.n2);
  const double u = result.u_statistic;

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::sort(pooled.begin(), pooled.end());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (t > 1.0) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j;
  }

  if (!ties && result.n1 * result.n2 <= kExactLimit) {
    result.method = TestMethod::exact;
    const auto dist = exact_u_distribution(result.n1, result.n2);
    const auto k = static_cast<std::size_t>(u);
    const double lower = std::accumulate(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k) + 1, 0.0);
    const double upper = std::accumulate(dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end(), 0.0);
    switch (alternative) {
      case Alternative::two_sided: result.p_value = 2.0 * std::min(lower, upper); break;
      case Alternative::less: result.p_value = lower; break;
      case Alternative::greater: result.p_value = upper; break;
    }
  } else {
    result.method = TestMethod::normal_approx;
    const double n = n1 + n2;
    const double mean = n1 * n2 / 2.0;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (!(var > 0.0)) {
      result.p_value = 1.0;
    } else {
      const double sd = std::sqrt(var);
      switch (alternative) {
        case Alternative::two_sided:
          result.p_value = 2.0 * normal_sf(std::max(0.0, std::abs(u - mean) - 0.5) / sd);
          break;
        case Alternative::less: result.p_value = normal_sf((mean - u - 0.5) / sd); break;
        case Alternative::greater: result.p_value = normal_sf((u - mean - 0.5) / sd); break;
      }
    }
  }
  result.p_value = std::clamp(result.p_value, 0.0, 1.0);
  result.significant = result.p_value < significance;
  return result;
}

double scott_bandwidth(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0)) * std::pow(n, -0.2);
}

std::vector<DensityPoint> density_export(std::span<const double> values, Bandwidth bandwidth) {
  if (values.size() < 2) throw DataError("density estimate needs at least 2 values");
  const double h = bandwidth.fixed ? *bandwidth.fixed : scott_bandwidth(values);
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw DataError("density bandwidth must be positive (sample has zero spread?)");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double from = *lo - 3.0 * h;
  const double to = *hi + 3.0 * h;
  const double step = (to - from) / static_cast<double>(kDensityPoints - 1);
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));

  std::vector<DensityPoint> curve(kDensityPoints);
  for (std::size_t k = 0; k < kDensityPoints; ++k) {
    const double x = from + static_cast<double>(k) * step;
    double sum = 0.0;
    for (const double v : values) {
      const double z = (x - v) / h;
      sum += std::exp(-0.5 * z * z);
    }
    curve[k] = {x, sum * norm};
  }
  return curve;
}

nlohmann::json to_json(const TestResult& result) {
  return {{"u", result.u_statistic},
          {"p_value", result.p_value},
          {"n1", result.n1},
          {"n2", result.n2},
          {"method", to_string(result.method)},
          {"significant", result.significant}};
}

} // namespace canclust
