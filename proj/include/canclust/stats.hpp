#pragma once

#include "canclust/clusim.hpp"
#include "canclust/hierarchy.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace canclust {

/// A dendrogram tagged with the capture it came from.
struct NamedDendrogram {
  std::string capture_id;
  Dendrogram tree;
};

/// Similarity values between dendrogram pairs of one comparison group.
struct SimilaritySample {
  /// Empty for the benign-benign group, otherwise the attack kind.
  std::optional<std::string> attack_kind;
  std::vector<double> values;
  std::vector<std::pair<std::string, std::string>> pair_ids;
  /// Number of elements compared for each pair.
  std::vector<std::size_t> aligned;

  std::string group_name() const { return attack_kind ? "attack_benign:" + *attack_kind : "benign_benign"; }
};

/// One value per unordered pair, in (i, j) order with i < j.
SimilaritySample benign_pairs(std::span<const NamedDendrogram> dendrograms, const HierarchyParams& params,
                              Alignment alignment = Alignment::strict);

/// One value per (attack, benign) pair, attack-major.
SimilaritySample attack_vs_benign(std::string attack_kind, std::span<const NamedDendrogram> attack,
                                  std::span<const NamedDendrogram> benign, const HierarchyParams& params,
                                  Alignment alignment = Alignment::strict);

enum class Alternative {
  two_sided,
  less,     // x tends to be smaller than y
  greater,  // x tends to be larger than y
};

Alternative parse_alternative(std::string_view name);
std::string_view to_string(Alternative alt);

enum class TestMethod { exact, normal_approx };
std::string_view to_string(TestMethod method);

struct TestResult {
  double u_statistic = 0.0;  // U of the first sample
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  TestMethod method = TestMethod::exact;
  bool significant = false;
};

inline constexpr double kDefaultSignificance = 0.05;
/// Exact null distribution is used when n1 * n2 is at most this and there are no ties.
inline constexpr std::size_t kExactLimit = 10000;

/// U = sum over pairs of [x > y] + 0.5 [x == y].
double mann_whitney_u(std::span<const double> x, std::span<const double> y);

/// Null distribution of U for sample sizes (n1, n2) without ties:
/// element u is P(U = u), for u = 0 .. n1 * n2.
std::vector<double> exact_u_distribution(std::size_t n1, std::size_t n2);

/// Mann-Whitney U test. The exact null distribution is used for small
/// tie-free samples; otherwise the normal approximation with tie-corrected
/// variance and a 0.5 continuity correction. When every value in both
/// samples is equal the p-value is 1.
TestResult mann_whitney(std::span<const double> x, std::span<const double> y,
                        Alternative alternative = Alternative::two_sided,
                        double significance = kDefaultSignificance);

struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};

/// Kernel bandwidth: Scott's rule (sample std * n^(-1/5)) or a fixed width.
struct Bandwidth {
  std::optional<double> fixed;

  static Bandwidth scott() { return {}; }
  static Bandwidth of(double h) { return {h}; }
};

inline constexpr std::size_t kDensityPoints = 256;

double scott_bandwidth(std::span<const double> values);

/// Gaussian kernel density on 256 evenly spaced points over [min - 3h, max + 3h].
std::vector<DensityPoint> density_export(std::span<const double> values, Bandwidth bandwidth = Bandwidth::scott());

nlohmann::json to_json(const TestResult& result);

} // namespace canclust
