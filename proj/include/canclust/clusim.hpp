#pragma once

#include "canclust/hierarchy.hpp"
#include "canclust/matrix.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace canclust {

/// Parameters of the hierarchical element-centric comparison.
///
/// `r` scales how membership weight is spread over the levels of the tree:
/// negative values favour clusters near the root, positive values favour
/// clusters near the leaves. `alpha` is the probability that the diffusion
/// continues rather than restarting at the focal element.
struct HierarchyParams {
  double r = -5.0;
  double alpha = 0.9;

  /// Throws ConfigError unless 0 < alpha < 1 and r is finite.
  void validate() const;
};

/// Weight of one ancestor cluster of an element.
struct LevelWeight {
  std::size_t node = 0;
  double depth = 0.0;   // 0 at the root, 1 at the element's own leaf
  double weight = 0.0;  // weights over one element's ancestors sum to 1
};

/// Softmax of r * depth over the clusters on `element`'s root-to-leaf path
/// (root first). Depth is the hop count from the root divided by the path's
/// hop length.
std::vector<LevelWeight> level_weights(const Dendrogram& dendrogram, std::string_view element, double r);

/// Element-to-element transition matrix of the projected bipartite graph:
/// W[i][j] = sum over ancestors C of i containing j of w(i, C) / |C|.
/// Rows sum to 1 and include self loops.
Matrix transition_matrix(const Dendrogram& dendrogram, double r);

/// Row i is the personalized PageRank vector of element i.
struct ElementAffinity {
  std::vector<std::string> element_ids;
  Matrix p;
};

struct PowerIteration {
  double tolerance = 1e-12;  // l1 change between successive iterates
  std::size_t max_iterations = 10000;
};

/// Stationary distributions of p = (1 - alpha) e_i + alpha p W for every
/// element i, by power iteration. Throws NumericError if an element does not
/// converge within the iteration cap.
ElementAffinity affinity(const Dendrogram& dendrogram, const HierarchyParams& params,
                         const PowerIteration& solver = {});

enum class Alignment {
  strict,     // element sets must match exactly
  intersect,  // compare on the common elements only
};

struct SimilarityScore {
  double value = 0.0;
  std::vector<std::pair<std::string, double>> per_element;
  /// Elements of either side left out by Alignment::intersect.
  std::vector<std::string> excluded;

  std::size_t aligned_count() const noexcept { return per_element.size(); }
};

/// Mean over elements of 1 - |p_A(i) - p_B(i)|_1 / (2 alpha), each clamped to [0, 1].
SimilarityScore similarity(const Dendrogram& a, const Dendrogram& b, const HierarchyParams& params,
                           Alignment alignment = Alignment::strict);

/// Scores two precomputed affinities over the same element set (any order).
SimilarityScore similarity(const ElementAffinity& a, const ElementAffinity& b, double alpha);

/// Elements only in `a` and only in `b`, each sorted.
std::pair<std::vector<std::string>, std::vector<std::string>> element_difference(
    std::span<const std::string> a, std::span<const std::string> b);

} // namespace canclust
