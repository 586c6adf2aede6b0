#pragma once

#include "canclust/correlation.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace canclust {

enum class Linkage { single, complete, average, ward };

inline constexpr Linkage kAllLinkages[] = {Linkage::single, Linkage::complete, Linkage::average,
                                           Linkage::ward};

Linkage parse_linkage(std::string_view name);
std::string_view to_string(Linkage linkage);
/// Comma-separated list, e.g. "ward,complete". Duplicates are rejected.
std::vector<Linkage> parse_linkage_list(std::string_view list);

/// One agglomeration step. Node references follow the usual convention:
/// 0..N-1 are leaves, N+k is the cluster created by merge k.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;

  bool operator==(const Merge&) const = default;
};

/// Clusters of leaf ids. Clusters are ordered by their first leaf index and
/// members by leaf index.
using Partition = std::vector<std::vector<std::string>>;

/// Immutable binary merge tree over N >= 2 labelled leaves.
class Dendrogram {
public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Validates the merge sequence. A merge with size 0 has its size filled in.
  Dendrogram(std::vector<std::string> leaf_ids, std::vector<Merge> merges, Linkage linkage);

  std::size_t leaf_count() const noexcept { return leaf_ids_.size(); }
  std::size_t node_count() const noexcept { return 2 * leaf_ids_.size() - 1; }
  std::size_t root() const noexcept { return node_count() - 1; }
  bool is_leaf(std::size_t node) const noexcept { return node < leaf_count(); }

  const std::vector<std::string>& leaf_ids() const noexcept { return leaf_ids_; }
  const std::vector<Merge>& merges() const noexcept { return merges_; }
  Linkage linkage() const noexcept { return linkage_; }

  std::optional<std::size_t> leaf_index(std::string_view id) const;
  /// Leaf indices under `node`, ascending.
  const std::vector<std::size_t>& members(std::size_t node) const { return members_[node]; }
  std::size_t parent(std::size_t node) const { return parent_[node]; }
  /// Height at which `node` was formed; 0 for leaves.
  double node_height(std::size_t node) const;

  /// Nodes from the root down to `leaf` (root first, the leaf itself last).
  std::vector<std::size_t> root_path(std::size_t leaf) const;

  /// Clusters formed by the merges at height <= `height`, as leaf indices.
  std::vector<std::vector<std::size_t>> cut_indices(double height) const;
  Partition cut_at(double height) const;

  /// Height of the lowest node containing both leaves.
  double cophenetic(std::size_t a, std::size_t b) const;

  /// Induced tree on the given leaves: other leaves are removed and the
  /// internal nodes left with a single child are spliced out. Leaf order
  /// follows this dendrogram.
  Dendrogram restrict_to(std::span<const std::string> keep) const;

  bool operator==(const Dendrogram& other) const {
    return leaf_ids_ == other.leaf_ids_ && merges_ == other.merges_ && linkage_ == other.linkage_;
  }

private:
  std::vector<std::string> leaf_ids_;
  std::vector<Merge> merges_;
  Linkage linkage_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> parent_;
};

/// Agglomerative clustering with Lance-Williams updates.
///
/// Among pairs at the same minimum dissimilarity, the one with the
/// lexicographically smallest (lower, higher) slot index merges first; a
/// merged cluster keeps the slot of its smallest original leaf index. Ward
/// updates are applied to the supplied dissimilarities as they are, and
/// heights are the raw linkage values.
Dendrogram agglomerate(const DissimilarityMatrix& d, Linkage linkage);

/// `{"schema":1,"linkage":..., "leaf_ids":[...], "merges":[[left,right,height],...]}`
nlohmann::json to_json(const Dendrogram& dendrogram);
Dendrogram dendrogram_from_json(const nlohmann::json& doc);

} // namespace canclust
