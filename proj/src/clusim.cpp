#include "canclust/clusim.hpp"

#include "canclust/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace canclust {

void HierarchyParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (!std::isfinite(r)) throw ConfigError("r must be finite");
}

namespace {

std::vector<LevelWeight> path_weights(const Dendrogram& dendrogram, std::size_t leaf, double r) {
  const auto path = dendrogram.root_path(leaf);
  const double hops = static_cast<double>(path.size() - 1);
  std::vector<LevelWeight> out(path.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < path.size(); ++k) {
    out[k].node = path[k];
    out[k].depth = static_cast<double>(k) / hops;
    top = std::max(top, r * out[k].depth);
  }
  double total = 0.0;
  for (auto& lw : out) {
    lw.weight = std::exp(r * lw.depth - top);
    total += lw.weight;
  }
  for (auto& lw : out) lw.weight /= total;
  return out;
}

} // namespace

std::vector<LevelWeight> level_weights(const Dendrogram& dendrogram, std::string_view element, double r) {
  const auto leaf = dendrogram.leaf_index(element);
  if (!leaf) throw DataError("element '" + std::string(element) + "' is not a leaf of the dendrogram");
  return path_weights(dendrogram, *leaf, r);
}

Matrix transition_matrix(const Dendrogram& dendrogram, double r) {
  const auto n = dendrogram.leaf_count();
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& lw : path_weights(dendrogram, i, r)) {
      const auto& members = dendrogram.members(lw.node);
      const double share = lw.weight / static_cast<double>(members.size());
      for (const auto j : members) w(i, j) += share;
    }
  }
  return w;
}

ElementAffinity affinity(const Dendrogram& dendrogram, const HierarchyParams& params,
                         const PowerIteration& solver) {
  params.validate();
  const auto n = dendrogram.leaf_count();
  std::vector<std::vector<LevelWeight>> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = path_weights(dendrogram, i, params.r);
  std::vector<double> inv_size(dendrogram.node_count());
  for (std::size_t c = 0; c < inv_size.size(); ++c) {
    inv_size[c] = 1.0 / static_cast<double>(dendrogram.members(c).size());
  }

  ElementAffinity out{dendrogram.leaf_ids(), Matrix(n, n)};
  std::vector<double> p(n);
  std::vector<double> next(n);
  std::vector<double> mass(dendrogram.node_count());
  for (std::size_t focus = 0; focus < n; ++focus) {
    std::fill(p.begin(), p.end(), 0.0);
    p[focus] = 1.0;
    double residual = std::numeric_limits<double>::infinity();
    std::size_t iter = 0;
    while (residual >= solver.tolerance) {
      if (iter++ == solver.max_iterations) {
        throw NumericError("personalized PageRank for '" + dendrogram.leaf_ids()[focus] +
                               "' did not converge in " + std::to_string(solver.max_iterations) + " iterations",
                           residual);
      }
      // next = (1 - alpha) e_focus + alpha * p W, where W factors through the clusters.
      std::fill(mass.begin(), mass.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (p[i] == 0.0) continue;
        for (const auto& lw : weights[i]) mass[lw.node] += p[i] * lw.weight;
      }
      residual = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double inflow = 0.0;
        for (const auto& lw : weights[j]) inflow += mass[lw.node] * inv_size[lw.node];
        next[j] = params.alpha * inflow + (j == focus ? 1.0 - params.alpha : 0.0);
        residual += std::abs(next[j] - p[j]);
      }
      std::swap(p, next);
    }
    std::copy(p.begin(), p.end(), out.p.row(focus).begin());
  }
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> element_difference(
    std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::string> sa(a.begin(), a.end());
  std::vector<std::string> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out.first));
  std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(), std::back_inserter(out.second));
  return out;
}

SimilarityScore similarity(const ElementAffinity& a, const ElementAffinity& b, double alpha) {
  const auto n = a.element_ids.size();
  const auto [only_a, only_b] = element_difference(a.element_ids, b.element_ids);
  if (!only_a.empty() || !only_b.empty() || b.element_ids.size() != n) {
    throw DataError("affinities cover different element sets");
  }
  std::unordered_map<std::string_view, std::size_t> b_index;
  for (std::size_t i = 0; i < n; ++i) b_index.emplace(b.element_ids[i], i);
  std::vector<std::size_t> to_b(n);
  for (std::size_t i = 0; i < n; ++i) to_b[i] = b_index.at(a.element_ids[i]);

  SimilarityScore score;
  score.per_element.reserve(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pa = a.p.row(i);
    const auto pb = b.p.row(to_b[i]);
    double l1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) l1 += std::abs(pa[j] - pb[to_b[j]]);
    const double s = 1.0 - l1 / (2.0 * alpha);
    if (s < -1e-9 || s > 1.0 + 1e-9) {
      throw std::logic_error("element similarity " + std::to_string(s) + " outside [0, 1] for '" +
                             a.element_ids[i] + "'");
    }
    const double clamped = std::clamp(s, 0.0, 1.0);
    score.per_element.emplace_back(a.element_ids[i], clamped);
    total += clamped;
  }
  score.value = total / static_cast<double>(n);
  return score;
}

SimilarityScore similarity(const Dendrogram& a, const Dendrogram& b, const HierarchyParams& params,
                           Alignment alignment) {
  params.validate();
  auto [only_a, only_b] = element_difference(a.leaf_ids(), b.leaf_ids());
  if (only_a.empty() && only_b.empty()) {
    return similarity(affinity(a, params), affinity(b, params), params.alpha);
  }
  if (alignment == Alignment::strict) {
    std::string msg = "element sets differ;";
    if (!only_a.empty()) msg += " only in first:";
    for (const auto& id : only_a) msg += " " + id;
    if (!only_b.empty()) msg += " only in second:";
    for (const auto& id : only_b) msg += " " + id;
    throw DataError(msg);
  }
  std::vector<std::string> common;
  for (const auto& id : a.leaf_ids()) {
    if (b.leaf_index(id)) common.push_back(id);
  }
  if (common.size() < 2) {
    throw DataError("fewer than 2 common elements (" + std::to_string(common.size()) + ")");
  }
  auto score = similarity(affinity(a.restrict_to(common), params), affinity(b.restrict_to(common), params),
                          params.alpha);
  score.excluded = std::move(only_a);
  score.excluded.insert(score.excluded.end(), only_b.begin(), only_b.end());
  std::sort(score.excluded.begin(), score.excluded.end());
  return score;
}

} // namespace canclust
