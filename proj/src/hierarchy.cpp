#include "canclust/hierarchy.hpp"

#include "canclust/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace canclust {

Linkage parse_linkage(std::string_view name) {
  if (name == "single") return Linkage::single;
  if (name == "complete") return Linkage::complete;
  if (name == "average") return Linkage::average;
  if (name == "ward") return Linkage::ward;
  throw ConfigError("unknown linkage '" + std::string(name) + "'");
}

std::string_view to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
    case Linkage::ward: return "ward";
  }
  return "?";
}

std::vector<Linkage> parse_linkage_list(std::string_view list) {
  std::vector<Linkage> out;
  std::size_t begin = 0;
  while (begin <= list.size()) {
    const auto comma = list.find(',', begin);
    const auto item = list.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin);
    if (!item.empty()) {
      const auto l = parse_linkage(item);
      if (std::find(out.begin(), out.end(), l) != out.end()) {
        throw ConfigError("linkage '" + std::string(item) + "' listed twice");
      }
      out.push_back(l);
    }
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  if (out.empty()) throw ConfigError("no linkage given");
  return out;
}

Dendrogram::Dendrogram(std::vector<std::string> leaf_ids, std::vector<Merge> merges, Linkage linkage)
    : leaf_ids_(std::move(leaf_ids)), merges_(std::move(merges)), linkage_(linkage) {
  const auto n = leaf_ids_.size();
  if (n < 2) throw DataError("a dendrogram needs at least 2 leaves");
  {
    std::unordered_set<std::string_view> seen;
    for (const auto& id : leaf_ids_) {
      if (!seen.insert(id).second) throw DataError("duplicate leaf id '" + id + "'");
    }
  }
  if (merges_.size() != n - 1) {
    throw DataError("dendrogram over " + std::to_string(n) + " leaves needs " + std::to_string(n - 1) +
                    " merges, got " + std::to_string(merges_.size()));
  }
  members_.resize(2 * n - 1);
  parent_.assign(2 * n - 1, npos);
  for (std::size_t i = 0; i < n; ++i) members_[i] = {i};
  for (std::size_t k = 0; k < merges_.size(); ++k) {
    auto& m = merges_[k];
    const auto node = n + k;
    for (const auto child : {m.left, m.right}) {
      if (child >= node) {
        throw DataError("merge " + std::to_string(k) + " references node " + std::to_string(child) +
                        " before it exists");
      }
      if (parent_[child] != npos) {
        throw DataError("node " + std::to_string(child) + " is merged more than once");
      }
      parent_[child] = node;
    }
    if (m.left == m.right) throw DataError("merge " + std::to_string(k) + " joins a node with itself");
    if (!std::isfinite(m.height) || m.height < 0.0) {
      throw DataError("merge " + std::to_string(k) + " has invalid height");
    }
    auto& mem = members_[node];
    std::merge(members_[m.left].begin(), members_[m.left].end(), members_[m.right].begin(),
               members_[m.right].end(), std::back_inserter(mem));
    if (m.size == 0) m.size = mem.size();
    if (m.size != mem.size()) {
      throw DataError("merge " + std::to_string(k) + " records size " + std::to_string(m.size) +
                      " but joins " + std::to_string(mem.size()) + " leaves");
    }
  }
}

std::optional<std::size_t> Dendrogram::leaf_index(std::string_view id) const {
  const auto it = std::find(leaf_ids_.begin(), leaf_ids_.end(), id);
  if (it == leaf_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - leaf_ids_.begin());
}

double Dendrogram::node_height(std::size_t node) const {
  return is_leaf(node) ? 0.0 : merges_[node - leaf_count()].height;
}

std::vector<std::size_t> Dendrogram::root_path(std::size_t leaf) const {
  std::vector<std::size_t> path;
  for (auto node = leaf; node != npos; node = parent_[node]) path.push_back(node);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<std::vector<std::size_t>> Dendrogram::cut_indices(double height) const {
  const auto n = leaf_count();
  std::vector<std::size_t> rep(n);
  std::iota(rep.begin(), rep.end(), 0);
  auto find = [&](std::size_t x) {
    while (rep[x] != x) x = rep[x] = rep[rep[x]];
    return x;
  };
  for (const auto& m : merges_) {
    if (m.height > height) continue;
    const auto a = find(members_[m.left].front());
    const auto b = find(members_[m.right].front());
    if (a != b) rep[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> slot(n, npos);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    if (slot[r] == npos) {
      slot[r] = clusters.size();
      clusters.emplace_back();
    }
    clusters[slot[r]].push_back(i);
  }
  return clusters;
}

Partition Dendrogram::cut_at(double height) const {
  Partition out;
  for (const auto& cluster : cut_indices(height)) {
    auto& named = out.emplace_back();
    for (const auto i : cluster) named.push_back(leaf_ids_[i]);
  }
  return out;
}

double Dendrogram::cophenetic(std::size_t a, std::size_t b) const {
  if (a == b) return 0.0;
  auto node = parent_[a];
  while (!std::binary_search(members_[node].begin(), members_[node].end(), b)) node = parent_[node];
  return node_height(node);
}

Dendrogram Dendrogram::restrict_to(std::span<const std::string> keep) const {
  std::unordered_set<std::string_view> wanted(keep.begin(), keep.end());
  const auto n = leaf_count();
  std::vector<std::size_t> rep(node_count(), npos);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (wanted.erase(leaf_ids_[i]) > 0) {
      rep[i] = ids.size();
      ids.push_back(leaf_ids_[i]);
    }
  }
  if (!wanted.empty()) {
    throw DataError("cannot restrict dendrogram to unknown leaf '" + std::string(*wanted.begin()) + "'");
  }
  const auto kept = ids.size();
  std::vector<Merge> merges;
  for (std::size_t k = 0; k < merges_.size(); ++k) {
    const auto& m = merges_[k];
    const auto l = rep[m.left];
    const auto r = rep[m.right];
    if (l != npos && r != npos) {
      rep[n + k] = kept + merges.size();
      merges.push_back(Merge{l, r, m.height, 0});
    } else {
      rep[n + k] = l != npos ? l : r;
    }
  }
  return Dendrogram(std::move(ids), std::move(merges), linkage_);
}

Dendrogram agglomerate(const DissimilarityMatrix& dm, Linkage linkage) {
  const auto n = dm.signal_ids.size();
  if (n < 2) throw DataError("clustering needs at least 2 elements, got " + std::to_string(n));
  if (dm.d.rows() != n || dm.d.cols() != n) throw DataError("dissimilarity matrix shape does not match ids");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = dm.d(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw DataError("invalid dissimilarity between '" + dm.signal_ids[i] + "' and '" + dm.signal_ids[j] +
                        "'");
      }
    }
  }

  Matrix d = dm.d;
  std::vector<bool> active(n, true);
  std::vector<std::size_t> node(n);
  std::vector<double> size(n, 1.0);
  std::iota(node.begin(), node.end(), 0);
  std::vector<Merge> merges;
  merges.reserve(n - 1);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = 0;
    std::size_t bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }

    const double ni = size[bi];
    const double nj = size[bj];
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double dik = d(bi, k);
      const double djk = d(bj, k);
      double updated = 0.0;
      switch (linkage) {
        case Linkage::single: updated = std::min(dik, djk); break;
        case Linkage::complete: updated = std::max(dik, djk); break;
        case Linkage::average:
          updated = std::max((ni * dik + nj * djk) / (ni + nj), std::min(dik, djk));
          break;
        case Linkage::ward: {
          const double nk = size[k];
          updated = ((ni + nk) * dik + (nj + nk) * djk - nk * best) / (ni + nj + nk);
          updated = std::max(updated, best);
          break;
        }
      }
      d(bi, k) = updated;
      d(k, bi) = updated;
    }

    merges.push_back(Merge{node[bi], node[bj], best, static_cast<std::size_t>(ni + nj)});
    node[bi] = n + step;
    size[bi] = ni + nj;
    active[bj] = false;
  }
  return Dendrogram(dm.signal_ids, std::move(merges), linkage);
}

nlohmann::json to_json(const Dendrogram& dendrogram) {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : dendrogram.merges()) merges.push_back({m.left, m.right, m.height});
  return {{"schema", 1},
          {"linkage", to_string(dendrogram.linkage())},
          {"leaf_ids", dendrogram.leaf_ids()},
          {"merges", std::move(merges)}};
}

Dendrogram dendrogram_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("schema", 0) != 1) throw DataError("unsupported dendrogram schema");
    std::vector<Merge> merges;
    for (const auto& m : doc.at("merges")) {
      if (!m.is_array() || m.size() != 3) throw DataError("merge entries must be [left, right, height]");
      merges.push_back(Merge{m[0].get<std::size_t>(), m[1].get<std::size_t>(), m[2].get<double>(), 0});
    }
    return Dendrogram(doc.at("leaf_ids").get<std::vector<std::string>>(), std::move(merges),
                      parse_linkage(doc.at("linkage").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dendrogram JSON: ") + e.what());
  }
}

} // namespace canclust
