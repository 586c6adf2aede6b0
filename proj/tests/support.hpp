#pragma once
// Independent oracles and generators shared by the unit and acceptance tests.

#include "canclust/clusim.hpp"
#include "canclust/correlation.hpp"
#include "canclust/hierarchy.hpp"
#include "canclust/matrix.hpp"
#include "canclust/rng.hpp"
#include "canclust/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace canclust::testing {

inline std::vector<std::string> leaf_names(std::size_t n, const std::string& prefix = "s") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Random binary tree: repeatedly joins two random active clusters.
inline Dendrogram random_dendrogram(Rng& rng, std::size_t n, std::vector<std::string> ids = {}) {
  if (ids.empty()) ids = leaf_names(n);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});
  std::vector<Merge> merges;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(active.size()));
    auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(active.size() - 1));
    if (j >= i) ++j;
    merges.push_back({active[i], active[j], static_cast<double>(k + 1), 0});
    const auto hi = std::max(i, j), lo = std::min(i, j);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(hi));
    active[lo] = n + k;
  }
  return Dendrogram(std::move(ids), std::move(merges), Linkage::average);
}

/// Symmetric matrix with zero diagonal and distinct off-diagonal entries in (0, 1).
inline DissimilarityMatrix random_dissimilarity(Rng& rng, std::size_t n) {
  DissimilarityMatrix d{leaf_names(n), Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d.d(i, j) = d.d(j, i) = 0.01 + 0.98 * rng.uniform();
  }
  return d;
}

/// Kruskal: the sorted weights of the edges that join two components.
inline std::vector<double> kruskal_weights(const Matrix& d) {
  const auto n = d.rows();
  struct Edge {
    double w;
    std::size_t a, b;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({d(i, j), i, j});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<double> out;
  for (const auto& e : edges) {
    const auto ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    parent[ra] = rb;
    out.push_back(e.w);
  }
  return out;
}

/// Rows p_i of p (I - alpha W) = (1 - alpha) e_i, by Gauss-Jordan elimination.
inline Matrix linear_solve_affinity(const Matrix& w, double alpha) {
  const auto n = w.rows();
  Matrix a(n, 2 * n);
  // (I - alpha W)^T X = (1 - alpha) I; column i of X is p_i.
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) a(r, c) = (r == c ? 1.0 : 0.0) - alpha * w(c, r);
    a(r, n + r) = 1.0 - alpha;
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
    }
    for (std::size_t c = 0; c < 2 * n; ++c) std::swap(a(col, c), a(pivot, c));
    const double inv = 1.0 / a(col, col);
    for (std::size_t c = 0; c < 2 * n; ++c) a(col, c) *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a(r, col) == 0.0) continue;
      const double f = a(r, col);
      for (std::size_t c = 0; c < 2 * n; ++c) a(r, c) -= f * a(col, c);
    }
  }
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) p(i, j) = a(j, n + i);
  }
  return p;
}

struct BruteForceMw {
  double p_two_sided = 1.0;
  double p_less = 1.0;
  double p_greater = 1.0;
};

/// Exact tail probabilities of U by listing every way to label the pooled sample.
inline BruteForceMw brute_force_mann_whitney(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::vector<bool> pick(pooled.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(x.size()), true);
  auto u_of = [](const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0.0;
    for (double ai : a) {
      for (double bj : b) u += ai > bj ? 1.0 : (ai == bj ? 0.5 : 0.0);
    }
    return u;
  };
  const double u_obs = u_of(x, y);
  double total = 0.0, le = 0.0, ge = 0.0;
  do {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < pooled.size(); ++i) (pick[i] ? a : b).push_back(pooled[i]);
    const double u = u_of(a, b);
    total += 1.0;
    le += u <= u_obs;
    ge += u >= u_obs;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return {std::min(1.0, 2.0 * std::min(le, ge) / total), le / total, ge / total};
}

/// Distinct values, shuffled into two samples of the given sizes.
inline std::pair<std::vector<double>, std::vector<double>> tie_free_samples(Rng& rng, std::size_t n1, std::size_t n2,
                                                                           double shift = 0.0) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n1; ++i) x.push_back(rng.normal() + shift);
  for (std::size_t i = 0; i < n2; ++i) y.push_back(rng.normal());
  return {x, y};
}

} // namespace canclust::testing
