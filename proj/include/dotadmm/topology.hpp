#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dotadmm/errors.hpp"
#include "dotadmm/rng.hpp"

namespace dotadmm {

// Undirected communication graph over n agents, stored with self-loops:
// every agent is its own neighbor. The directed edge list enumerates every
// ordered pair (i, j) with j in N(i), sorted lexicographically; index ell of
// a directed edge is the coordinate of the corresponding auxiliary variable
// z_ij in stacked edge-space vectors. The pair (i, j) reads "receiver i,
// sender j".
struct Topology {
  int n = 0;
  // neighbors[i]: sorted, always contains i itself.
  std::vector<std::vector<int>> neighbors;
  // eta[i] = |N(i)| including the self-loop.
  std::vector<int> eta;
  // xi = sum of eta[i] = number of directed edges.
  int xi = 0;
  // Directed edges in lexicographic (i, j) order.
  std::vector<std::pair<int, int>> edges;
  // offset[i]: index of the first edge (i, *).
  std::vector<int> offset;
  // reverse[ell]: index of (j, i) when edges[ell] = (i, j). Self-loops map
  // to themselves. This realizes the swap permutation P.
  std::vector<int> reverse;

  int index_of(int i, int j) const {
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw IndexOutOfRange("edge index: agent id out of range");
    const auto& nb = neighbors[i];
    const auto it = std::lower_bound(nb.begin(), nb.end(), j);
    if (it == nb.end() || *it != j)
      throw IndexOutOfRange("edge index: " + std::to_string(j) +
                            " is not a neighbor of " + std::to_string(i));
    return offset[i] + static_cast<int>(it - nb.begin());
  }

  std::pair<int, int> pair_of(int ell) const {
    if (ell < 0 || ell >= xi) throw IndexOutOfRange("edge index out of range");
    return edges[ell];
  }

  // Number of undirected non-self edges.
  int undirected_count() const { return (xi - n) / 2; }
};

namespace detail {

inline void check_connected(int n, const std::vector<std::vector<int>>& adj) {
  if (n == 0) throw InvalidParams("topology: n must be positive");
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  if (count != n)
    throw DisconnectedGraph("topology: graph is not connected (" +
                            std::to_string(count) + " of " +
                            std::to_string(n) + " agents reachable)");
}

}  // namespace detail

// Builds the topology from a list of undirected non-self edges. Self-loops
// are added automatically. Throws on out-of-range ids, duplicate pairs
// (including a pair given in both orientations or an explicit self pair),
// and on disconnected graphs.
inline Topology build_topology(int n,
                               const std::vector<std::pair<int, int>>& pairs) {
  if (n <= 0) throw InvalidParams("topology: n must be positive");
  std::vector<std::vector<int>> adj(n);
  std::vector<std::pair<int, int>> seen;
  seen.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw IndexOutOfRange("topology: edge (" + std::to_string(a) + ", " +
                            std::to_string(b) + ") references an unknown agent");
    if (a == b)
      throw DuplicateEdge("topology: explicit self pair (" +
                          std::to_string(a) +
                          "); self-loops are implicit");
    const auto key = std::minmax(a, b);
    if (std::find(seen.begin(), seen.end(),
                  std::make_pair(key.first, key.second)) != seen.end())
      throw DuplicateEdge("topology: duplicate edge (" + std::to_string(a) +
                          ", " + std::to_string(b) + ")");
    seen.emplace_back(key.first, key.second);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  detail::check_connected(n, adj);

  Topology g;
  g.n = n;
  g.neighbors.resize(n);
  g.eta.resize(n);
  g.offset.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& nb = g.neighbors[i];
    nb = adj[i];
    nb.push_back(i);
    std::sort(nb.begin(), nb.end());
    g.eta[i] = static_cast<int>(nb.size());
  }
  g.xi = std::accumulate(g.eta.begin(), g.eta.end(), 0);
  g.edges.reserve(g.xi);
  int off = 0;
  for (int i = 0; i < n; ++i) {
    g.offset[i] = off;
    for (int j : g.neighbors[i]) g.edges.emplace_back(i, j);
    off += g.eta[i];
  }
  g.reverse.resize(g.xi);
  for (int ell = 0; ell < g.xi; ++ell) {
    const auto [i, j] = g.edges[ell];
    g.reverse[ell] = g.index_of(j, i);
  }
  return g;
}

// Samples a connected graph with exactly m undirected non-self edges:
// a uniform random spanning tree (Pruefer decode) plus m - (n-1) distinct
// extra edges drawn uniformly from the remaining pairs. Deterministic for a
// fixed seed.
inline Topology random_connected_graph(int n, int m, std::uint64_t seed) {
  if (n <= 0) throw InvalidParams("topology: n must be positive");
  const long max_edges = static_cast<long>(n) * (n - 1) / 2;
  if (m < n - 1 || m > max_edges)
    throw InfeasibleEdgeCount(
        "topology: cannot build a connected graph on " + std::to_string(n) +
        " agents with " + std::to_string(m) + " edges (feasible range [" +
        std::to_string(n - 1) + ", " + std::to_string(max_edges) + "])");

  RngStream rng(RngStream::derive(seed, 0x746F706FULL));
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(m);
  auto has_pair = [&pairs](int a, int b) {
    const auto key = std::minmax(a, b);
    return std::find(pairs.begin(), pairs.end(),
                     std::make_pair(key.first, key.second)) != pairs.end();
  };
  auto add_pair = [&pairs](int a, int b) {
    const auto key = std::minmax(a, b);
    pairs.emplace_back(key.first, key.second);
  };

  if (n == 1) {
    // Single agent: only the implicit self-loop.
    return build_topology(1, {});
  }
  if (n == 2) {
    add_pair(0, 1);
  } else {
    // Uniform labeled tree from a random Pruefer sequence.
    std::vector<int> pruefer(n - 2);
    for (auto& v : pruefer) v = static_cast<int>(rng.below(n));
    std::vector<int> degree(n, 1);
    for (int v : pruefer) ++degree[v];
    std::vector<char> used(n, 0);
    for (int v : pruefer) {
      int leaf = -1;
      for (int u = 0; u < n; ++u) {
        if (degree[u] == 1 && !used[u]) {
          leaf = u;
          break;
        }
      }
      add_pair(leaf, v);
      used[leaf] = 1;
      --degree[v];
    }
    int u = -1, w = -1;
    for (int v = 0; v < n; ++v) {
      if (degree[v] == 1 && !used[v]) {
        if (u < 0)
          u = v;
        else
          w = v;
      }
    }
    add_pair(u, w);
  }

  while (static_cast<int>(pairs.size()) < m) {
    const int a = static_cast<int>(rng.below(n));
    const int b = static_cast<int>(rng.below(n));
    if (a == b || has_pair(a, b)) continue;
    add_pair(a, b);
  }
  return build_topology(n, pairs);
}

// ---------------------------------------------------------------------------
// Block-structured incidence actions. Vectors in agent space have n blocks of
// size p; vectors in edge space have xi blocks of size p, ordered by edge
// index. None of these materialize a dense matrix.
// ---------------------------------------------------------------------------

// A = Lambda (x) I_p with Lambda = blkdiag{1_eta_i}: copies agent block i to
// every edge (i, *).
inline Eigen::VectorXd apply_A(const Topology& g, int p,
                               const Eigen::VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(g.n) * p)
    throw DimensionMismatch("apply_A: expected an n*p vector");
  Eigen::VectorXd z(static_cast<Eigen::Index>(g.xi) * p);
  for (int ell = 0; ell < g.xi; ++ell)
    z.segment(static_cast<Eigen::Index>(ell) * p, p) =
        x.segment(static_cast<Eigen::Index>(g.edges[ell].first) * p, p);
  return z;
}

// A^T: agent block i accumulates the blocks of all edges (i, *).
inline Eigen::VectorXd apply_At(const Topology& g, int p,
                                const Eigen::VectorXd& z) {
  if (z.size() != static_cast<Eigen::Index>(g.xi) * p)
    throw DimensionMismatch("apply_At: expected a xi*p vector");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.n) * p);
  for (int ell = 0; ell < g.xi; ++ell)
    x.segment(static_cast<Eigen::Index>(g.edges[ell].first) * p, p) +=
        z.segment(static_cast<Eigen::Index>(ell) * p, p);
  return x;
}

// P = Pi (x) I_p: swaps blocks (i, j) <-> (j, i); self-loops stay in place.
inline Eigen::VectorXd apply_P(const Topology& g, int p,
                               const Eigen::VectorXd& z) {
  if (z.size() != static_cast<Eigen::Index>(g.xi) * p)
    throw DimensionMismatch("apply_P: expected a xi*p vector");
  Eigen::VectorXd out(z.size());
  for (int ell = 0; ell < g.xi; ++ell)
    out.segment(static_cast<Eigen::Index>(ell) * p, p) =
        z.segment(static_cast<Eigen::Index>(g.reverse[ell]) * p, p);
  return out;
}

// D = blkdiag{(rho * eta_i)^{-1} I_p} acting on agent space.
inline Eigen::VectorXd apply_D(const Topology& g, int p, double rho,
                               const Eigen::VectorXd& v) {
  if (rho <= 0.0) throw InvalidParams("apply_D: rho must be positive");
  if (v.size() != static_cast<Eigen::Index>(g.n) * p)
    throw DimensionMismatch("apply_D: expected an n*p vector");
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < g.n; ++i)
    out.segment(static_cast<Eigen::Index>(i) * p, p) =
        v.segment(static_cast<Eigen::Index>(i) * p, p) / (rho * g.eta[i]);
  return out;
}

}  // namespace dotadmm
