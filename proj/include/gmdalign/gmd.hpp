/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmdalign/corpus.hpp"
#include "gmdalign/errors.hpp"
#include "gmdalign/metric.hpp"
#include "gmdalign/weighting.hpp"

namespace gmdalign {

struct Flow {
  int src = 0;
  int tgt = 0;
  double mass = 0.0;
  double unit_dist = 0.0;
};

struct FlowTrace {
  std::vector<Flow> moves;
  double total_cost = 0.0;
};

struct GmdResult {
  double distance = 0.0;
  FlowTrace trace;
};

namespace detail {

inline constexpr double kMassTolerance = 1e-6;
inline constexpr double kResidualTolerance = 1e-9;

struct PairEntry {
  double dist;
  int i, j;
};

// Tie order on equal distances uses the canonical (min-id, max-id) key so a
// swapped-argument call processes node-sharing pairs in mirror order.
inline bool pair_entry_less(const PairEntry& a, const PairEntry& b) {
  if (a.dist != b.dist) return a.dist < b.dist;
  const int amin = std::min(a.i, a.j), amax = std::max(a.i, a.j);
  const int bmin = std::min(b.i, b.j), bmax = std::max(b.i, b.j);
  if (amin != bmin) return amin < bmin;
  if (amax != bmax) return amax < bmax;
  return a.i < b.i;
}

// Order-canonical cost accumulation: the same move multiset always sums in
// the same sequence, which makes gmd(a,b) == gmd(b,a) bit-exact.
inline double canonical_cost(std::vector<Flow> moves) {
  std::sort(moves.begin(), moves.end(), [](const Flow& a, const Flow& b) {
    if (a.unit_dist != b.unit_dist) return a.unit_dist < b.unit_dist;
    const int amin = std::min(a.src, a.tgt), amax = std::max(a.src, a.tgt);
    const int bmin = std::min(b.src, b.tgt), bmax = std::max(b.src, b.tgt);
    if (amin != bmin) return amin < bmin;
    if (amax != bmax) return amax < bmax;
    return a.mass < b.mass;
  });
  double cost = 0.0;
  for (const auto& m : moves) cost += m.unit_dist * m.mass;
  return cost;
}

}  // namespace detail

// Greedy transport: move mass along the cheapest sentence pairs first.
// Columns of `xa`/`xb` are the sentence vectors; `wa`/`wb` their masses.
inline GmdResult greedy_movers_distance(const Eigen::VectorXd& wa,
                                        const Eigen::MatrixXd& xa,
                                        const Eigen::VectorXd& wb,
                                        const Eigen::MatrixXd& xb,
                                        const MetricKind& metric) {
  const int n = static_cast<int>(wa.size());
  const int m = static_cast<int>(wb.size());
  if (xa.cols() != n || xb.cols() != m)
    throw DimensionMismatchError("weight count does not match sentence count");
  if (xa.rows() != xb.rows())
    throw DimensionMismatchError("embedding dims differ: " +
                                 std::to_string(xa.rows()) + " vs " +
                                 std::to_string(xb.rows()));
  const double sa = wa.sum();
  const double sb = wb.sum();
  if (std::abs(sa - sb) > detail::kMassTolerance)
    throw MassMismatchError("document masses differ: " + std::to_string(sa) +
                            " vs " + std::to_string(sb));

  std::vector<detail::PairEntry> entries;
  entries.reserve(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = xa.col(i);
    for (int j = 0; j < m; ++j) {
      const Eigen::VectorXd xj = xb.col(j);
      entries.push_back({distance(metric, xi, xj), i, j});
    }
  }
  std::sort(entries.begin(), entries.end(), detail::pair_entry_less);

  Eigen::VectorXd ra = wa;
  Eigen::VectorXd rb = wb;
  std::vector<Flow> moves;
  std::size_t k = 0;
  while (k < entries.size()) {
    // Process one run of equal distances; checking exhaustion only at run
    // boundaries keeps the processed pair set identical under argument swap.
    std::size_t end = k;
    while (end < entries.size() && entries[end].dist == entries[k].dist) ++end;
    for (; k < end; ++k) {
      const auto& e = entries[k];
      const double f = std::min(ra[e.i], rb[e.j]);
      if (f <= 0.0) continue;
      moves.push_back({e.i, e.j, f, e.dist});
      ra[e.i] -= f;
      rb[e.j] -= f;
    }
    if (ra.sum() <= detail::kResidualTolerance ||
        rb.sum() <= detail::kResidualTolerance)
      break;
  }

  GmdResult result;
  result.trace.moves = std::move(moves);
  result.trace.total_cost = detail::canonical_cost(result.trace.moves);
  result.distance = result.trace.total_cost;
  return result;
}

namespace detail {

inline Eigen::MatrixXd gather_columns(const Document& doc, const EmbeddingMatrix& emb) {
  Eigen::MatrixXd x(emb.dim(), static_cast<Eigen::Index>(doc.sentences.size()));
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    x.col(c) = emb.row_d(static_cast<std::size_t>(doc.sentences[c].emb_row));
  return x;
}

}  // namespace detail

inline GmdResult greedy_movers_distance(const WeightedDocument& a,
                                        const EmbeddingMatrix& emb_a,
                                        const WeightedDocument& b,
                                        const EmbeddingMatrix& emb_b,
                                        const MetricKind& metric) {
  const Eigen::VectorXd wa =
      Eigen::Map<const Eigen::VectorXd>(a.weights.data(), a.weights.size());
  const Eigen::VectorXd wb =
      Eigen::Map<const Eigen::VectorXd>(b.weights.data(), b.weights.size());
  return greedy_movers_distance(wa, detail::gather_columns(*a.doc, emb_a), wb,
                                detail::gather_columns(*b.doc, emb_b), metric);
}

// ---- exact EMD oracle ----------------------------------------------------------

// Optimal transport cost by successive shortest-path min-cost flow. Each
// augmentation saturates a supply or demand node, so at most n+m rounds run.
// Desk-scale only; the greedy path above is the production route.
inline double exact_emd(const Eigen::VectorXd& wa, const Eigen::VectorXd& wb,
                        const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(wa.size());
  const int m = static_cast<int>(wb.size());
  if (cost.rows() != n || cost.cols() != m)
    throw DimensionMismatchError("cost matrix must be " + std::to_string(n) +
                                 "x" + std::to_string(m));
  if (static_cast<std::int64_t>(n) * m > 64)
    throw TooLargeError("exact EMD oracle is limited to 64 cells, got " +
                        std::to_string(static_cast<std::int64_t>(n) * m));
  if (std::abs(wa.sum() - wb.sum()) > detail::kMassTolerance)
    throw MassMismatchError("masses differ: " + std::to_string(wa.sum()) +
                            " vs " + std::to_string(wb.sum()));

  struct Arc {
    int to;
    double cap;
    double cost;
    int rev;
  };
  const int source = 0, sink = n + m + 1, num_nodes = n + m + 2;
  std::vector<std::vector<Arc>> graph(num_nodes);
  auto add_arc = [&](int u, int v, double cap, double c) {
    graph[u].push_back({v, cap, c, static_cast<int>(graph[v].size())});
    graph[v].push_back({u, 0.0, -c, static_cast<int>(graph[u].size()) - 1});
  };
  for (int i = 0; i < n; ++i) add_arc(source, 1 + i, wa[i], 0.0);
  for (int j = 0; j < m; ++j) add_arc(1 + n + j, sink, wb[j], 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      add_arc(1 + i, 1 + n + j, std::numeric_limits<double>::infinity(),
              cost(i, j));

  constexpr double kCapEps = 1e-15;
  double total = 0.0;
  while (true) {
    // Bellman-Ford; residual arcs carry negative costs.
    std::vector<double> dist(num_nodes, std::numeric_limits<double>::infinity());
    std::vector<int> prev_node(num_nodes, -1), prev_arc(num_nodes, -1);
    dist[source] = 0.0;
    for (int round = 0; round < num_nodes; ++round) {
      bool changed = false;
      for (int u = 0; u < num_nodes; ++u) {
        if (!std::isfinite(dist[u])) continue;
        for (int a = 0; a < static_cast<int>(graph[u].size()); ++a) {
          const Arc& arc = graph[u][a];
          if (arc.cap <= kCapEps) continue;
          if (dist[u] + arc.cost < dist[arc.to] - 1e-15) {
            dist[arc.to] = dist[u] + arc.cost;
            prev_node[arc.to] = u;
            prev_arc[arc.to] = a;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (!std::isfinite(dist[sink])) break;

    double bottleneck = std::numeric_limits<double>::infinity();
    for (int v = sink; v != source; v = prev_node[v])
      bottleneck = std::min(bottleneck, graph[prev_node[v]][prev_arc[v]].cap);
    if (bottleneck <= kCapEps) break;
    for (int v = sink; v != source; v = prev_node[v]) {
      Arc& arc = graph[prev_node[v]][prev_arc[v]];
      arc.cap -= bottleneck;
      graph[arc.to][arc.rev].cap += bottleneck;
    }
    total += bottleneck * dist[sink];
  }
  return total;
}

inline double exact_emd(const WeightedDocument& a, const WeightedDocument& b,
                        const Eigen::MatrixXd& cost) {
  const Eigen::VectorXd wa =
      Eigen::Map<const Eigen::VectorXd>(a.weights.data(), a.weights.size());
  const Eigen::VectorXd wb =
      Eigen::Map<const Eigen::VectorXd>(b.weights.data(), b.weights.size());
  return exact_emd(wa, wb, cost);
}

}  // namespace gmdalign
