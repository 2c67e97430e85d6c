#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "bpdep/errors.hpp"
#include "bpdep/hypergraph.hpp"

namespace bpdep {

/// Head indices for tokens 1..n (head[0] is unused and set to -1).
/// A DepTree may be non-projective; functions that produce projective trees
/// return the same type and are tested against is_projective().
struct DepTree {
  std::vector<int32_t> head;

  DepTree() = default;
  explicit DepTree(int n) : head(n + 1, -1) {}
  int n() const { return static_cast<int>(head.size()) - 1; }

  bool operator==(const DepTree&) const = default;
};
using ProjTree = DepTree;

/// True iff every token has a head in [0, n] and following heads never cycles.
inline bool is_valid_tree(const DepTree& t) {
  const int n = t.n();
  if (n < 1) return false;
  for (int m = 1; m <= n; ++m)
    if (t.head[m] < 0 || t.head[m] > n || t.head[m] == m) return false;
  for (int m = 1; m <= n; ++m) {
    int hops = 0, cur = m;
    while (cur != 0) {
      cur = t.head[cur];
      if (++hops > n) return false;
    }
  }
  return true;
}

/// Projectivity = no two arcs cross when drawn above the sentence with the
/// root at position 0.
inline bool is_projective(const DepTree& t) {
  if (!is_valid_tree(t)) return false;
  const int n = t.n();
  for (int m = 1; m <= n; ++m) {
    const int a = std::min<int>(t.head[m], m), b = std::max<int>(t.head[m], m);
    for (int k = m + 1; k <= n; ++k) {
      const int c = std::min<int>(t.head[k], k), d = std::max<int>(t.head[k], k);
      const bool crossing = (a < c && c < b && b < d) || (c < a && a < d && d < b);
      if (crossing) return false;
    }
  }
  return true;
}

/// Per-arc weights and allowed-arc mask for a sentence of n tokens
/// (ROOT = 0; arcs h -> m with h in 0..n, m in 1..n, h != m).
struct EdgeWeightMatrix {
  int n = 0;
  std::vector<double> w;
  std::vector<uint8_t> mask;

  explicit EdgeWeightMatrix(int n_) : n(n_), w((n_ + 1) * (n_ + 1), 0.0), mask((n_ + 1) * (n_ + 1), 0) {}

  double& weight(int h, int m) { return w[h * (n + 1) + m]; }
  double weight(int h, int m) const { return w[h * (n + 1) + m]; }
  bool allowed(int h, int m) const { return mask[h * (n + 1) + m] != 0; }
  void set_allowed(int h, int m, bool v) { mask[h * (n + 1) + m] = v ? 1 : 0; }

  static EdgeWeightMatrix full(int n, double init = 1.0) {
    EdgeWeightMatrix e(n);
    for (int h = 0; h <= n; ++h)
      for (int m = 1; m <= n; ++m)
        if (h != m) {
          e.weight(h, m) = init;
          e.set_allowed(h, m, true);
        }
    return e;
  }
};

/// Parse chart of Eisner (1996) over spans (i, j, direction, complete),
/// realized as a hypergraph whose complete derivations are exactly the
/// projective trees over 1..n allowed by the mask (multiple ROOT children
/// permitted). Each unmasked arc maps to the unique incomplete item whose
/// marginal equals the arc's marginal; all hyperedges into that item carry
/// the arc's weight.
class EisnerChart {
 public:
  EisnerChart(int n, const std::vector<uint8_t>& mask) : n_(n) {
    if (n < 1) throw Error("EisnerChart: n must be >= 1");
    auto allowed = [&](int h, int m) { return mask[h * (n + 1) + m] != 0; };
    for (int m = 1; m <= n; ++m) {
      bool any = false;
      for (int h = 0; h <= n && !any; ++h) any = h != m && allowed(h, m);
      if (!any)
        throw InfeasibleMask("token " + std::to_string(m) + " has no allowed parent");
    }

    Hypergraph::Builder b;
    node_id_.assign((n + 1) * (n + 1) * 4, -1);
    // Axioms: single-token complete spans.
    for (int i = 0; i <= n; ++i) {
      node(i, i, kRight, kComplete) = b.add_node();
      if (i >= 1) node(i, i, kLeft, kComplete) = b.add_node();
    }
    // Arc ids follow (h-major, m-minor) order over unmasked arcs.
    arc_index_.assign((n + 1) * (n + 1), -1);
    for (int h = 0; h <= n; ++h)
      for (int m = 1; m <= n; ++m)
        if (h != m && allowed(h, m)) {
          arc_index_[h * (n + 1) + m] = static_cast<int32_t>(arcs_.size());
          arcs_.push_back({static_cast<int16_t>(h), static_cast<int16_t>(m)});
        }
    arc_node_.assign(arcs_.size(), -1);

    // Nodes by increasing span width, then edges referencing smaller spans;
    // this order is topological by construction. An item is only created once
    // at least one of its candidate edges has both tails alive, so no
    // non-axiom node is ever edgeless (which inside-outside would misread as
    // an axiom). Under heavy masks whole items may die; arcs whose incomplete
    // item dies keep arc_node == -1 and have marginal 0.
    std::vector<std::pair<int32_t, int32_t>> cand;
    auto emit = [&](int32_t& slot, int a) {
      if (cand.empty()) return;
      if (slot < 0) slot = b.add_node();
      for (const auto& [t0, t1] : cand) {
        const int e = b.add_edge(slot, {t0, t1}, 1.0);
        edge_arc_.resize(e + 1, -1);
        edge_arc_[e] = a;
      }
      cand.clear();
    };
    for (int width = 1; width <= n; ++width) {
      for (int i = 0; i + width <= n; ++i) {
        const int j = i + width;
        // Incomplete items: arc i->j (or j->i) plus split k.
        for (int dir = 0; dir < 2; ++dir) {
          const int a = dir == kRight ? arc(i, j) : (i >= 1 ? arc(j, i) : -1);
          if (a < 0) continue;
          for (int k = i; k < j; ++k) {
            const int32_t t0 = node(i, k, kRight, kComplete);
            const int32_t t1 = node(k + 1, j, kLeft, kComplete);
            if (t0 >= 0 && t1 >= 0) cand.emplace_back(t0, t1);
          }
          emit(node(i, j, dir, kIncomplete), a);
          arc_node_[a] = node(i, j, dir, kIncomplete);
        }
        // Complete items.
        for (int k = i + 1; k <= j; ++k) {
          const int32_t t0 = node(i, k, kRight, kIncomplete);
          const int32_t t1 = node(k, j, kRight, kComplete);
          if (t0 >= 0 && t1 >= 0) cand.emplace_back(t0, t1);
        }
        emit(node(i, j, kRight, kComplete), -1);
        if (i >= 1) {
          for (int k = i; k < j; ++k) {
            const int32_t t0 = node(i, k, kLeft, kComplete);
            const int32_t t1 = node(k, j, kLeft, kIncomplete);
            if (t0 >= 0 && t1 >= 0) cand.emplace_back(t0, t1);
          }
          emit(node(i, j, kLeft, kComplete), -1);
        }
      }
    }
    if (node(0, n, kRight, kComplete) < 0)
      throw DegenerateDistribution("mask admits no projective tree");
    b.set_root(node(0, n, kRight, kComplete));
    proto_ = b.build();
    edge_arc_.resize(proto_.num_edges(), -1);
  }

  int n() const { return n_; }
  int num_arcs() const { return static_cast<int>(arcs_.size()); }
  std::pair<int, int> arc_ends(int a) const { return {arcs_[a].h, arcs_[a].m}; }
  int arc(int h, int m) const { return arc_index_[h * (n_ + 1) + m]; }
  int arc_node(int a) const { return arc_node_[a]; }
  int edge_arc(int e) const { return edge_arc_[e]; }
  const Hypergraph& prototype() const { return proto_; }

  /// Hypergraph with each arc-bearing edge weighted by arc_weights[arc].
  Hypergraph weighted(std::span<const double> arc_weights) const {
    std::vector<double> w(proto_.num_edges(), 1.0);
    for (int e = 0; e < proto_.num_edges(); ++e)
      if (edge_arc_[e] >= 0) w[e] = arc_weights[edge_arc_[e]];
    return proto_.reweighted(std::move(w));
  }

  /// Argmax projective tree under additive per-arc scores (may be negative).
  /// Deterministic: candidate hyperedges are scanned in construction order
  /// and replaced only on strict improvement, which prefers the lower split
  /// point (heads within one item are all equal by construction).
  ProjTree viterbi(std::span<const double> arc_scores) const {
    const auto& hg = proto_;
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> best(hg.num_nodes(), kNegInf);
    std::vector<int32_t> back(hg.num_nodes(), -1);
    for (int32_t i : hg.topo_order()) {
      if (hg.is_axiom(i)) {
        best[i] = 0.0;
        continue;
      }
      for (int32_t e : hg.incoming(i)) {
        double v = edge_arc_[e] >= 0 ? arc_scores[edge_arc_[e]] : 0.0;
        for (int32_t t : hg.edge_tails(e)) v += best[t];
        if (v > best[i]) {
          best[i] = v;
          back[i] = e;
        }
      }
    }
    if (best[hg.root()] == kNegInf)
      throw DegenerateDistribution("viterbi: no complete derivation");
    ProjTree tree(n_);
    std::vector<int32_t> stack{static_cast<int32_t>(hg.root())};
    while (!stack.empty()) {
      const int32_t i = stack.back();
      stack.pop_back();
      if (hg.is_axiom(i)) continue;
      const int32_t e = back[i];
      if (edge_arc_[e] >= 0) {
        const auto [h, m] = arc_ends(edge_arc_[e]);
        tree.head[m] = h;
      }
      for (int32_t t : hg.edge_tails(e)) stack.push_back(t);
    }
    return tree;
  }

 private:
  enum { kRight = 0, kLeft = 1, kIncomplete = 0, kComplete = 1 };
  struct Arc {
    int16_t h, m;
  };

  int32_t& node(int i, int j, int dir, int complete) {
    return node_id_[((i * (n_ + 1) + j) * 2 + dir) * 2 + complete];
  }
  int32_t node(int i, int j, int dir, int complete) const {
    return node_id_[((i * (n_ + 1) + j) * 2 + dir) * 2 + complete];
  }

  int n_;
  Hypergraph proto_;
  std::vector<int32_t> node_id_;
  std::vector<Arc> arcs_;
  std::vector<int32_t> arc_index_;
  std::vector<int32_t> arc_node_;
  std::vector<int32_t> edge_arc_;
};

/// Chart plus weighted hypergraph for one EdgeWeightMatrix.
struct ParseHypergraph {
  EisnerChart chart;
  Hypergraph hg;
};

inline ParseHypergraph build_parse_hypergraph(const EdgeWeightMatrix& weights) {
  EisnerChart chart(weights.n, weights.mask);
  std::vector<double> aw(chart.num_arcs());
  for (int a = 0; a < chart.num_arcs(); ++a) {
    const auto [h, m] = chart.arc_ends(a);
    aw[a] = weights.weight(h, m);
  }
  Hypergraph hg = chart.weighted(aw);
  return {std::move(chart), std::move(hg)};
}

struct EdgeMarginals {
  int n = 0;
  std::vector<double> marginal;  // (n+1)*(n+1); 0 for masked arcs
  ScaledReal partition;

  double at(int h, int m) const { return marginal[h * (n + 1) + m]; }
};

inline EdgeMarginals edge_marginals(const EdgeWeightMatrix& weights) {
  ParseHypergraph ph = build_parse_hypergraph(weights);
  InsideOutsideResult io = inside_outside_forward(ph.hg);
  EdgeMarginals out;
  out.n = weights.n;
  out.marginal.assign((weights.n + 1) * (weights.n + 1), 0.0);
  for (int a = 0; a < ph.chart.num_arcs(); ++a) {
    if (ph.chart.arc_node(a) < 0) continue;  // arc unrealizable under the mask
    const auto [h, m] = ph.chart.arc_ends(a);
    out.marginal[h * (weights.n + 1) + m] = io.marginal[ph.chart.arc_node(a)];
  }
  out.partition = io.partition;
  return out;
}

inline ProjTree viterbi_tree(const EdgeWeightMatrix& scores) {
  EisnerChart chart(scores.n, scores.mask);
  std::vector<double> as(chart.num_arcs());
  for (int a = 0; a < chart.num_arcs(); ++a) {
    const auto [h, m] = chart.arc_ends(a);
    as[a] = scores.weight(h, m);
  }
  return chart.viterbi(as);
}

}  // namespace bpdep
