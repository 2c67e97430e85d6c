#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "bpdep/errors.hpp"
#include "bpdep/scaled.hpp"

namespace bpdep {

/// Weighted acyclic B-hypergraph. Hyperedges combine an ordered list of tail
/// nodes into a head node; a complete derivation is a tree of hyperedges
/// expanding the root down to axiom nodes (nodes with no incoming edges).
/// The structure (nodes, edges, adjacency, topological order) is immutable
/// and shared; only the weight vector is per-instance, so reweighting for a
/// new inference call is cheap.
class Hypergraph {
 public:
  class Builder;

  Hypergraph() = default;  // empty; assign from Builder::build() before use

  int num_nodes() const { return s_->num_nodes; }
  int num_edges() const { return static_cast<int>(s_->edge_head.size()); }
  int root() const { return s_->root; }

  int edge_head(int e) const { return s_->edge_head[e]; }
  std::span<const int32_t> edge_tails(int e) const {
    return std::span<const int32_t>(s_->tail_pool).subspan(
        s_->edge_tail_off[e], s_->edge_tail_off[e + 1] - s_->edge_tail_off[e]);
  }
  double weight(int e) const { return weights_[e]; }
  std::span<const double> weights() const { return weights_; }

  /// Edges whose head is node i.
  std::span<const int32_t> incoming(int i) const {
    return std::span<const int32_t>(s_->in_pool)
        .subspan(s_->in_off[i], s_->in_off[i + 1] - s_->in_off[i]);
  }
  /// Edges with node i somewhere in the tail.
  std::span<const int32_t> outgoing(int i) const {
    return std::span<const int32_t>(s_->out_pool)
        .subspan(s_->out_off[i], s_->out_off[i + 1] - s_->out_off[i]);
  }
  bool is_axiom(int i) const { return s_->in_off[i] == s_->in_off[i + 1]; }

  /// Node order with every tail before its head.
  std::span<const int32_t> topo_order() const { return s_->topo; }

  /// Same structure, new weights (one per edge).
  Hypergraph reweighted(std::vector<double> w) const {
    if (static_cast<int>(w.size()) != num_edges())
      throw ShapeMismatch("reweighted: expected " + std::to_string(num_edges()) +
                          " weights, got " + std::to_string(w.size()));
    Hypergraph h;
    h.s_ = s_;
    h.weights_ = std::move(w);
    return h;
  }

 private:
  struct Structure {
    int num_nodes = 0;
    int root = -1;
    std::vector<int32_t> edge_head;
    std::vector<int32_t> edge_tail_off;  // size edges+1
    std::vector<int32_t> tail_pool;
    std::vector<int32_t> in_off, in_pool;    // CSR incoming edge ids
    std::vector<int32_t> out_off, out_pool;  // CSR outgoing edge ids
    std::vector<int32_t> topo;
  };

  std::shared_ptr<const Structure> s_;
  std::vector<double> weights_;

  friend class Builder;

 public:
  class Builder {
   public:
    int add_node() { return num_nodes_++; }

    int add_edge(int head, std::span<const int32_t> tails, double w) {
      heads_.push_back(head);
      tail_off_.push_back(static_cast<int32_t>(pool_.size()));
      pool_.insert(pool_.end(), tails.begin(), tails.end());
      weights_.push_back(w);
      return static_cast<int>(heads_.size()) - 1;
    }
    int add_edge(int head, std::initializer_list<int32_t> tails, double w) {
      return add_edge(head, std::span<const int32_t>(tails.begin(), tails.size()), w);
    }

    void set_root(int r) { root_ = r; }

    /// Validates acyclicity and the root contract, builds adjacency and a
    /// topological order.
    Hypergraph build() {
      auto s = std::make_shared<Structure>();
      s->num_nodes = num_nodes_;
      s->root = root_;
      s->edge_head = std::move(heads_);
      tail_off_.push_back(static_cast<int32_t>(pool_.size()));
      s->edge_tail_off = std::move(tail_off_);
      s->tail_pool = std::move(pool_);

      const int n = s->num_nodes;
      const int m = static_cast<int>(s->edge_head.size());
      if (root_ < 0 || root_ >= n) throw Error("hypergraph: root not set or out of range");

      build_csr(n, m, *s);
      if (s->out_off[root_] != s->out_off[root_ + 1])
        throw Error("hypergraph: root appears in a tail");

      // Kahn over the tail->head relation, one token per (edge, tail) pair.
      std::vector<int32_t> pending(n, 0);
      for (int e = 0; e < m; ++e)
        pending[s->edge_head[e]] +=
            s->edge_tail_off[e + 1] - s->edge_tail_off[e];
      std::vector<int32_t> order;
      order.reserve(n);
      for (int i = 0; i < n; ++i)
        if (pending[i] == 0) order.push_back(i);
      for (size_t q = 0; q < order.size(); ++q) {
        const int i = order[q];
        for (int32_t e : std::span<const int32_t>(s->out_pool)
                             .subspan(s->out_off[i], s->out_off[i + 1] - s->out_off[i])) {
          // i may occur several times in the tail of e; decrement per occurrence.
          int occ = 0;
          for (int32_t t = s->edge_tail_off[e]; t < s->edge_tail_off[e + 1]; ++t)
            if (s->tail_pool[t] == i) ++occ;
          pending[s->edge_head[e]] -= occ;
          if (pending[s->edge_head[e]] == 0)
            order.push_back(s->edge_head[e]);
        }
      }
      if (static_cast<int>(order.size()) != n)
        throw CyclicHypergraph("hypergraph: no topological order exists");
      s->topo = std::move(order);

      Hypergraph h;
      h.s_ = std::move(s);
      h.weights_ = std::move(weights_);
      return h;
    }

   private:
    static void build_csr(int n, int m, Structure& s) {
      // A node with several occurrences in one edge's tail gets a single
      // outgoing entry for that edge.
      auto first_occurrence = [&](int e, int32_t t) {
        for (int32_t u = s.edge_tail_off[e]; u < t; ++u)
          if (s.tail_pool[u] == s.tail_pool[t]) return false;
        return true;
      };
      s.in_off.assign(n + 1, 0);
      s.out_off.assign(n + 1, 0);
      for (int e = 0; e < m; ++e) {
        ++s.in_off[s.edge_head[e] + 1];
        for (int32_t t = s.edge_tail_off[e]; t < s.edge_tail_off[e + 1]; ++t)
          if (first_occurrence(e, t)) ++s.out_off[s.tail_pool[t] + 1];
      }
      for (int i = 0; i < n; ++i) {
        s.in_off[i + 1] += s.in_off[i];
        s.out_off[i + 1] += s.out_off[i];
      }
      s.in_pool.resize(s.in_off[n]);
      s.out_pool.resize(s.out_off[n]);
      std::vector<int32_t> ipos(s.in_off.begin(), s.in_off.end() - 1);
      std::vector<int32_t> opos(s.out_off.begin(), s.out_off.end() - 1);
      for (int e = 0; e < m; ++e) {
        s.in_pool[ipos[s.edge_head[e]]++] = e;
        for (int32_t t = s.edge_tail_off[e]; t < s.edge_tail_off[e + 1]; ++t)
          if (first_occurrence(e, t)) s.out_pool[opos[s.tail_pool[t]]++] = e;
      }
    }

    int num_nodes_ = 0;
    int root_ = -1;
    std::vector<int32_t> heads_, tail_off_, pool_;
    std::vector<double> weights_;
  };
};

/// Inside score beta, outside score alpha, node marginals p_w and the
/// partition beta_root of one forward inside-outside run.
struct InsideOutsideResult {
  std::vector<ScaledReal> beta;
  std::vector<ScaledReal> alpha;
  std::vector<double> marginal;  // p_w(i) = alpha_i * beta_i / beta_root
  ScaledReal partition;          // beta_root
};

inline InsideOutsideResult inside_outside_forward(const Hypergraph& hg) {
  const int n = hg.num_nodes();
  for (int e = 0; e < hg.num_edges(); ++e)
    if (!(hg.weight(e) >= 0.0))
      throw Error("inside_outside_forward: negative or NaN edge weight");

  InsideOutsideResult r;
  r.beta.assign(n, ScaledReal());
  r.alpha.assign(n, ScaledReal());
  r.marginal.assign(n, 0.0);

  // Inside, bottom-up: beta_i = sum_e w_e * prod_{j in T(e)} beta_j.
  // Axiom nodes have beta fixed to 1.
  for (int32_t i : hg.topo_order()) {
    if (hg.is_axiom(i)) {
      r.beta[i] = ScaledReal(1.0);
      continue;
    }
    ScaledReal acc;
    for (int32_t e : hg.incoming(i)) {
      ScaledReal term(hg.weight(e));
      for (int32_t j : hg.edge_tails(e)) term *= r.beta[j];
      acc += term;
    }
    r.beta[i] = acc;
  }
  r.partition = r.beta[hg.root()];
  if (!r.partition.positive())
    throw DegenerateDistribution("inside_outside_forward: beta_root is zero");

  // Outside, top-down, pushing each head's alpha into its tails.
  r.alpha[hg.root()] = ScaledReal(1.0);
  const auto topo = hg.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const int i = *it;
    if (r.alpha[i].is_zero()) continue;
    for (int32_t e : hg.incoming(i)) {
      const ScaledReal base = ScaledReal(hg.weight(e)) * r.alpha[i];
      const auto tails = hg.edge_tails(e);
      for (size_t j = 0; j < tails.size(); ++j) {
        ScaledReal term = base;
        for (size_t k = 0; k < tails.size(); ++k)
          if (k != j) term *= r.beta[tails[k]];
        r.alpha[tails[j]] += term;
      }
    }
  }

  for (int i = 0; i < n; ++i)
    r.marginal[i] = (r.alpha[i] * r.beta[i] / r.partition).to_double();
  return r;
}

/// Adjoints of one inside-outside call: weight_bar[e] = dJ/dw_e given the
/// seed dJ/dp_w(i) per node (and optionally a seed on beta_root itself, used
/// when J depends on the partition, e.g. through log Z). Backed by a single
/// buffer; per-call reallocation of several large vectors is measurable.
struct HypergraphAdjoints {
  std::vector<ScaledReal> buf;  // [alpha_bar | beta_bar | weight_bar]
  int nodes = 0;
  int edges = 0;

  std::span<ScaledReal> alpha_bar() { return {buf.data(), static_cast<size_t>(nodes)}; }
  std::span<ScaledReal> beta_bar() { return {buf.data() + nodes, static_cast<size_t>(nodes)}; }
  std::span<ScaledReal> weight_bar() { return {buf.data() + 2 * nodes, static_cast<size_t>(edges)}; }
  std::span<const ScaledReal> alpha_bar() const { return {buf.data(), static_cast<size_t>(nodes)}; }
  std::span<const ScaledReal> beta_bar() const { return {buf.data() + nodes, static_cast<size_t>(nodes)}; }
  std::span<const ScaledReal> weight_bar() const {
    return {buf.data() + 2 * nodes, static_cast<size_t>(edges)};
  }

  double weight_adjoint(int e) const { return weight_bar()[e].to_double(); }
};

/// `want_weight` (optional, one flag per edge) limits which weight adjoints
/// are finished; node adjoints are always complete. Callers whose edge
/// weights are partly structural constants skip the unused ones.
inline HypergraphAdjoints inside_outside_backward(const Hypergraph& hg,
                                                  const InsideOutsideResult& fwd,
                                                  std::span<const double> marginal_seed,
                                                  ScaledReal partition_seed = ScaledReal(),
                                                  std::span<const uint8_t> want_weight = {}) {
  const int n = hg.num_nodes();
  if (static_cast<int>(marginal_seed.size()) != n)
    throw ShapeMismatch("inside_outside_backward: seed length " +
                        std::to_string(marginal_seed.size()) + " != node count " +
                        std::to_string(n));
  const int root = hg.root();
  const ScaledReal& Z = fwd.partition;

  HypergraphAdjoints adj;
  adj.nodes = n;
  adj.edges = hg.num_edges();
  adj.buf.assign(2 * n + hg.num_edges(), ScaledReal());
  auto alpha_bar = adj.alpha_bar();
  auto beta_bar = adj.beta_bar();
  // During the alpha_bar phase the weight_bar slots hold the per-edge mixed
  // product sum_j alpha_bar_j * prod_{k != j} beta_k (the alpha_H coefficient
  // of w_bar_e); the final phase consumes it and overwrites the slot with the
  // finished adjoint.
  auto weight_bar = adj.weight_bar();

  const ScaledReal inv_Z = ScaledReal(1.0) / Z;

  // alpha_bar, bottom-up: the seed term dp_w(i)/dalpha_i = beta_i / beta_root
  // plus, for each incoming edge, the flow from the tails' alpha_bar
  // (alpha_j depends on alpha_{H(e)} with coefficient w_e * prod_{k != j} beta_k).
  const auto topo = hg.topo_order();
  for (int32_t i : topo) {
    ScaledReal acc;
    if (marginal_seed[i] != 0.0) acc = fwd.beta[i] * inv_Z * marginal_seed[i];
    for (int32_t e : hg.incoming(i)) {
      const auto tails = hg.edge_tails(e);
      ScaledReal flow;
      if (tails.size() == 2) {
        flow = alpha_bar[tails[0]] * fwd.beta[tails[1]] +
               alpha_bar[tails[1]] * fwd.beta[tails[0]];
      } else if (tails.size() == 1) {
        flow = alpha_bar[tails[0]];
      } else {
        for (size_t j = 0; j < tails.size(); ++j) {
          if (alpha_bar[tails[j]].is_zero()) continue;
          ScaledReal term = alpha_bar[tails[j]];
          for (size_t k = 0; k < tails.size(); ++k)
            if (k != j) term *= fwd.beta[tails[k]];
          flow += term;
        }
      }
      weight_bar[e] = flow;
      if (!flow.is_zero()) acc += flow * hg.weight(e);
    }
    alpha_bar[i] = acc;
  }

  // beta_bar seed terms. At the root, every marginal's dependence on the
  // partition contributes dp_w(i)/dbeta_root = -p_w(i)/beta_root; p_w(root)
  // itself is the constant 1, so a seed on the root is inert. Elsewhere the
  // seed term is dp_w(j)/dbeta_j = alpha_j / beta_root.
  {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      if (i != root) s += marginal_seed[i] * fwd.marginal[i];
    beta_bar[root] = inv_Z * (-s) + partition_seed;
  }
  for (int j = 0; j < n; ++j)
    if (j != root && marginal_seed[j] != 0.0)
      beta_bar[j] = fwd.alpha[j] * inv_Z * marginal_seed[j];

  // beta_bar flows and weight_bar, one pass per edge in top-down order: when
  // a head is visited its beta_bar is final (all contributions come from
  // strictly higher nodes), so the edge can push into its tails' beta_bar
  // (head term and co-tail alpha_bar term) and finish its own weight adjoint
  // w_bar_e = beta_bar_H * prod beta_j + sum_j alpha_bar_j * alpha_H * prod_{k != j} beta_k.
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const int i = *it;
    const ScaledReal& head_bar = beta_bar[i];
    const ScaledReal& head_alpha = fwd.alpha[i];
    for (int32_t e : hg.incoming(i)) {
      const auto tails = hg.edge_tails(e);
      const double w = hg.weight(e);
      const bool want = want_weight.empty() || want_weight[e];
      ScaledReal wbar;
      if (tails.size() == 2) {
        const ScaledReal x0 = head_bar * fwd.beta[tails[0]];
        const ScaledReal x1 = head_bar * fwd.beta[tails[1]];
        const ScaledReal y0 = head_alpha * alpha_bar[tails[0]];
        const ScaledReal y1 = head_alpha * alpha_bar[tails[1]];
        beta_bar[tails[0]] += (x1 + y1) * w;
        beta_bar[tails[1]] += (x0 + y0) * w;
        if (want) wbar = x0 * fwd.beta[tails[1]] + head_alpha * weight_bar[e];
      } else if (tails.size() == 1) {
        beta_bar[tails[0]] += head_bar * w;
        if (want) wbar = head_bar * fwd.beta[tails[0]] + head_alpha * weight_bar[e];
      } else {
        for (size_t j = 0; j < tails.size(); ++j) {
          ScaledReal head_term = head_bar * w;
          ScaledReal co_sum;
          for (size_t k = 0; k < tails.size(); ++k) {
            if (k == j) continue;
            head_term *= fwd.beta[tails[k]];
            ScaledReal co = alpha_bar[tails[k]] * head_alpha * w;
            for (size_t l = 0; l < tails.size(); ++l)
              if (l != j && l != k) co *= fwd.beta[tails[l]];
            co_sum += co;
          }
          beta_bar[tails[j]] += head_term + co_sum;
        }
        if (want) {
          ScaledReal full = head_bar;
          for (int32_t t : tails) full *= fwd.beta[t];
          wbar = full + head_alpha * weight_bar[e];
        }
      }
      weight_bar[e] = wbar;
    }
  }
  return adj;
}

/// Text dump for golden-file tests: one `node` line per node and one `edge`
/// line per hyperedge.
inline void dump_hypergraph(const Hypergraph& hg, const InsideOutsideResult* io,
                            std::ostream& os) {
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
  };
  for (int i = 0; i < hg.num_nodes(); ++i) {
    os << "node " << i;
    if (io)
      os << " beta " << fmt(io->beta[i].to_double()) << " alpha "
         << fmt(io->alpha[i].to_double()) << " p " << fmt(io->marginal[i]);
    os << "\n";
  }
  for (int e = 0; e < hg.num_edges(); ++e) {
    os << "edge " << hg.edge_head(e) << " <-";
    for (int32_t t : hg.edge_tails(e)) os << " " << t;
    os << " w " << fmt(hg.weight(e)) << "\n";
  }
}

}  // namespace bpdep
