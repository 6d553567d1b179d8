#include "phnsw/graph.hpp"

#include "phnsw/detail/rng.hpp"

#include <algorithm>
#include <queue>
#include <vector>

namespace phnsw {

namespace {

struct MinOrder {
  bool operator()(const ScoredId& a, const ScoredId& b) const { return scored_less(b, a); }
};
struct MaxOrder {
  bool operator()(const ScoredId& a, const ScoredId& b) const { return scored_less(a, b); }
};

using MinHeap = std::priority_queue<ScoredId, std::vector<ScoredId>, MinOrder>;
using MaxHeap = std::priority_queue<ScoredId, std::vector<ScoredId>, MaxOrder>;

class Builder {
 public:
  Builder(const Dataset& ds, const BuildParams& p) : ds_(ds), p_(p), visited_(ds.size(), 0), epoch_(0) {}

  HnswGraph run() {
    const std::size_t n = static_cast<std::size_t>(ds_.size());
    std::mt19937_64 rng(p_.rng_seed);
    const double scale = p_.resolved_level_scale();

    HnswGraph g;
    g.M = p_.M;
    g.build_seed = p_.rng_seed;
    g.max_levels.resize(n);

    std::vector<std::uint32_t> levels(n);
    for (std::size_t i = 0; i < n; ++i) {
      double u = detail::uniform_unit(rng);
      double lvl = std::floor(-std::log(u) * scale);
      levels[i] = static_cast<std::uint32_t>(std::min(lvl, 255.0));
      g.max_levels[i] = static_cast<std::uint8_t>(levels[i]);
    }
    const std::uint32_t top = *std::max_element(levels.begin(), levels.end());
    g.layers.assign(top + 1, std::vector<std::vector<NodeId>>(n));
    graph_ = &g;

    std::uint32_t max_level = levels[0];
    g.entry_point = 0;
    for (NodeId id = 1; id < n; ++id) {
      insert(id, levels[id], max_level);
      if (levels[id] > max_level) {
        max_level = levels[id];
        g.entry_point = id;
      }
    }
    return g;
  }

 private:
  Scalar dist(NodeId a, Eigen::Ref<const Vector> q) const {
    return squared_distance(ds_.matrix().row(static_cast<Eigen::Index>(a)), q);
  }

  void insert(NodeId id, std::uint32_t level, std::uint32_t max_level) {
    Eigen::Ref<const Vector> q = ds_.matrix().row(static_cast<Eigen::Index>(id));
    ScoredId cur{dist(graph_->entry_point, q), graph_->entry_point};

    for (std::uint32_t l = max_level; l > level; --l) {
      cur = greedy_closest(q, cur, l);
    }

    for (std::uint32_t l = std::min(level, max_level) + 1; l-- > 0;) {
      std::vector<ScoredId> found = search_layer(q, cur, p_.ef_construction, l, id);
      std::vector<ScoredId> selected = select_diverse(found, p_.M);
      auto& lists = graph_->layers[l];
      for (const ScoredId& s : selected) {
        lists[id].push_back(s.id);
        lists[s.id].push_back(id);
        if (lists[s.id].size() > graph_->max_degree(l)) {
          prune(s.id, l);
        }
      }
      if (!found.empty()) cur = found.front();
    }
  }

  // The cited construction's diversity rule: walking candidates nearest
  // first, keep e only while it is closer to the base point than to every
  // neighbor already kept. Keeps clusters from swallowing all edges.
  std::vector<ScoredId> select_diverse(std::span<const ScoredId> candidates,
                                       std::size_t m) const {
    std::vector<ScoredId> kept;
    for (const ScoredId& e : candidates) {
      if (kept.size() >= m) break;
      Eigen::Ref<const Vector> ev = ds_.matrix().row(static_cast<Eigen::Index>(e.id));
      bool diverse = true;
      for (const ScoredId& r : kept) {
        if (squared_distance(ev, ds_.matrix().row(static_cast<Eigen::Index>(r.id))) < e.dist) {
          diverse = false;
          break;
        }
      }
      if (diverse) kept.push_back(e);
    }
    return kept;
  }

  // Strictly-descending greedy walk; ends at a local minimum of the layer.
  ScoredId greedy_closest(Eigen::Ref<const Vector> q, ScoredId start, std::uint32_t layer) const {
    ScoredId cur = start;
    bool moved = true;
    while (moved) {
      moved = false;
      for (NodeId nb : graph_->layers[layer][cur.id]) {
        Scalar d = dist(nb, q);
        if (d < cur.dist) {
          cur = {d, nb};
          moved = true;
        }
      }
    }
    return cur;
  }

  // Beam search over one layer against the raw dataset. `self` is excluded so
  // a node never links to itself. Returns up to ef results, ascending.
  std::vector<ScoredId> search_layer(Eigen::Ref<const Vector> q, ScoredId entry, std::size_t ef,
                                     std::uint32_t layer, NodeId self) {
    ++epoch_;
    visited_[entry.id] = epoch_;
    visited_[self] = epoch_;

    MinHeap candidates;
    MaxHeap results;
    candidates.push(entry);
    results.push(entry);

    std::vector<ScoredId> batch;
    while (!candidates.empty()) {
      ScoredId c = candidates.top();
      candidates.pop();
      if (c.dist > results.top().dist) break;

      batch.clear();
      for (NodeId nb : graph_->layers[layer][c.id]) {
        if (visited_[nb] == epoch_) continue;
        visited_[nb] = epoch_;
        batch.push_back({dist(nb, q), nb});
      }
      std::sort(batch.begin(), batch.end(), scored_less);
      for (const ScoredId& e : batch) {
        if (e.dist < results.top().dist || results.size() < ef) {
          candidates.push(e);
          results.push(e);
          if (results.size() > ef) results.pop();
        }
      }
    }

    std::vector<ScoredId> out(results.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      out[i] = results.top();
      results.pop();
    }
    return out;
  }

  // Re-select an overfull list with the same diversity rule, against the
  // list owner.
  void prune(NodeId node, std::uint32_t layer) {
    auto& list = graph_->layers[layer][node];
    Eigen::Ref<const Vector> v = ds_.matrix().row(static_cast<Eigen::Index>(node));
    std::vector<ScoredId> scored;
    scored.reserve(list.size());
    for (NodeId nb : list) scored.push_back({dist(nb, v), nb});
    std::sort(scored.begin(), scored.end(), scored_less);
    std::vector<ScoredId> kept = select_diverse(scored, graph_->max_degree(layer));
    list.clear();
    for (const ScoredId& s : kept) list.push_back(s.id);
  }

  const Dataset& ds_;
  const BuildParams& p_;
  HnswGraph* graph_ = nullptr;
  std::vector<std::uint32_t> visited_;
  std::uint32_t epoch_;
};

}  // namespace

HnswGraph hnsw_build(const Dataset& ds, const BuildParams& params) {
  if (params.M < 2) {
    throw std::invalid_argument("hnsw_build: M must be >= 2");
  }
  if (params.ef_construction < params.M) {
    throw std::invalid_argument("hnsw_build: ef_construction must be >= M");
  }
  return Builder(ds, params).run();
}

GraphStats graph_stats(const HnswGraph& g) {
  GraphStats stats;
  stats.num_layers = g.num_layers();
  stats.per_layer.resize(stats.num_layers);
  for (std::uint32_t l = 0; l < stats.num_layers; ++l) {
    LayerStats& ls = stats.per_layer[l];
    for (NodeId id = 0; id < g.size(); ++id) {
      if (!g.present(id, l)) continue;
      ls.node_count++;
      std::size_t deg = g.neighbors(id, l).size();
      ls.edge_count += deg;
      ls.max_degree = std::max<std::uint32_t>(ls.max_degree, static_cast<std::uint32_t>(deg));
    }
    ls.mean_degree = ls.node_count ? static_cast<double>(ls.edge_count) / static_cast<double>(ls.node_count) : 0.0;
  }
  return stats;
}

void validate_graph(const HnswGraph& g) {
  const std::size_t n = g.size();
  if (n == 0) throw std::logic_error("graph: empty");
  const std::uint32_t num_layers = g.num_layers();
  if (num_layers == 0) throw std::logic_error("graph: no layers");
  if (!g.present(g.entry_point, num_layers - 1)) {
    throw std::logic_error("graph: entry point missing from top layer");
  }
  if (g.max_levels[g.entry_point] != num_layers - 1) {
    throw std::logic_error("graph: entry point level != top layer");
  }
  for (std::uint32_t l = 0; l < num_layers; ++l) {
    for (NodeId id = 0; id < n; ++id) {
      auto nbs = g.layers[l][id];
      if (!g.present(id, l)) {
        if (!nbs.empty()) throw std::logic_error("graph: absent node has neighbors");
        continue;
      }
      if (nbs.size() > g.max_degree(l)) throw std::logic_error("graph: degree bound violated");
      for (NodeId nb : nbs) {
        if (nb >= n) throw std::logic_error("graph: neighbor id out of range");
        if (nb == id) throw std::logic_error("graph: self loop");
        if (!g.present(nb, l)) throw std::logic_error("graph: neighbor absent at layer");
      }
    }
  }
}

}  // namespace phnsw
