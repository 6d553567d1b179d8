#include "phnsw/search.hpp"

#include <algorithm>
#include <limits>
#include <queue>

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

std::vector<ScoredId> drain_ascending(MaxHeap& heap) {
  std::vector<ScoredId> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top();
    heap.pop();
  }
  return out;
}

// Safety net for the termination argument: every admitted candidate is
// freshly visited, so pops are bounded by |entries| + N.
std::size_t iteration_cap(std::size_t n) { return 64 + 16 * n; }

void seed_heaps(std::span<const ScoredId> entries, SearchState& state, MinHeap& c, MaxHeap& f) {
  if (entries.empty()) {
    throw std::invalid_argument("layer search: empty entry point set");
  }
  for (const ScoredId& e : entries) {
    if (e.id >= state.visited.size()) {
      throw std::invalid_argument("layer search: entry id " + std::to_string(e.id) +
                                  " out of range");
    }
    state.mark_visited(e.id);
    c.push(e);
    f.push(e);
  }
}

void note_expansion(SearchState& state, std::uint32_t evals, std::uint32_t bound) {
  state.stats.expansions += 1;
  state.stats.max_highdim_evals_per_expansion =
      std::max(state.stats.max_highdim_evals_per_expansion, evals);
  if (evals > bound) state.stats.expansion_bound_violations += 1;
}

}  // namespace

void rank_topk_into(std::span<const ScoredId> values, std::size_t k,
                    std::vector<ScoredId>& out) {
  const std::size_t n = values.size();
  if (k > n) {
    throw std::invalid_argument("rank_topk: k exceeds input size");
  }
  out.resize(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rank = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (values[j].dist < values[i].dist) ++rank;
      else if (values[j].dist == values[i].dist && j < i) ++rank;
    }
    if (rank < k) out[rank] = values[i];
  }
}

std::vector<ScoredId> rank_topk(std::span<const ScoredId> values, std::size_t k) {
  std::vector<ScoredId> out;
  rank_topk_into(values, k, out);
  return out;
}

std::vector<ScoredId> hnsw_search_layer(Eigen::Ref<const Vector> q,
                                        std::span<const ScoredId> entries, std::size_t ef,
                                        std::uint32_t layer, const HnswGraph& g,
                                        const StorageImage& img, SearchState& state) {
  MinHeap candidates;
  MaxHeap frontier;
  seed_heaps(entries, state, candidates, frontier);

  const std::uint32_t degree_bound = g.max_degree(layer);
  std::size_t cap = iteration_cap(g.size());

  while (!candidates.empty()) {
    if (cap-- == 0) throw std::runtime_error("hnsw_search_layer: iteration cap hit");
    ScoredId c = candidates.top();
    candidates.pop();
    if (c.dist > frontier.top().dist) break;

    img.fetch_neighbor_record(c.id, layer, state.record, state.stats.traffic);
    auto& batch = state.batch;
    batch.clear();
    for (NodeId nb : state.record.ids) {
      if (state.visited[nb]) continue;
      img.fetch_highdim(nb, state.highdim_buf, state.stats.traffic);
      state.stats.highdim_evals += 1;
      batch.push_back({squared_distance(q, state.highdim_buf), nb});
    }
    note_expansion(state, static_cast<std::uint32_t>(batch.size()), degree_bound);

    std::sort(batch.begin(), batch.end(), scored_less);
    for (const ScoredId& e : batch) {
      state.mark_visited(e.id);
      if (e.dist < frontier.top().dist || frontier.size() < ef) {
        candidates.push(e);
        frontier.push(e);
        if (frontier.size() > ef) frontier.pop();
      }
    }
  }
  return drain_ascending(frontier);
}

std::vector<ScoredId> phnsw_search_layer(Eigen::Ref<const Vector> q,
                                         Eigen::Ref<const Vector> q_pca,
                                         std::span<const ScoredId> entries, std::size_t ef,
                                         std::uint32_t layer, std::uint32_t k,
                                         const HnswGraph& g, const StorageImage& img,
                                         SearchState& state, bool threshold_disabled,
                                         LayerTrace* trace) {
  if (img.mode() == LayoutMode::HighDimOnly) {
    throw std::logic_error("phnsw_search_layer: image carries no low-dim data");
  }
  if (k < 1) {
    throw std::invalid_argument("phnsw_search_layer: k must be >= 1");
  }

  MinHeap candidates;
  MaxHeap frontier;
  seed_heaps(entries, state, candidates, frontier);

  auto& carry = state.cpca_carry;  // C_pca surviving the previous iteration
  auto& admitted = state.batch;    // candidates passing the low-dim threshold
  auto& kept = state.kept;         // admitted, trimmed to the k best
  auto& tmp = state.cpca_tmp;      // C_pca_tmp: kept *and* frontier-admitted
  carry.clear();

  const bool inline_low = img.mode() == LayoutMode::InlineLowDim;
  std::size_t cap = iteration_cap(g.size());

  while (!candidates.empty()) {
    if (cap-- == 0) throw std::runtime_error("phnsw_search_layer: iteration cap hit");
    ScoredId c = candidates.top();
    candidates.pop();

    const Scalar carry_threshold =
        carry.empty() ? std::numeric_limits<Scalar>::infinity()
                      : std::max_element(carry.begin(), carry.end(), scored_less)->dist;
    if (c.dist > frontier.top().dist) break;

    img.fetch_neighbor_record(c.id, layer, state.record, state.stats.traffic);

    // Low-dim pass: score every neighbor, keep those under the carried
    // threshold, then trim to the k best by counting rank.
    admitted.clear();
    const auto& ids = state.record.ids;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      Scalar d_low;
      if (inline_low) {
        d_low = squared_distance(q_pca, state.record.lowdim().row(static_cast<Eigen::Index>(j)));
      } else {
        img.fetch_lowdim(ids[j], state.lowdim_buf, state.stats.traffic);
        d_low = squared_distance(q_pca, state.lowdim_buf);
      }
      state.stats.lowdim_evals += 1;
      if (threshold_disabled || d_low < carry_threshold) {
        admitted.push_back({d_low, ids[j]});
      }
    }
    rank_topk_into(admitted, std::min<std::size_t>(k, admitted.size()), kept);
    std::sort(kept.begin(), kept.end(), scored_less);

    // High-dim pass over the kept candidates, nearest first.
    tmp.clear();
    std::uint32_t evals = 0;
    for (const ScoredId& m : kept) {
      if (!state.mark_visited(m.id)) continue;
      img.fetch_highdim(m.id, state.highdim_buf, state.stats.traffic);
      state.stats.highdim_evals += 1;
      evals += 1;
      Scalar d_high = squared_distance(q, state.highdim_buf);
      if (d_high < frontier.top().dist || frontier.size() < ef) {
        tmp.push_back(m);
        candidates.push({d_high, m.id});
        frontier.push({d_high, m.id});
        if (frontier.size() > ef) frontier.pop();
      }
    }
    note_expansion(state, evals, k);
    carry.swap(tmp);

    if (trace) {
      MaxHeap snapshot = frontier;
      trace->push_back({c, kept, drain_ascending(snapshot)});
    }
  }
  return drain_ascending(frontier);
}

namespace {

void check_common_params(const SearchParams& p) {
  if (p.ef_upper < 1 || p.ef_base < 1) {
    throw std::invalid_argument("search: ef must be >= 1");
  }
  if (p.K > p.ef_base) {
    throw std::invalid_argument("search: K must be <= ef_base");
  }
}

ScoredId evaluated_entry(Eigen::Ref<const Vector> q, const HnswGraph& g, const StorageImage& img,
                         const SearchParams& p, SearchState& state) {
  NodeId ep = p.entry_override.value_or(g.entry_point);
  if (!g.present(ep, g.num_layers() - 1)) {
    throw std::invalid_argument("search: entry point absent from top layer");
  }
  img.fetch_highdim(ep, state.highdim_buf, state.stats.traffic);
  state.stats.highdim_evals += 1;
  state.mark_visited(ep);
  return {squared_distance(q, state.highdim_buf), ep};
}

SearchResult finish(std::vector<ScoredId> frontier, std::uint32_t K, SearchState& state) {
  if (frontier.size() > K) frontier.resize(K);
  SearchResult r;
  r.entries = std::move(frontier);
  r.stats = state.stats;
  r.visit_order = std::move(state.visit_order);
  return r;
}

}  // namespace

SearchResult hnsw_search(Eigen::Ref<const Vector> q, const HnswGraph& g,
                         const StorageImage& img, const SearchParams& params) {
  check_common_params(params);
  if (q.size() != img.d_high()) {
    throw std::invalid_argument("hnsw_search: query dimension mismatch");
  }
  SearchState state(g.size(), img);
  state.record_visit_order = params.record_visit_order;

  std::vector<ScoredId> eps{evaluated_entry(q, g, img, params, state)};
  for (std::uint32_t layer = g.num_layers() - 1; layer > 0; --layer) {
    eps = hnsw_search_layer(q, eps, params.ef_upper, layer, g, img, state);
  }
  auto frontier = hnsw_search_layer(q, eps, params.ef_base, 0, g, img, state);
  return finish(std::move(frontier), params.K, state);
}

SearchResult phnsw_search(Eigen::Ref<const Vector> q, const HnswGraph& g,
                          const StorageImage& img, const PcaModel& pca,
                          const SearchParams& params) {
  check_common_params(params);
  if (q.size() != img.d_high() || q.size() != pca.d_high()) {
    throw std::invalid_argument("phnsw_search: query dimension mismatch");
  }
  if (pca.d_low() != img.d_low()) {
    throw std::invalid_argument("phnsw_search: model/image low dimension mismatch");
  }
  const LayerKConfig& kc = params.k_config;
  if (kc.k0 < 1 || kc.k1 < 1 || kc.k_rest < 1) {
    throw std::invalid_argument("phnsw_search: filter sizes must be >= 1");
  }
  if (kc.k0 > g.max_degree(0) || kc.k1 > g.M || kc.k_rest > g.M) {
    throw std::invalid_argument("phnsw_search: filter size exceeds layer degree bound");
  }

  Vector q_pca = pca_project(pca, q);
  SearchState state(g.size(), img);
  state.record_visit_order = params.record_visit_order;

  std::vector<ScoredId> eps{evaluated_entry(q, g, img, params, state)};
  for (std::uint32_t layer = g.num_layers() - 1; layer > 0; --layer) {
    eps = phnsw_search_layer(q, q_pca, eps, params.ef_upper, layer, kc.k_for(layer), g, img,
                             state, params.lowdim_threshold_disabled);
  }
  auto frontier = phnsw_search_layer(q, q_pca, eps, params.ef_base, 0, kc.k_for(0), g, img,
                                     state, params.lowdim_threshold_disabled);
  return finish(std::move(frontier), params.K, state);
}

}  // namespace phnsw
