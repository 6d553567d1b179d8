#pragma once

#include "phnsw/core.hpp"
#include "phnsw/graph.hpp"
#include "phnsw/pca.hpp"
#include "phnsw/storage.hpp"

#include <optional>
#include <span>
#include <vector>

namespace phnsw {

/// Per-layer filter size k: how many low-dim candidates are promoted to exact
/// high-dim evaluation per expansion.
struct LayerKConfig {
  std::uint32_t k0 = 16;      // layer 0
  std::uint32_t k1 = 8;       // layer 1
  std::uint32_t k_rest = 3;   // layers >= 2

  std::uint32_t k_for(std::uint32_t layer) const {
    if (layer == 0) return k0;
    if (layer == 1) return k1;
    return k_rest;
  }
};

struct SearchParams {
  std::uint32_t ef_upper = 1;   // beam width at layers >= 1
  std::uint32_t ef_base = 10;   // beam width at layer 0
  std::uint32_t K = 10;         // results returned, <= ef_base
  LayerKConfig k_config;
  std::optional<NodeId> entry_override;

  // Test hook: admit every neighbor into the low-dim candidate set regardless
  // of the carried threshold, so only the top-k trim filters.
  bool lowdim_threshold_disabled = false;
  bool record_visit_order = false;
};

/// Distance-evaluation and traffic counters for one query.
struct QueryStats {
  TrafficCounters traffic;
  std::uint64_t lowdim_evals = 0;
  std::uint64_t highdim_evals = 0;
  std::uint64_t expansions = 0;
  // Largest number of high-dim evaluations triggered by a single candidate
  // expansion, and how often an expansion exceeded its layer's bound
  // (k for filtered search, the degree bound for the baseline).
  std::uint32_t max_highdim_evals_per_expansion = 0;
  std::uint64_t expansion_bound_violations = 0;
};

/// Per-query mutable state. Each in-flight query owns one; the graph, image
/// and model are shared read-only, so queries may run concurrently without
/// coordination.
struct SearchState {
  std::vector<bool> visited;
  QueryStats stats;
  std::vector<NodeId> visit_order;  // filled only when requested
  bool record_visit_order = false;

  // scratch reused across expansions
  NeighborRecord record;
  Vector highdim_buf;
  Vector lowdim_buf;
  std::vector<ScoredId> batch;
  std::vector<ScoredId> kept;
  std::vector<ScoredId> cpca_carry;
  std::vector<ScoredId> cpca_tmp;

  explicit SearchState(std::size_t n, const StorageImage& img)
      : visited(n, false),
        highdim_buf(img.d_high()),
        lowdim_buf(img.d_low() > 0 ? img.d_low() : 1) {}

  bool mark_visited(NodeId id) {
    if (visited[id]) return false;
    visited[id] = true;
    if (record_visit_order) visit_order.push_back(id);
    return true;
  }
};

/// Optional step-by-step capture of one layer search, for trace-level tests.
struct LayerTraceStep {
  ScoredId expanded;
  std::vector<ScoredId> cpca_after_trim;  // low-dim keyed, processing order
  std::vector<ScoredId> frontier_after;   // F ascending, high-dim keyed
};
using LayerTrace = std::vector<LayerTraceStep>;

/// Ids of the k smallest values, by counting-rank semantics: the rank of
/// element i is |{j : v_j < v_i}| + |{j < i : v_j == v_i}| — exactly what a
/// full pairwise comparison matrix evaluated at once produces, ties resolved
/// by input position. Returns the entries of ranks 0..k-1 in rank order.
std::vector<ScoredId> rank_topk(std::span<const ScoredId> values, std::size_t k);

/// Same kernel writing into a caller-owned buffer (hot path, no allocation).
void rank_topk_into(std::span<const ScoredId> values, std::size_t k,
                    std::vector<ScoredId>& out);

/// Classic greedy best-first layer search, all distances high-dimensional.
/// Entries must carry their exact high-dim distances. Returns up to ef
/// results ascending by (distance, id).
std::vector<ScoredId> hnsw_search_layer(Eigen::Ref<const Vector> q,
                                        std::span<const ScoredId> entries, std::size_t ef,
                                        std::uint32_t layer, const HnswGraph& g,
                                        const StorageImage& img, SearchState& state);

/// Filtered layer search: per expansion, every neighbor is scored in the
/// low-dim space against the threshold carried from the previous iteration's
/// admitted set (+inf when empty), the survivors are trimmed to the k best by
/// rank_topk, and only those — at most k — are fetched and scored in high
/// dimension, nearest first. Requires an image that carries low-dim data.
std::vector<ScoredId> phnsw_search_layer(Eigen::Ref<const Vector> q,
                                         Eigen::Ref<const Vector> q_pca,
                                         std::span<const ScoredId> entries, std::size_t ef,
                                         std::uint32_t layer, std::uint32_t k,
                                         const HnswGraph& g, const StorageImage& img,
                                         SearchState& state, bool threshold_disabled = false,
                                         LayerTrace* trace = nullptr);

struct SearchResult {
  std::vector<ScoredId> entries;  // ascending (distance, id)
  QueryStats stats;
  std::vector<NodeId> visit_order;
};

/// Top-down descent with hnsw_search_layer: ef_upper per upper layer,
/// ef_base at layer 0, top K returned.
SearchResult hnsw_search(Eigen::Ref<const Vector> q, const HnswGraph& g,
                         const StorageImage& img, const SearchParams& params);

/// Same descent with phnsw_search_layer and per-layer filter sizes from
/// params.k_config. The query is projected once with `pca`.
SearchResult phnsw_search(Eigen::Ref<const Vector> q, const HnswGraph& g,
                          const StorageImage& img, const PcaModel& pca,
                          const SearchParams& params);

}  // namespace phnsw
