#pragma once

#include "phnsw/core.hpp"

#include <cmath>
#include <vector>

namespace phnsw {

struct BuildParams {
  std::uint32_t M = 16;
  std::uint32_t ef_construction = 200;
  double level_scale = 0.0;  // 0 means 1/ln(M)
  std::uint64_t rng_seed = 0;

  double resolved_level_scale() const {
    return level_scale > 0.0 ? level_scale : 1.0 / std::log(static_cast<double>(M));
  }
};

/// Multi-layer navigable small-world graph. Nodes live at layers
/// 0..max_levels[id]; adjacency lists hold at most M ids at layers >= 1 and
/// at most 2M at layer 0. Immutable after build, safe for concurrent readers.
struct HnswGraph {
  std::uint32_t M = 0;
  std::uint64_t build_seed = 0;
  NodeId entry_point = 0;
  std::vector<std::uint8_t> max_levels;
  // layers[l][id] is the neighbor list of `id` at layer l (empty when absent).
  std::vector<std::vector<std::vector<NodeId>>> layers;

  std::size_t size() const { return max_levels.size(); }
  std::uint32_t num_layers() const { return static_cast<std::uint32_t>(layers.size()); }
  std::uint32_t max_degree(std::uint32_t layer) const { return layer == 0 ? 2 * M : M; }

  bool present(NodeId id, std::uint32_t layer) const {
    return id < max_levels.size() && max_levels[id] >= layer;
  }
  std::span<const NodeId> neighbors(NodeId id, std::uint32_t layer) const {
    return layers[layer][id];
  }
};

/// Insertion-based construction: sample a level for each point
/// (floor(-ln(u) * level_scale)), greedy-descend from the entry point, then
/// beam-search each layer with ef_construction and keep the M closest as
/// neighbors, pruning overfull lists back to the per-layer degree bound.
/// Deterministic for a fixed seed.
HnswGraph hnsw_build(const Dataset& ds, const BuildParams& params);

struct LayerStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  double mean_degree = 0.0;
  std::uint32_t max_degree = 0;
};

struct GraphStats {
  std::uint32_t num_layers = 0;
  std::vector<LayerStats> per_layer;
};

GraphStats graph_stats(const HnswGraph& g);

/// Throws std::logic_error if any structural invariant is broken
/// (degree bounds, id validity, self-loops, entry level, layer nesting).
void validate_graph(const HnswGraph& g);

}  // namespace phnsw
