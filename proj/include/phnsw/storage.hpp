#pragma once

#include "phnsw/core.hpp"
#include "phnsw/graph.hpp"

#include <cstdint>
#include <vector>

namespace phnsw {

/// Off-chip database layouts.
///   HighDimOnly    — per-layer neighbor-id tables + high-dim raw table.
///   SeparateLowDim — ids tables + one shared low-dim table + high-dim table.
///   InlineLowDim   — each neighbor record carries the neighbors' low-dim
///                    vectors right after the id list (duplicated per edge),
///                    + high-dim table.
enum class LayoutMode : std::uint8_t {
  HighDimOnly = 0,
  SeparateLowDim = 1,
  InlineLowDim = 2,
};

const char* layout_name(LayoutMode mode);

/// Fetch-level traffic meter. One fetch call is one transaction, whatever its
/// size. Owned by the query context: never shared across concurrent queries,
/// aggregated only at reporting time.
struct TrafficCounters {
  std::uint64_t transactions = 0;
  std::uint64_t bytes = 0;

  std::uint64_t neighbor_index_transactions = 0;
  std::uint64_t lowdim_transactions = 0;
  std::uint64_t highdim_transactions = 0;

  std::uint64_t neighbor_index_bytes = 0;
  std::uint64_t lowdim_bytes = 0;
  std::uint64_t highdim_bytes = 0;

  TrafficCounters& operator+=(const TrafficCounters& o) {
    transactions += o.transactions;
    bytes += o.bytes;
    neighbor_index_transactions += o.neighbor_index_transactions;
    lowdim_transactions += o.lowdim_transactions;
    highdim_transactions += o.highdim_transactions;
    neighbor_index_bytes += o.neighbor_index_bytes;
    lowdim_bytes += o.lowdim_bytes;
    highdim_bytes += o.highdim_bytes;
    return *this;
  }
};

/// Decoded neighbor record. For InlineLowDim images, `lowdim()` views the
/// record's payload in place (row j holds the low-dim vector of ids[j]); the
/// view stays valid while the image it came from is alive.
struct NeighborRecord {
  std::vector<NodeId> ids;
  const float* lowdim_data = nullptr;
  Eigen::Index lowdim_cols = 0;
  bool has_lowdim = false;

  Eigen::Map<const Matrix, Eigen::Unaligned> lowdim() const {
    return {lowdim_data, static_cast<Eigen::Index>(ids.size()), lowdim_cols};
  }
};

struct SizeReport {
  std::uint64_t header_bytes = 0;
  std::vector<std::uint64_t> index_table_bytes;  // per layer
  std::uint64_t lowdim_table_bytes = 0;
  std::uint64_t highdim_table_bytes = 0;
  // Bytes of low-dim floats duplicated into neighbor records
  // (sum over layers and nodes of degree * d_low * 4; inline mode only).
  std::uint64_t inline_lowdim_payload_bytes = 0;
  std::uint64_t total_bytes = 0;

  std::uint64_t index_bytes_total() const {
    std::uint64_t t = 0;
    for (auto b : index_table_bytes) t += b;
    return t;
  }
};

/// Byte-level materialization of a graph + its vectors in one layout.
///
/// Tables are flat little-endian byte buffers so that every fetch is metered
/// at exactly the bytes a DRAM burst would move, and so the serialized file is
/// the in-memory image byte for byte. A neighbor record is
///   u16 degree, u32 ids[degree], then (inline mode) f32 low[degree * d_low].
/// Immutable after build; fetches are const and meter into a caller-supplied
/// TrafficCounters.
class StorageImage {
 public:
  static StorageImage build(const HnswGraph& g, const Dataset& ds_high,
                            const Dataset* ds_low, LayoutMode mode);

  LayoutMode mode() const { return mode_; }
  std::uint32_t num_points() const { return n_; }
  std::uint32_t num_layers() const { return num_layers_; }
  Eigen::Index d_high() const { return d_high_; }
  Eigen::Index d_low() const { return d_low_; }

  /// One transaction covering the id list (and, inline, the low-dim payload).
  void fetch_neighbor_record(NodeId node, std::uint32_t layer, NeighborRecord& out,
                             TrafficCounters& tc) const;

  /// One transaction of d_low * 4 bytes. SeparateLowDim images only.
  void fetch_lowdim(NodeId id, Eigen::Ref<Vector> out, TrafficCounters& tc) const;

  /// One transaction of d_high * 4 bytes.
  void fetch_highdim(NodeId id, Eigen::Ref<Vector> out, TrafficCounters& tc) const;

  Vector fetch_lowdim(NodeId id, TrafficCounters& tc) const;
  Vector fetch_highdim(NodeId id, TrafficCounters& tc) const;

  SizeReport size_report() const;

  // Raw pieces, used by serialization and by tests.
  const std::vector<std::uint8_t>& max_levels() const { return max_levels_; }
  const std::vector<std::vector<std::uint8_t>>& layer_tables() const { return layer_tables_; }
  const std::vector<std::uint8_t>& lowdim_table() const { return lowdim_table_; }
  const std::vector<std::uint8_t>& highdim_table() const { return highdim_table_; }

  /// Reassemble from raw parts (deserialization path); rebuilds record
  /// offsets by walking the tables and validates sizes.
  static StorageImage from_parts(LayoutMode mode, std::uint32_t n, std::uint32_t num_layers,
                                 Eigen::Index d_high, Eigen::Index d_low,
                                 std::vector<std::uint8_t> max_levels,
                                 std::vector<std::vector<std::uint8_t>> layer_tables,
                                 std::vector<std::uint8_t> lowdim_table,
                                 std::vector<std::uint8_t> highdim_table);

  static constexpr std::uint64_t kFixedHeaderBytes = 24;

 private:
  StorageImage() = default;
  void index_offsets();
  std::size_t record_bytes(std::size_t degree) const;

  LayoutMode mode_ = LayoutMode::HighDimOnly;
  std::uint32_t n_ = 0;
  std::uint32_t num_layers_ = 0;
  Eigen::Index d_high_ = 0;
  Eigen::Index d_low_ = 0;
  std::vector<std::uint8_t> max_levels_;
  std::vector<std::vector<std::uint8_t>> layer_tables_;
  std::vector<std::vector<std::int64_t>> record_offset_;  // [layer][node], -1 absent
  std::vector<std::uint8_t> lowdim_table_;
  std::vector<std::uint8_t> highdim_table_;
};

/// Convenience wrapper matching the operation vocabulary used elsewhere.
inline StorageImage build_image(const HnswGraph& g, const Dataset& ds_high,
                                const Dataset* ds_low, LayoutMode mode) {
  return StorageImage::build(g, ds_high, ds_low, mode);
}

inline constexpr double kDdr4PjPerBit = 18.75;
inline constexpr double kHbm1PjPerBit = 7.0;

/// Modeled DRAM energy in picojoules: bytes * 8 * pj_per_bit.
inline double energy_estimate(const TrafficCounters& c, double pj_per_bit) {
  return static_cast<double>(c.bytes) * 8.0 * pj_per_bit;
}

}  // namespace phnsw
