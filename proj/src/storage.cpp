#include "phnsw/storage.hpp"

#include <bit>
#include <cstring>

static_assert(std::endian::native == std::endian::little,
              "storage images are little-endian; big-endian hosts are unsupported");

namespace phnsw {

namespace {

void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
  std::uint8_t b[2];
  std::memcpy(b, &v, 2);
  buf.insert(buf.end(), b, b + 2);
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  std::uint8_t b[4];
  std::memcpy(b, &v, 4);
  buf.insert(buf.end(), b, b + 4);
}

void put_f32(std::vector<std::uint8_t>& buf, float v) {
  std::uint8_t b[4];
  std::memcpy(b, &v, 4);
  buf.insert(buf.end(), b, b + 4);
}

std::uint16_t get_u16(const std::uint8_t* p) {
  std::uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

}  // namespace

const char* layout_name(LayoutMode mode) {
  switch (mode) {
    case LayoutMode::HighDimOnly: return "std";
    case LayoutMode::SeparateLowDim: return "sep";
    case LayoutMode::InlineLowDim: return "inline";
  }
  return "?";
}

std::size_t StorageImage::record_bytes(std::size_t degree) const {
  std::size_t b = 2 + degree * 4;
  if (mode_ == LayoutMode::InlineLowDim) {
    b += degree * static_cast<std::size_t>(d_low_) * 4;
  }
  return b;
}

StorageImage StorageImage::build(const HnswGraph& g, const Dataset& ds_high,
                                 const Dataset* ds_low, LayoutMode mode) {
  const std::size_t n = g.size();
  if (static_cast<std::size_t>(ds_high.size()) != n) {
    throw std::invalid_argument("build_image: graph/high-dim point count mismatch");
  }
  const bool wants_low = mode != LayoutMode::HighDimOnly;
  if (wants_low) {
    if (ds_low == nullptr) {
      throw std::invalid_argument("build_image: layout requires low-dim data");
    }
    if (static_cast<std::size_t>(ds_low->size()) != n) {
      throw std::invalid_argument("build_image: low-dim point count mismatch");
    }
  }

  StorageImage img;
  img.mode_ = mode;
  img.n_ = static_cast<std::uint32_t>(n);
  img.num_layers_ = g.num_layers();
  img.d_high_ = ds_high.dim();
  img.d_low_ = wants_low ? ds_low->dim() : 0;
  img.max_levels_ = g.max_levels;

  img.layer_tables_.resize(img.num_layers_);
  for (std::uint32_t l = 0; l < img.num_layers_; ++l) {
    auto& table = img.layer_tables_[l];
    for (NodeId id = 0; id < n; ++id) {
      if (!g.present(id, l)) continue;
      auto nbs = g.neighbors(id, l);
      put_u16(table, static_cast<std::uint16_t>(nbs.size()));
      for (NodeId nb : nbs) put_u32(table, nb);
      if (mode == LayoutMode::InlineLowDim) {
        for (NodeId nb : nbs) {
          for (Eigen::Index j = 0; j < img.d_low_; ++j) {
            put_f32(table, ds_low->matrix()(static_cast<Eigen::Index>(nb), j));
          }
        }
      }
    }
  }

  if (mode == LayoutMode::SeparateLowDim) {
    img.lowdim_table_.reserve(n * static_cast<std::size_t>(img.d_low_) * 4);
    for (Eigen::Index i = 0; i < ds_low->size(); ++i) {
      for (Eigen::Index j = 0; j < img.d_low_; ++j) {
        put_f32(img.lowdim_table_, ds_low->matrix()(i, j));
      }
    }
  }

  img.highdim_table_.reserve(n * static_cast<std::size_t>(img.d_high_) * 4);
  for (Eigen::Index i = 0; i < ds_high.size(); ++i) {
    for (Eigen::Index j = 0; j < img.d_high_; ++j) {
      put_f32(img.highdim_table_, ds_high.matrix()(i, j));
    }
  }

  img.index_offsets();
  return img;
}

void StorageImage::index_offsets() {
  record_offset_.assign(num_layers_, std::vector<std::int64_t>(n_, -1));
  for (std::uint32_t l = 0; l < num_layers_; ++l) {
    const auto& table = layer_tables_[l];
    std::size_t pos = 0;
    for (NodeId id = 0; id < n_; ++id) {
      if (max_levels_[id] < l) continue;
      if (pos + 2 > table.size()) {
        throw std::runtime_error("storage image: truncated index table at layer " + std::to_string(l));
      }
      record_offset_[l][id] = static_cast<std::int64_t>(pos);
      std::size_t deg = get_u16(table.data() + pos);
      pos += record_bytes(deg);
    }
    if (pos != table.size()) {
      throw std::runtime_error("storage image: index table size mismatch at layer " + std::to_string(l));
    }
  }
}

StorageImage StorageImage::from_parts(LayoutMode mode, std::uint32_t n, std::uint32_t num_layers,
                                      Eigen::Index d_high, Eigen::Index d_low,
                                      std::vector<std::uint8_t> max_levels,
                                      std::vector<std::vector<std::uint8_t>> layer_tables,
                                      std::vector<std::uint8_t> lowdim_table,
                                      std::vector<std::uint8_t> highdim_table) {
  StorageImage img;
  img.mode_ = mode;
  img.n_ = n;
  img.num_layers_ = num_layers;
  img.d_high_ = d_high;
  img.d_low_ = d_low;
  img.max_levels_ = std::move(max_levels);
  img.layer_tables_ = std::move(layer_tables);
  img.lowdim_table_ = std::move(lowdim_table);
  img.highdim_table_ = std::move(highdim_table);
  if (img.max_levels_.size() != n || img.layer_tables_.size() != num_layers) {
    throw std::runtime_error("storage image: inconsistent part sizes");
  }
  if (img.highdim_table_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(d_high) * 4) {
    throw std::runtime_error("storage image: high-dim table size mismatch");
  }
  const std::size_t want_low =
      mode == LayoutMode::SeparateLowDim ? static_cast<std::size_t>(n) * static_cast<std::size_t>(d_low) * 4 : 0;
  if (img.lowdim_table_.size() != want_low) {
    throw std::runtime_error("storage image: low-dim table size mismatch");
  }
  img.index_offsets();
  return img;
}

void StorageImage::fetch_neighbor_record(NodeId node, std::uint32_t layer, NeighborRecord& out,
                                         TrafficCounters& tc) const {
  if (layer >= num_layers_ || node >= n_ || record_offset_[layer][node] < 0) {
    throw std::out_of_range("fetch_neighbor_record: node " + std::to_string(node) +
                            " absent at layer " + std::to_string(layer));
  }
  const auto& table = layer_tables_[layer];
  const std::uint8_t* p = table.data() + record_offset_[layer][node];
  const std::size_t deg = get_u16(p);

  out.ids.resize(deg);
  if (deg > 0) std::memcpy(out.ids.data(), p + 2, deg * 4);
  out.has_lowdim = mode_ == LayoutMode::InlineLowDim;

  std::uint64_t id_bytes = 2 + deg * 4;
  std::uint64_t low_bytes = 0;
  if (out.has_lowdim) {
    out.lowdim_data = reinterpret_cast<const float*>(p + 2 + deg * 4);
    out.lowdim_cols = d_low_;
    low_bytes = deg * static_cast<std::uint64_t>(d_low_) * 4;
  } else {
    out.lowdim_data = nullptr;
    out.lowdim_cols = 0;
  }

  tc.transactions += 1;
  tc.neighbor_index_transactions += 1;
  tc.neighbor_index_bytes += id_bytes;
  tc.lowdim_bytes += low_bytes;
  tc.bytes += id_bytes + low_bytes;
}

void StorageImage::fetch_lowdim(NodeId id, Eigen::Ref<Vector> out, TrafficCounters& tc) const {
  if (mode_ != LayoutMode::SeparateLowDim) {
    throw std::logic_error("fetch_lowdim: image has no separate low-dim table");
  }
  if (id >= n_) {
    throw std::out_of_range("fetch_lowdim: id out of range");
  }
  if (out.size() != d_low_) {
    throw std::invalid_argument("fetch_lowdim: output buffer size mismatch");
  }
  const std::uint64_t nbytes = static_cast<std::uint64_t>(d_low_) * 4;
  std::memcpy(out.data(), lowdim_table_.data() + static_cast<std::size_t>(id) * nbytes, nbytes);
  tc.transactions += 1;
  tc.lowdim_transactions += 1;
  tc.lowdim_bytes += nbytes;
  tc.bytes += nbytes;
}

void StorageImage::fetch_highdim(NodeId id, Eigen::Ref<Vector> out, TrafficCounters& tc) const {
  if (id >= n_) {
    throw std::out_of_range("fetch_highdim: id out of range");
  }
  if (out.size() != d_high_) {
    throw std::invalid_argument("fetch_highdim: output buffer size mismatch");
  }
  const std::uint64_t nbytes = static_cast<std::uint64_t>(d_high_) * 4;
  std::memcpy(out.data(), highdim_table_.data() + static_cast<std::size_t>(id) * nbytes, nbytes);
  tc.transactions += 1;
  tc.highdim_transactions += 1;
  tc.highdim_bytes += nbytes;
  tc.bytes += nbytes;
}

Vector StorageImage::fetch_lowdim(NodeId id, TrafficCounters& tc) const {
  Vector out(d_low_);
  fetch_lowdim(id, out, tc);
  return out;
}

Vector StorageImage::fetch_highdim(NodeId id, TrafficCounters& tc) const {
  Vector out(d_high_);
  fetch_highdim(id, out, tc);
  return out;
}

SizeReport StorageImage::size_report() const {
  SizeReport r;
  r.header_bytes = kFixedHeaderBytes + max_levels_.size();
  r.index_table_bytes.resize(num_layers_);
  for (std::uint32_t l = 0; l < num_layers_; ++l) {
    r.index_table_bytes[l] = layer_tables_[l].size();
  }
  r.lowdim_table_bytes = lowdim_table_.size();
  r.highdim_table_bytes = highdim_table_.size();
  if (mode_ == LayoutMode::InlineLowDim) {
    // Per record: everything past the u16 header and the id list.
    for (std::uint32_t l = 0; l < num_layers_; ++l) {
      const auto& table = layer_tables_[l];
      std::size_t pos = 0;
      while (pos < table.size()) {
        std::size_t deg = get_u16(table.data() + pos);
        r.inline_lowdim_payload_bytes += deg * static_cast<std::uint64_t>(d_low_) * 4;
        pos += record_bytes(deg);
      }
    }
  }
  r.total_bytes = r.header_bytes + r.index_bytes_total() + r.lowdim_table_bytes + r.highdim_table_bytes;
  return r;
}

}  // namespace phnsw
