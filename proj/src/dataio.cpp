#include "phnsw/dataio.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace phnsw {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what,
                       std::uint64_t offset) {
  throw std::runtime_error(path.string() + ": " + what + " at byte " + std::to_string(offset));
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(path.string() + ": cannot open for reading");
  }
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(path.string() + ": cannot open for writing");
  }
  return out;
}

std::uint64_t stat_size(const std::filesystem::path& path) {
  std::error_code ec;
  auto size = std::filesystem::file_size(path, ec);
  if (ec) {
    throw std::runtime_error(path.string() + ": " + ec.message());
  }
  return size;
}

template <typename T>
void read_raw(std::istream& in, T* dst, std::size_t count, const std::filesystem::path& path,
              std::uint64_t offset) {
  if (count == 0) return;
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count * sizeof(T)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(T))) {
    fail(path, "truncated read", offset);
  }
}

template <typename T>
void write_raw(std::ostream& out, const T* src, std::size_t count) {
  if (count == 0) return;
  out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(count * sizeof(T)));
}

// Shared framing for fvecs/ivecs/bvecs. Returns N and leaves the stream at
// the first record.
std::pair<std::size_t, Eigen::Index> vec_file_shape(std::ifstream& in,
                                                    const std::filesystem::path& path,
                                                    std::size_t elem_size) {
  const std::uint64_t total = stat_size(path);
  if (total < 4) {
    fail(path, "file too short for a record header", 0);
  }
  std::int32_t dim = 0;
  read_raw(in, &dim, 1, path, 0);
  if (dim <= 0) {
    fail(path, "non-positive dimension " + std::to_string(dim), 0);
  }
  const std::uint64_t record = 4 + static_cast<std::uint64_t>(dim) * elem_size;
  if (total % record != 0) {
    fail(path, "length " + std::to_string(total) + " not a multiple of record size " +
                   std::to_string(record),
         total - total % record);
  }
  in.seekg(0);
  return {static_cast<std::size_t>(total / record), static_cast<Eigen::Index>(dim)};
}

template <typename Elem, typename Store>
void read_vec_records(std::ifstream& in, const std::filesystem::path& path, std::size_t n,
                      Eigen::Index dim, Store& out) {
  std::vector<Elem> row(static_cast<std::size_t>(dim));
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::int32_t d = 0;
    read_raw(in, &d, 1, path, offset);
    if (d != dim) {
      fail(path, "record " + std::to_string(i) + " has dim " + std::to_string(d) +
                     ", expected " + std::to_string(dim),
           offset);
    }
    offset += 4;
    read_raw(in, row.data(), row.size(), path, offset);
    offset += row.size() * sizeof(Elem);
    for (Eigen::Index j = 0; j < dim; ++j) {
      out(static_cast<Eigen::Index>(i), j) =
          static_cast<typename Store::Scalar>(row[static_cast<std::size_t>(j)]);
    }
  }
}

}  // namespace

Dataset read_fvecs(const std::filesystem::path& path) {
  auto in = open_in(path);
  auto [n, dim] = vec_file_shape(in, path, 4);
  if (n == 0) {
    fail(path, "empty file (datasets need at least one vector)", 0);
  }
  Matrix m(static_cast<Eigen::Index>(n), dim);
  read_vec_records<float>(in, path, n, dim, m);
  return Dataset(std::move(m));
}

Dataset read_bvecs(const std::filesystem::path& path) {
  auto in = open_in(path);
  auto [n, dim] = vec_file_shape(in, path, 1);
  if (n == 0) {
    fail(path, "empty file (datasets need at least one vector)", 0);
  }
  Matrix m(static_cast<Eigen::Index>(n), dim);
  read_vec_records<std::uint8_t>(in, path, n, dim, m);
  return Dataset(std::move(m));
}

IdMatrix read_ivecs(const std::filesystem::path& path) {
  auto in = open_in(path);
  auto [n, dim] = vec_file_shape(in, path, 4);
  if (n == 0) {
    fail(path, "empty file", 0);
  }
  IdMatrix m(static_cast<Eigen::Index>(n), dim);
  read_vec_records<std::int32_t>(in, path, n, dim, m);
  return m;
}

void write_fvecs(const std::filesystem::path& path, const Dataset& ds) {
  auto out = open_out(path);
  const std::int32_t dim = static_cast<std::int32_t>(ds.dim());
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    write_raw(out, &dim, 1);
    write_raw(out, ds.matrix().row(i).data(), static_cast<std::size_t>(ds.dim()));
  }
}

void write_ivecs(const std::filesystem::path& path, const IdMatrix& rows) {
  auto out = open_out(path);
  const std::int32_t dim = static_cast<std::int32_t>(rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    write_raw(out, &dim, 1);
    write_raw(out, rows.row(i).data(), static_cast<std::size_t>(rows.cols()));
  }
}

void write_bvecs(const std::filesystem::path& path, const Dataset& ds) {
  auto out = open_out(path);
  const std::int32_t dim = static_cast<std::int32_t>(ds.dim());
  std::vector<std::uint8_t> row(static_cast<std::size_t>(ds.dim()));
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      float v = ds.matrix()(i, j);
      if (v < 0.0f || v > 255.0f || v != static_cast<float>(static_cast<std::uint8_t>(v))) {
        throw std::invalid_argument(path.string() + ": value " + std::to_string(v) +
                                    " not representable as u8");
      }
      row[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(v);
    }
    write_raw(out, &dim, 1);
    write_raw(out, row.data(), row.size());
  }
}

namespace {

void read_magic(std::ifstream& in, const std::filesystem::path& path, const char expect[4]) {
  char magic[4] = {};
  read_raw(in, magic, 4, path, 0);
  if (std::memcmp(magic, expect, 4) != 0) {
    fail(path, std::string("bad magic, expected \"") + std::string(expect, 4) + "\"", 0);
  }
}

}  // namespace

void save_pca(const std::filesystem::path& path, const PcaModel& m) {
  auto out = open_out(path);
  write_raw(out, "PCAM", 4);
  const std::uint32_t d_high = static_cast<std::uint32_t>(m.d_high());
  const std::uint32_t d_low = static_cast<std::uint32_t>(m.d_low());
  write_raw(out, &d_high, 1);
  write_raw(out, &d_low, 1);
  write_raw(out, m.mean.data(), static_cast<std::size_t>(m.mean.size()));
  write_raw(out, m.components.data(), static_cast<std::size_t>(m.components.size()));
}

PcaModel load_pca(const std::filesystem::path& path) {
  auto in = open_in(path);
  read_magic(in, path, "PCAM");
  std::uint32_t d_high = 0, d_low = 0;
  read_raw(in, &d_high, 1, path, 4);
  read_raw(in, &d_low, 1, path, 8);
  if (d_high == 0 || d_low == 0 || d_low > d_high) {
    fail(path, "invalid dimensions", 4);
  }
  const std::uint64_t expect = 12 + 4ull * d_high + 4ull * d_low * d_high;
  if (stat_size(path) != expect) {
    fail(path, "length does not match header (expected " + std::to_string(expect) + ")",
         stat_size(path));
  }
  PcaModel m;
  m.mean.resize(d_high);
  m.components.resize(d_low, d_high);
  read_raw(in, m.mean.data(), d_high, path, 12);
  read_raw(in, m.components.data(), static_cast<std::size_t>(d_low) * d_high, path,
           12 + 4ull * d_high);
  return m;
}

void save_graph(const std::filesystem::path& path, const HnswGraph& g) {
  auto out = open_out(path);
  write_raw(out, "HNSG", 4);
  const std::uint32_t n = static_cast<std::uint32_t>(g.size());
  const std::uint32_t layers = g.num_layers();
  write_raw(out, &n, 1);
  write_raw(out, &layers, 1);
  write_raw(out, &g.M, 1);
  write_raw(out, &g.build_seed, 1);
  for (NodeId id = 0; id < n; ++id) {
    write_raw(out, &g.max_levels[id], 1);
    for (std::uint32_t l = 0; l <= g.max_levels[id]; ++l) {
      const auto& nbs = g.layers[l][id];
      const std::uint16_t count = static_cast<std::uint16_t>(nbs.size());
      write_raw(out, &count, 1);
      write_raw(out, nbs.data(), nbs.size());
    }
  }
}

HnswGraph load_graph(const std::filesystem::path& path) {
  auto in = open_in(path);
  read_magic(in, path, "HNSG");
  HnswGraph g;
  std::uint32_t n = 0, layers = 0;
  read_raw(in, &n, 1, path, 4);
  read_raw(in, &layers, 1, path, 8);
  read_raw(in, &g.M, 1, path, 12);
  read_raw(in, &g.build_seed, 1, path, 16);
  if (n == 0 || layers == 0 || g.M < 2) {
    fail(path, "invalid graph header", 4);
  }
  g.max_levels.resize(n);
  g.layers.assign(layers, std::vector<std::vector<NodeId>>(n));
  std::uint64_t offset = 24;
  bool entry_set = false;
  for (NodeId id = 0; id < n; ++id) {
    read_raw(in, &g.max_levels[id], 1, path, offset);
    offset += 1;
    if (g.max_levels[id] >= layers) {
      fail(path, "node level exceeds layer count", offset - 1);
    }
    for (std::uint32_t l = 0; l <= g.max_levels[id]; ++l) {
      std::uint16_t count = 0;
      read_raw(in, &count, 1, path, offset);
      offset += 2;
      auto& nbs = g.layers[l][id];
      nbs.resize(count);
      read_raw(in, nbs.data(), count, path, offset);
      for (NodeId nb : nbs) {
        if (nb >= n || nb == id) {
          fail(path, "invalid neighbor id " + std::to_string(nb), offset);
        }
      }
      offset += 4ull * count;
    }
    if (!entry_set && g.max_levels[id] == layers - 1) {
      g.entry_point = id;
      entry_set = true;
    }
  }
  if (!entry_set) {
    fail(path, "no node at top layer", offset);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(path, "trailing bytes", offset);
  }
  return g;
}

void save_image(const std::filesystem::path& path, const StorageImage& img) {
  auto out = open_out(path);
  write_raw(out, "PHDB", 4);
  const std::uint8_t version = 1;
  const std::uint8_t mode = static_cast<std::uint8_t>(img.mode());
  const std::uint16_t reserved = 0;
  const std::uint32_t n = img.num_points();
  const std::uint32_t layers = img.num_layers();
  const std::uint32_t d_high = static_cast<std::uint32_t>(img.d_high());
  const std::uint32_t d_low = static_cast<std::uint32_t>(img.d_low());
  write_raw(out, &version, 1);
  write_raw(out, &mode, 1);
  write_raw(out, &reserved, 1);
  write_raw(out, &n, 1);
  write_raw(out, &layers, 1);
  write_raw(out, &d_high, 1);
  write_raw(out, &d_low, 1);
  write_raw(out, img.max_levels().data(), img.max_levels().size());
  for (const auto& table : img.layer_tables()) {
    write_raw(out, table.data(), table.size());
  }
  write_raw(out, img.lowdim_table().data(), img.lowdim_table().size());
  write_raw(out, img.highdim_table().data(), img.highdim_table().size());
}

StorageImage load_image(const std::filesystem::path& path) {
  auto in = open_in(path);
  read_magic(in, path, "PHDB");
  std::uint8_t version = 0, mode = 0;
  std::uint16_t reserved = 0;
  std::uint32_t n = 0, layers = 0, d_high = 0, d_low = 0;
  read_raw(in, &version, 1, path, 4);
  read_raw(in, &mode, 1, path, 5);
  read_raw(in, &reserved, 1, path, 6);
  read_raw(in, &n, 1, path, 8);
  read_raw(in, &layers, 1, path, 12);
  read_raw(in, &d_high, 1, path, 16);
  read_raw(in, &d_low, 1, path, 20);
  if (version != 1) {
    fail(path, "unsupported version " + std::to_string(version), 4);
  }
  if (mode > 2 || n == 0 || layers == 0 || d_high == 0) {
    fail(path, "invalid image header", 4);
  }
  const LayoutMode layout = static_cast<LayoutMode>(mode);

  std::vector<std::uint8_t> max_levels(n);
  std::uint64_t offset = StorageImage::kFixedHeaderBytes;
  read_raw(in, max_levels.data(), n, path, offset);
  offset += n;

  // One sequential read of all tables, then split in memory: the alternative
  // of probing each record header in the stream costs a seek per node per
  // layer.
  const std::uint64_t total = stat_size(path);
  const std::uint64_t low_table_bytes =
      layout == LayoutMode::SeparateLowDim ? 4ull * n * d_low : 0;
  const std::uint64_t high_table_bytes = 4ull * n * d_high;
  if (total < offset + low_table_bytes + high_table_bytes) {
    fail(path, "file too short for its vector tables", total);
  }
  const std::uint64_t all_index_bytes = total - offset - low_table_bytes - high_table_bytes;
  std::vector<std::uint8_t> index_blob(all_index_bytes);
  read_raw(in, index_blob.data(), all_index_bytes, path, offset);

  std::vector<std::vector<std::uint8_t>> tables(layers);
  const std::size_t low_elems = layout == LayoutMode::InlineLowDim ? d_low : 0;
  std::uint64_t pos = 0;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::uint64_t begin = pos;
    for (NodeId id = 0; id < n; ++id) {
      if (max_levels[id] < l) continue;
      if (pos + 2 > all_index_bytes) {
        fail(path, "truncated index table", offset + pos);
      }
      std::uint16_t deg = 0;
      std::memcpy(&deg, index_blob.data() + pos, 2);
      pos += 2 + 4ull * deg + 4ull * deg * low_elems;
    }
    if (pos > all_index_bytes) {
      fail(path, "truncated index table", offset + begin);
    }
    tables[l].assign(index_blob.begin() + static_cast<std::ptrdiff_t>(begin),
                     index_blob.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  if (pos != all_index_bytes) {
    fail(path, "length does not match tables (expected " +
                   std::to_string(offset + pos + low_table_bytes + high_table_bytes) + ")",
         total);
  }
  offset += all_index_bytes;

  std::vector<std::uint8_t> lowdim(low_table_bytes);
  read_raw(in, lowdim.data(), low_table_bytes, path, offset);
  offset += low_table_bytes;
  std::vector<std::uint8_t> highdim(high_table_bytes);
  read_raw(in, highdim.data(), high_table_bytes, path, offset);

  return StorageImage::from_parts(layout, n, layers, d_high, d_low, std::move(max_levels),
                                  std::move(tables), std::move(lowdim), std::move(highdim));
}

}  // namespace phnsw
