#pragma once

#include "phnsw/core.hpp"
#include "phnsw/graph.hpp"
#include "phnsw/pca.hpp"
#include "phnsw/storage.hpp"

#include <filesystem>
#include <vector>

namespace phnsw {

/// Standard ANN benchmark vector files: repeated records of a little-endian
/// i32 dimension header followed by `dim` payload elements (f32 / i32 / u8).
/// Readers validate framing strictly and reject malformed files with the
/// offending byte offset; no partial datasets are ever returned.
Dataset read_fvecs(const std::filesystem::path& path);
Dataset read_bvecs(const std::filesystem::path& path);  // u8 payload widened to f32

using IdMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
IdMatrix read_ivecs(const std::filesystem::path& path);

void write_fvecs(const std::filesystem::path& path, const Dataset& ds);
void write_ivecs(const std::filesystem::path& path, const IdMatrix& rows);
void write_bvecs(const std::filesystem::path& path, const Dataset& ds);

// Artifact formats, all little-endian.
//   PCAM: magic "PCAM", u32 d_high, u32 d_low, f32 mean[d_high],
//         f32 components[d_low * d_high] row-major.
//   HNSG: magic "HNSG", u32 N, u32 L, u32 M, u64 seed, then per node:
//         u8 max_level, and per layer 0..max_level a u16 count + u32 ids.
//         The entry point is recovered as the lowest id at the top level.
//   PHDB: magic "PHDB", u8 version, u8 mode, u16 reserved, u32 N, u32 L,
//         u32 d_high, u32 d_low, u8 max_level[N], then the image tables
//         byte for byte as laid out in memory.
void save_pca(const std::filesystem::path& path, const PcaModel& m);
PcaModel load_pca(const std::filesystem::path& path);

void save_graph(const std::filesystem::path& path, const HnswGraph& g);
HnswGraph load_graph(const std::filesystem::path& path);

void save_image(const std::filesystem::path& path, const StorageImage& img);
StorageImage load_image(const std::filesystem::path& path);

}  // namespace phnsw
