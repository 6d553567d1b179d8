#pragma once

#include "phnsw/core.hpp"
#include "phnsw/graph.hpp"
#include "phnsw/pca.hpp"
#include "phnsw/search.hpp"
#include "phnsw/storage.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace phnsw {

/// Exact K nearest neighbors of q by squared L2 full scan, ties to the lower
/// id, ascending.
std::vector<ScoredId> brute_force_knn(const Dataset& ds, Eigen::Ref<const Vector> q,
                                      std::size_t K);

/// Exact top-K lists for every query.
struct GroundTruth {
  std::size_t K = 0;
  std::vector<std::vector<ScoredId>> per_query;
};

GroundTruth ground_truth(const Dataset& base, const Dataset& queries, std::size_t K);

/// |top-K(result) ∩ top-K(truth)| / K.
double recall_at_k(std::span<const ScoredId> result, std::span<const ScoredId> truth,
                   std::size_t K);

enum class Variant { hnsw_std, phnsw_sep, phnsw_inline };

const char* variant_name(Variant v);
LayoutMode variant_layout(Variant v);

struct BenchTiming {
  int warmup_passes = 3;
  int timed_passes = 5;          // QPS is the median over these
  double min_pass_seconds = 0.25;  // query set is looped until a pass is at least this long
};

struct BenchReport {
  Variant variant = Variant::hnsw_std;
  std::uint32_t layer_k0 = 0;
  std::uint32_t layer_k1 = 0;
  std::uint32_t layer_k_rest = 0;
  std::uint32_t ef_base = 0;
  std::uint32_t ef_upper = 0;
  std::size_t K = 0;
  std::uint64_t num_queries = 0;

  double recall = 0.0;  // mean recall@K over all queries
  double qps = 0.0;

  // Exact totals over one pass of the query set.
  TrafficCounters traffic;
  std::uint64_t lowdim_evals = 0;
  std::uint64_t highdim_evals = 0;
  std::uint64_t expansions = 0;
  std::uint32_t max_highdim_evals_per_expansion = 0;
  std::uint64_t expansion_bound_violations = 0;

  double energy_total_pj(double pj_per_bit) const { return energy_estimate(traffic, pj_per_bit); }
  double energy_per_query_pj(double pj_per_bit) const {
    return energy_total_pj(pj_per_bit) / static_cast<double>(num_queries);
  }
  double transactions_per_query() const {
    return static_cast<double>(traffic.transactions) / static_cast<double>(num_queries);
  }
  double bytes_per_query() const {
    return static_cast<double>(traffic.bytes) / static_cast<double>(num_queries);
  }
};

/// Run every query through the variant's search on the given image, collect
/// mean recall@K against `truth`, aggregate counters from one deterministic
/// pass, and time QPS single-threaded (warm, median of timed passes).
/// The image mode must match the variant.
BenchReport run_bench(const Dataset& queries, const GroundTruth& truth, const HnswGraph& g,
                      const StorageImage& img, const PcaModel& pca, Variant variant,
                      const SearchParams& params, const BenchTiming& timing = {});

/// One run_bench point per k, with the filter size of `layer` (0 or 1)
/// swept and the other sizes held at `params.k_config`.
std::vector<BenchReport> sweep_k(const Dataset& queries, const GroundTruth& truth,
                                 const HnswGraph& g, const StorageImage& img,
                                 const PcaModel& pca, Variant variant,
                                 std::uint32_t layer, std::span<const std::uint32_t> k_values,
                                 const SearchParams& params, const BenchTiming& timing = {});

/// CSV with the fixed header
/// variant,layer_k0,layer_k1,recall_at_10,qps,transactions,bytes,energy_ddr4_pj,energy_hbm_pj
/// one row per report; traffic and energy columns are per-query means.
void write_csv(std::ostream& os, std::span<const BenchReport> reports);
std::string to_csv(std::span<const BenchReport> reports);

/// Seeded Gaussian-mixture dataset with a geometrically decaying per-dimension
/// scale (decay^j on dimension j), so a low-dimensional projection captures
/// most of the variance the way PCA-friendly benchmark data does. Returns
/// {base, queries} drawn from the same mixture.
std::pair<Dataset, Dataset> synthetic_mixture(std::size_t n_base, std::size_t n_queries,
                                              Eigen::Index dim, std::size_t clusters,
                                              double center_scale, double decay,
                                              std::uint64_t seed);

}  // namespace phnsw
