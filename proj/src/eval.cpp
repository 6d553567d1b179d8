#include "phnsw/eval.hpp"

#include "phnsw/detail/rng.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace phnsw {

std::vector<ScoredId> brute_force_knn(const Dataset& ds, Eigen::Ref<const Vector> q,
                                      std::size_t K) {
  if (K < 1 || K > static_cast<std::size_t>(ds.size())) {
    throw std::invalid_argument("brute_force_knn: K must be in [1, N]");
  }
  std::vector<ScoredId> all(static_cast<std::size_t>(ds.size()));
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    all[static_cast<std::size_t>(i)] = {squared_distance(ds.matrix().row(i), q),
                                        static_cast<NodeId>(i)};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(K), all.end(),
                    scored_less);
  all.resize(K);
  return all;
}

GroundTruth ground_truth(const Dataset& base, const Dataset& queries, std::size_t K) {
  GroundTruth gt;
  gt.K = K;
  gt.per_query.reserve(static_cast<std::size_t>(queries.size()));
  for (Eigen::Index i = 0; i < queries.size(); ++i) {
    gt.per_query.push_back(brute_force_knn(base, queries.matrix().row(i), K));
  }
  return gt;
}

double recall_at_k(std::span<const ScoredId> result, std::span<const ScoredId> truth,
                   std::size_t K) {
  if (result.size() < K || truth.size() < K) {
    throw std::invalid_argument("recall_at_k: lists shorter than K");
  }
  std::unordered_set<NodeId> expected;
  for (std::size_t i = 0; i < K; ++i) expected.insert(truth[i].id);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < K; ++i) hits += expected.count(result[i].id);
  return static_cast<double>(hits) / static_cast<double>(K);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::hnsw_std: return "hnsw_std";
    case Variant::phnsw_sep: return "phnsw_sep";
    case Variant::phnsw_inline: return "phnsw_inline";
  }
  return "?";
}

LayoutMode variant_layout(Variant v) {
  switch (v) {
    case Variant::hnsw_std: return LayoutMode::HighDimOnly;
    case Variant::phnsw_sep: return LayoutMode::SeparateLowDim;
    case Variant::phnsw_inline: return LayoutMode::InlineLowDim;
  }
  return LayoutMode::HighDimOnly;
}

namespace {

SearchResult run_one(const Dataset& queries, Eigen::Index qi, const HnswGraph& g,
                     const StorageImage& img, const PcaModel& pca, Variant variant,
                     const SearchParams& params) {
  if (variant == Variant::hnsw_std) {
    return hnsw_search(queries.matrix().row(qi), g, img, params);
  }
  return phnsw_search(queries.matrix().row(qi), g, img, pca, params);
}

}  // namespace

BenchReport run_bench(const Dataset& queries, const GroundTruth& truth, const HnswGraph& g,
                      const StorageImage& img, const PcaModel& pca, Variant variant,
                      const SearchParams& params, const BenchTiming& timing) {
  if (img.mode() != variant_layout(variant)) {
    throw std::invalid_argument(std::string("run_bench: image mode does not match variant ") +
                                variant_name(variant));
  }
  if (truth.per_query.size() != static_cast<std::size_t>(queries.size())) {
    throw std::invalid_argument("run_bench: ground truth / query count mismatch");
  }
  if (truth.K < params.K) {
    throw std::invalid_argument("run_bench: ground truth K too small");
  }

  BenchReport r;
  r.variant = variant;
  r.layer_k0 = params.k_config.k0;
  r.layer_k1 = params.k_config.k1;
  r.layer_k_rest = params.k_config.k_rest;
  r.ef_base = params.ef_base;
  r.ef_upper = params.ef_upper;
  r.K = params.K;
  r.num_queries = static_cast<std::uint64_t>(queries.size());

  // Measured pass: recall and exact counters (deterministic).
  double recall_sum = 0.0;
  for (Eigen::Index qi = 0; qi < queries.size(); ++qi) {
    SearchResult res = run_one(queries, qi, g, img, pca, variant, params);
    recall_sum += recall_at_k(res.entries, truth.per_query[static_cast<std::size_t>(qi)], params.K);
    r.traffic += res.stats.traffic;
    r.lowdim_evals += res.stats.lowdim_evals;
    r.highdim_evals += res.stats.highdim_evals;
    r.expansions += res.stats.expansions;
    r.max_highdim_evals_per_expansion =
        std::max(r.max_highdim_evals_per_expansion, res.stats.max_highdim_evals_per_expansion);
    r.expansion_bound_violations += res.stats.expansion_bound_violations;
  }
  r.recall = recall_sum / static_cast<double>(queries.size());

  // Timing: warm passes first, then the median QPS of the timed passes.
  // Sequential single-threaded by design; the query set is looped so a pass
  // is long enough to measure.
  using clock = std::chrono::steady_clock;
  int loops = 1;
  {
    auto t0 = clock::now();
    for (Eigen::Index qi = 0; qi < queries.size(); ++qi) {
      run_one(queries, qi, g, img, pca, variant, params);
    }
    double sec = std::chrono::duration<double>(clock::now() - t0).count();
    if (sec > 0.0 && sec < timing.min_pass_seconds) {
      loops = static_cast<int>(timing.min_pass_seconds / sec) + 1;
    }
  }
  for (int w = 1; w < timing.warmup_passes; ++w) {
    for (Eigen::Index qi = 0; qi < queries.size(); ++qi) {
      run_one(queries, qi, g, img, pca, variant, params);
    }
  }
  std::vector<double> qps_samples;
  for (int pass = 0; pass < timing.timed_passes; ++pass) {
    auto t0 = clock::now();
    for (int rep = 0; rep < loops; ++rep) {
      for (Eigen::Index qi = 0; qi < queries.size(); ++qi) {
        run_one(queries, qi, g, img, pca, variant, params);
      }
    }
    double sec = std::chrono::duration<double>(clock::now() - t0).count();
    qps_samples.push_back(static_cast<double>(queries.size()) * loops / std::max(sec, 1e-12));
  }
  std::sort(qps_samples.begin(), qps_samples.end());
  r.qps = qps_samples[qps_samples.size() / 2];
  return r;
}

std::vector<BenchReport> sweep_k(const Dataset& queries, const GroundTruth& truth,
                                 const HnswGraph& g, const StorageImage& img,
                                 const PcaModel& pca, Variant variant,
                                 std::uint32_t layer, std::span<const std::uint32_t> k_values,
                                 const SearchParams& params, const BenchTiming& timing) {
  if (layer > 1) {
    throw std::invalid_argument("sweep_k: only layers 0 and 1 are sweepable");
  }
  std::vector<BenchReport> out;
  out.reserve(k_values.size());
  for (std::uint32_t k : k_values) {
    SearchParams p = params;
    if (layer == 0) {
      p.k_config.k0 = k;
    } else {
      p.k_config.k1 = k;
    }
    out.push_back(run_bench(queries, truth, g, img, pca, variant, p, timing));
  }
  return out;
}

namespace {

// RFC 4180: quote when the field contains a comma, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, std::span<const BenchReport> reports) {
  os << "variant,layer_k0,layer_k1,recall_at_10,qps,transactions,bytes,"
        "energy_ddr4_pj,energy_hbm_pj\r\n";
  for (const BenchReport& r : reports) {
    os << csv_field(variant_name(r.variant)) << ',' << r.layer_k0 << ',' << r.layer_k1 << ','
       << fmt(r.recall) << ',' << fmt(r.qps) << ',' << fmt(r.transactions_per_query()) << ','
       << fmt(r.bytes_per_query()) << ',' << fmt(r.energy_per_query_pj(kDdr4PjPerBit)) << ','
       << fmt(r.energy_per_query_pj(kHbm1PjPerBit)) << "\r\n";
  }
}

std::string to_csv(std::span<const BenchReport> reports) {
  std::ostringstream os;
  write_csv(os, reports);
  return os.str();
}

std::pair<Dataset, Dataset> synthetic_mixture(std::size_t n_base, std::size_t n_queries,
                                              Eigen::Index dim, std::size_t clusters,
                                              double center_scale, double decay,
                                              std::uint64_t seed) {
  if (n_base < 1 || clusters < 1 || dim < 1) {
    throw std::invalid_argument("synthetic_mixture: bad shape");
  }
  std::mt19937_64 rng(seed);

  Eigen::MatrixXd scales(1, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    scales(0, j) = std::pow(decay, static_cast<double>(j));
  }
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(clusters), dim);
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      centers(c, j) = center_scale * scales(0, j) * detail::standard_normal(rng);
    }
  }

  auto draw = [&](std::size_t n) {
    Matrix points(static_cast<Eigen::Index>(n), dim);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      Eigen::Index c = static_cast<Eigen::Index>(rng() % clusters);
      for (Eigen::Index j = 0; j < dim; ++j) {
        points(i, j) = static_cast<Scalar>(centers(c, j) +
                                           scales(0, j) * detail::standard_normal(rng));
      }
    }
    return Dataset(std::move(points));
  };

  Dataset base = draw(n_base);
  Dataset queries = draw(n_queries);
  return {std::move(base), std::move(queries)};
}

}  // namespace phnsw
