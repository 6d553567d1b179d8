// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 2, 5, 6 and 8 inspect the desk-scale run made for
// criterion 4, so that context is built once.
//
// Set PHNSW_SIFT_DIR to a directory with sift_base.fvecs / sift_query.fvecs /
// sift_groundtruth.ivecs to append the long-running full-scale recall check
// to criterion 4.

#include "phnsw/dataio.hpp"
#include "phnsw/eval.hpp"
#include "phnsw/graph.hpp"
#include "phnsw/pca.hpp"
#include "phnsw/search.hpp"
#include "phnsw/storage.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace phnsw;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct DeskContext {
  Dataset base;
  Dataset queries;
  PcaModel pca;
  Dataset low;
  HnswGraph graph;
  StorageImage img_std;
  StorageImage img_sep;
  StorageImage img_inline;
  GroundTruth truth;
  BenchReport rep_std;
  BenchReport rep_sep;
  BenchReport rep_inline;
  double build_seconds = 0.0;
};

SearchParams desk_params() {
  SearchParams p;
  p.ef_upper = 1;
  p.ef_base = 10;
  p.K = 10;
  p.k_config = {16, 8, 3};
  return p;
}

DeskContext make_desk_context() {
  const double t0 = now_seconds();
  auto [base, queries] = synthetic_mixture(10000, 100, 128, 32, 1.5, 0.95, 42);

  PcaModel pca = pca_fit(base, 15);
  Dataset low = pca_project_all(pca, base);

  BuildParams bp;
  bp.M = 16;
  bp.ef_construction = 200;
  bp.rng_seed = 43;
  HnswGraph graph = hnsw_build(base, bp);
  validate_graph(graph);

  StorageImage img_std = build_image(graph, base, nullptr, LayoutMode::HighDimOnly);
  StorageImage img_sep = build_image(graph, base, &low, LayoutMode::SeparateLowDim);
  StorageImage img_inline = build_image(graph, base, &low, LayoutMode::InlineLowDim);
  GroundTruth truth = ground_truth(base, queries, 10);

  DeskContext ctx{std::move(base),    std::move(queries),    std::move(pca),
                  std::move(low),     std::move(graph),      std::move(img_std),
                  std::move(img_sep), std::move(img_inline), std::move(truth),
                  {},                 {},                    {}};

  BenchTiming quick;
  quick.warmup_passes = 1;
  quick.timed_passes = 3;
  quick.min_pass_seconds = 0.1;
  SearchParams params = desk_params();
  ctx.rep_std = run_bench(ctx.queries, ctx.truth, ctx.graph, ctx.img_std, ctx.pca,
                          Variant::hnsw_std, params, quick);
  ctx.rep_sep = run_bench(ctx.queries, ctx.truth, ctx.graph, ctx.img_sep, ctx.pca,
                          Variant::phnsw_sep, params, quick);
  ctx.rep_inline = run_bench(ctx.queries, ctx.truth, ctx.graph, ctx.img_inline, ctx.pca,
                             Variant::phnsw_inline, params, quick);
  ctx.build_seconds = now_seconds() - t0;
  return ctx;
}

Outcome criterion_equivalence() {
  Outcome o;
  auto [base, queries] = synthetic_mixture(1000, 100, 16, 8, 1.2, 1.0, 7);
  PcaModel pca = PcaModel::identity(16);
  Dataset low = pca_project_all(pca, base);

  BuildParams bp;
  bp.M = 16;
  bp.ef_construction = 100;
  bp.rng_seed = 8;
  HnswGraph graph = hnsw_build(base, bp);
  StorageImage inline_img = build_image(graph, base, &low, LayoutMode::InlineLowDim);
  StorageImage std_img = build_image(graph, base, nullptr, LayoutMode::HighDimOnly);

  SearchParams params;
  params.ef_base = 10;
  params.K = 10;
  params.k_config = {2 * graph.M, graph.M, graph.M};  // filter as wide as a neighbor list
  params.lowdim_threshold_disabled = true;

  std::size_t mismatches = 0;
  for (Eigen::Index qi = 0; qi < queries.size(); ++qi) {
    SearchResult filtered =
        phnsw_search(queries.matrix().row(qi), graph, inline_img, pca, params);
    SearchResult baseline = hnsw_search(queries.matrix().row(qi), graph, std_img, params);
    if (filtered.entries.size() != baseline.entries.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < filtered.entries.size(); ++i) {
      if (!(filtered.entries[i] == baseline.entries[i])) {
        ++mismatches;
        break;
      }
    }
  }
  o.pass = mismatches == 0;
  std::ostringstream d;
  d << "identity projection, open filter: " << (100 - mismatches) << "/100 queries identical"
    << " (ids and order)";
  o.detail = d.str();
  return o;
}

Outcome criterion_bounded_work(const DeskContext& ctx) {
  Outcome o;
  const std::uint64_t violations =
      ctx.rep_sep.expansion_bound_violations + ctx.rep_inline.expansion_bound_violations;
  const std::uint32_t worst = std::max(ctx.rep_sep.max_highdim_evals_per_expansion,
                                       ctx.rep_inline.max_highdim_evals_per_expansion);
  o.pass = violations == 0 && worst <= 16;
  std::ostringstream d;
  d << "per-expansion high-dim evals <= k on every filtered query: max " << worst
    << "/16, violations " << violations;
  o.detail = d.str();
  return o;
}

Outcome criterion_rank_topk() {
  Outcome o;
  std::mt19937_64 rng(2025);
  std::size_t failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 1 + rng() % 32;
    std::vector<ScoredId> values;
    for (std::size_t i = 0; i < n; ++i) {
      values.push_back({static_cast<float>(rng() % 6), static_cast<NodeId>(rng() % 512)});
    }
    std::size_t k = 1 + rng() % n;
    auto got = rank_topk(values, k);

    auto want = values;
    std::stable_sort(want.begin(), want.end(),
                     [](const ScoredId& a, const ScoredId& b) { return a.dist < b.dist; });
    want.resize(k);
    if (got.size() != want.size() ||
        !std::equal(got.begin(), got.end(), want.begin(),
                    [](const ScoredId& a, const ScoredId& b) { return a == b; })) {
      ++failures;
    }
  }
  o.pass = failures == 0;
  std::ostringstream d;
  d << "counting-rank filter vs stable-sort oracle: " << (1000 - failures)
    << "/1000 instances exact";
  o.detail = d.str();
  return o;
}

Outcome criterion_recall(const DeskContext& ctx) {
  Outcome o;
  const double filtered = ctx.rep_inline.recall;
  const double baseline = ctx.rep_std.recall;
  const double gap = std::abs(filtered - baseline);
  bool pass = filtered >= 0.85 && gap <= 0.05;
  std::ostringstream d;
  d << "desk scale (10k base, 100 queries): filtered recall@10 " << filtered << " (>= 0.85), "
    << "baseline " << baseline << ", |gap| " << gap << " (<= 0.05)";

  if (const char* sift_dir = std::getenv("PHNSW_SIFT_DIR")) {
    const std::string dir(sift_dir);
    Dataset base = read_fvecs(dir + "/sift_base.fvecs");
    Dataset queries = read_fvecs(dir + "/sift_query.fvecs");
    IdMatrix gt_ids = read_ivecs(dir + "/sift_groundtruth.ivecs");

    PcaModel pca = pca_fit(base, 15);
    Dataset low = pca_project_all(pca, base);
    BuildParams bp;
    bp.M = 16;
    bp.ef_construction = 200;
    bp.rng_seed = 43;
    HnswGraph graph = hnsw_build(base, bp);
    StorageImage img = build_image(graph, base, &low, LayoutMode::InlineLowDim);

    GroundTruth truth;
    truth.K = 10;
    truth.per_query.resize(static_cast<std::size_t>(queries.size()));
    for (Eigen::Index i = 0; i < queries.size(); ++i) {
      for (std::size_t j = 0; j < 10; ++j) {
        NodeId id = static_cast<NodeId>(gt_ids(i, static_cast<Eigen::Index>(j)));
        truth.per_query[static_cast<std::size_t>(i)].push_back(
            {squared_distance(base.matrix().row(id), queries.matrix().row(i)), id});
      }
    }
    BenchTiming quick;
    quick.warmup_passes = 0;
    quick.timed_passes = 1;
    quick.min_pass_seconds = 0.0;
    BenchReport full = run_bench(queries, truth, graph, img, pca, Variant::phnsw_inline,
                                 desk_params(), quick);
    pass = pass && std::abs(full.recall - 0.92) <= 0.02;
    d << "; sift1m recall@10 " << full.recall << " (target 0.92 +/- 0.02)";
  }
  o.pass = pass;
  o.detail = d.str();
  return o;
}

Outcome criterion_sweep(const DeskContext& ctx) {
  Outcome o;
  SearchParams params = desk_params();
  std::vector<std::uint32_t> ks{12, 14, 16, 18};
  BenchTiming quick;
  quick.warmup_passes = 1;
  quick.timed_passes = 1;
  quick.min_pass_seconds = 0.0;
  auto points = sweep_k(ctx.queries, ctx.truth, ctx.graph, ctx.img_inline, ctx.pca,
                        Variant::phnsw_inline, 0, ks, params, quick);

  bool monotone = true;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (points[i + 1].recall < points[i].recall - 0.01) monotone = false;
  }

  // The wall-clock gap between k0=16 and k0=18 is a few percent here, so the
  // two are timed as interleaved pairs: alternating passes share any drift,
  // and the medians are compared.
  auto one_pass = [&](const SearchParams& p, int loops) {
    const double t0 = now_seconds();
    for (int rep = 0; rep < loops; ++rep) {
      for (Eigen::Index qi = 0; qi < ctx.queries.size(); ++qi) {
        phnsw_search(ctx.queries.matrix().row(qi), ctx.graph, ctx.img_inline, ctx.pca, p);
      }
    }
    const double sec = now_seconds() - t0;
    return static_cast<double>(ctx.queries.size()) * loops / sec;
  };
  SearchParams p16 = params;
  p16.k_config.k0 = 16;
  SearchParams p18 = params;
  p18.k_config.k0 = 18;

  one_pass(p16, 1);  // warm caches before calibrating
  one_pass(p18, 1);
  const double probe = now_seconds();
  one_pass(p16, 1);
  const double per_pass = now_seconds() - probe;
  const int loops = per_pass > 0 ? static_cast<int>(1.0 / per_pass) + 1 : 1;

  // The true gap is a few percent, at the edge of wall-clock noise, so both
  // configurations are timed as back-to-back pairs (in-pair order
  // alternating to cancel periodic slowdowns) and rounds accumulate until a
  // sign test over the per-round differences is decisive or the time budget
  // runs out. The verdict is the median of the paired differences.
  std::vector<double> qps16_samples, qps18_samples, diffs;
  int positives = 0;
  const double t_start = now_seconds();
  while (true) {
    const int round = static_cast<int>(diffs.size());
    double q16, q18;
    if (round % 2 == 0) {
      q16 = one_pass(p16, loops);
      q18 = one_pass(p18, loops);
    } else {
      q18 = one_pass(p18, loops);
      q16 = one_pass(p16, loops);
    }
    qps16_samples.push_back(q16);
    qps18_samples.push_back(q18);
    diffs.push_back(q16 - q18);
    if (q16 > q18) ++positives;

    const double n = static_cast<double>(diffs.size());
    const bool decisive = std::abs(2.0 * positives - n) > 2.576 * std::sqrt(n);
    if ((n >= 15 && decisive) || now_seconds() - t_start > 300.0) break;
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double qps16 = median(qps16_samples);
  const double qps18 = median(qps18_samples);
  const bool slower_past_knee = median(diffs) > 0.0;

  // Deterministic cross-check of the same direction: the wider filter moves
  // strictly more data on the identical query set.
  const bool more_work_at_18 = points[3].traffic.bytes > points[2].traffic.bytes &&
                               points[3].highdim_evals > points[2].highdim_evals;

  o.pass = monotone && slower_past_knee && more_work_at_18;
  std::ostringstream d;
  d << "k0 sweep {12,14,16,18} with k1=8: recall";
  for (const auto& p : points) d << " " << p.recall;
  d << " (non-decreasing within 0.01); qps medians k0=18 " << qps18 << " vs k0=16 " << qps16
    << ", paired median margin " << median(diffs) << " qps, " << positives << "/" << diffs.size()
    << " rounds slower; bytes/query " << points[3].bytes_per_query() << " at k0=18 > "
    << points[2].bytes_per_query() << " at k0=16";
  o.detail = d.str();
  return o;
}

Outcome criterion_layout(const DeskContext& ctx) {
  Outcome o;
  const std::uint64_t data_inline =
      ctx.rep_inline.traffic.lowdim_bytes + ctx.rep_inline.traffic.highdim_bytes;
  const std::uint64_t data_sep =
      ctx.rep_sep.traffic.lowdim_bytes + ctx.rep_sep.traffic.highdim_bytes;
  o.pass = data_inline == data_sep &&
           ctx.rep_inline.traffic.transactions < ctx.rep_sep.traffic.transactions;
  std::ostringstream d;
  d << "same trace, low+high bytes inline " << data_inline << " == separate " << data_sep
    << "; transactions inline " << ctx.rep_inline.traffic.transactions << " < separate "
    << ctx.rep_sep.traffic.transactions;
  o.detail = d.str();
  return o;
}

Outcome criterion_size_formula(const DeskContext& ctx) {
  Outcome o;
  std::uint64_t summed = 0;
  for (std::uint32_t l = 0; l < ctx.graph.num_layers(); ++l) {
    for (NodeId id = 0; id < ctx.graph.size(); ++id) {
      if (!ctx.graph.present(id, l)) continue;
      summed += ctx.graph.neighbors(id, l).size() * 15ull * 4ull;
    }
  }
  const std::uint64_t reported = ctx.img_inline.size_report().inline_lowdim_payload_bytes;

  const double projected = 1e6 * 32.0 * 15.0 * 4.0;  // full layer-0 lists at 1M points
  const double stated = 1.8e9;
  const double rel = std::abs(projected - stated) / stated;

  o.pass = reported == summed && rel < 0.10;
  std::ostringstream d;
  d << "inline overhead " << reported << " bytes == hand sum " << summed
    << "; 1M-point layer-0 projection " << projected / 1e9 << " GB vs stated 1.8 GB ("
    << rel * 100 << "% off, < 10%)";
  o.detail = d.str();
  return o;
}

Outcome criterion_energy(const DeskContext& ctx) {
  Outcome o;
  TrafficCounters one;
  one.bytes = 1;
  TrafficCounters fetch;
  fetch.bytes = 512;
  const bool exact = energy_estimate(one, kDdr4PjPerBit) == 150.0 &&
                     energy_estimate(fetch, kHbm1PjPerBit) == 28672.0 &&
                     energy_estimate(TrafficCounters{}, kDdr4PjPerBit) == 0.0;

  const double e_std = ctx.rep_std.energy_per_query_pj(kDdr4PjPerBit);
  const double e_sep = ctx.rep_sep.energy_per_query_pj(kDdr4PjPerBit);
  const double e_inline = ctx.rep_inline.energy_per_query_pj(kDdr4PjPerBit);
  const bool direction = e_sep < e_std && e_inline < e_std;

  o.pass = exact && direction;
  std::ostringstream d;
  d << "150 pJ/byte at 18.75 pJ/bit and 28672 pJ per 512 B at 7 pJ/bit exact; per-query DRAM "
    << "energy (DDR4 pJ): filtered " << e_inline << " and " << e_sep << " < baseline " << e_std;
  o.detail = d.str();
  return o;
}

Outcome criterion_statement() {
  Outcome o;
  o.pass = true;
  o.detail =
      "not reproduced at desk scale, by design: absolute QPS of the hardware study "
      "(9900.35 through 211579.75), silicon area breakdown, per-instruction cycle counts, "
      "and component-level energy shares; covered only by the relative checks above";
  return o;
}

}  // namespace

int main() {
  std::map<int, Outcome> results;
  std::map<int, std::string> names{
      {1, "oracle equivalence under identity projection"},
      {2, "bounded high-dim work per expansion"},
      {3, "rank_topk counting-rank correctness"},
      {4, "desk-scale recall"},
      {5, "k-sweep trend"},
      {6, "layout traffic accounting"},
      {7, "storage size formula"},
      {8, "energy model"},
      {9, "hardware-bound figures excluded"},
  };

  auto timed = [&](int idx, auto&& fn) {
    const double t0 = now_seconds();
    try {
      results[idx] = fn();
    } catch (const std::exception& e) {
      results[idx] = {false, std::string("exception: ") + e.what(), 0.0};
    }
    results[idx].seconds = now_seconds() - t0;
  };

  timed(1, [] { return criterion_equivalence(); });
  timed(3, [] { return criterion_rank_topk(); });

  DeskContext ctx = make_desk_context();
  timed(4, [&] { return criterion_recall(ctx); });
  results[4].seconds += ctx.build_seconds;  // the context exists for criterion 4's run
  timed(2, [&] { return criterion_bounded_work(ctx); });
  timed(5, [&] { return criterion_sweep(ctx); });
  timed(6, [&] { return criterion_layout(ctx); });
  timed(7, [&] { return criterion_size_formula(ctx); });
  timed(8, [&] { return criterion_energy(ctx); });
  timed(9, [] { return criterion_statement(); });

  // Stated runtime limits.
  if (results[1].seconds >= 10.0) results[1] = {false, results[1].detail + " [over 10 s]", results[1].seconds};
  if (results[3].seconds >= 1.0) results[3] = {false, results[3].detail + " [over 1 s]", results[3].seconds};
  if (results[4].seconds >= 300.0) results[4] = {false, results[4].detail + " [over 5 min]", results[4].seconds};
  if (results[5].seconds >= 600.0) results[5] = {false, results[5].detail + " [over 10 min]", results[5].seconds};

  bool all_pass = true;
  for (const auto& [idx, outcome] : results) {
    all_pass = all_pass && outcome.pass;
    std::printf("[%s] criterion %d: %s: %s (%.2f s)\n", outcome.pass ? "PASS" : "FAIL", idx,
                names[idx].c_str(), outcome.detail.c_str(), outcome.seconds);
  }
  std::printf("%s\n", all_pass ? "acceptance: all criteria passed" : "acceptance: FAILURES");
  return all_pass ? 0 : 1;
}
