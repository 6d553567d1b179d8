// phnsw command-line driver: generate data, build artifacts, search, bench.

#include "phnsw/dataio.hpp"
#include "phnsw/eval.hpp"
#include "phnsw/graph.hpp"
#include "phnsw/pca.hpp"
#include "phnsw/search.hpp"
#include "phnsw/storage.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phnsw;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

Dataset read_vectors(const fs::path& path) {
  if (path.extension() == ".bvecs") return read_bvecs(path);
  return read_fvecs(path);
}

LayoutMode parse_layout(const std::string& name) {
  if (name == "std") return LayoutMode::HighDimOnly;
  if (name == "sep") return LayoutMode::SeparateLowDim;
  if (name == "inline") return LayoutMode::InlineLowDim;
  throw CLI::ValidationError("--layout", "expected std, sep or inline");
}

struct CommonOpts {
  std::string base;
  std::string queries;
  std::string truth;
  std::string out = "phnsw_out";
  std::uint32_t d_low = 15;
  std::uint32_t m = 16;
  std::uint32_t efc = 200;
  std::uint32_t ef = 10;
  std::uint32_t k0 = 16, k1 = 8, krest = 3;
  std::string layout = "inline";
  std::uint64_t seed = 42;
};

SearchParams make_params(const CommonOpts& o, std::uint32_t topk) {
  SearchParams p;
  p.ef_base = o.ef;
  p.K = topk;
  p.k_config = {o.k0, o.k1, o.krest};
  return p;
}

int cmd_gen(const CommonOpts& o, std::size_t n, std::size_t nq, std::uint32_t dim,
            std::size_t clusters, double center_scale, double decay) {
  fs::create_directories(o.out);
  auto [base, queries] = synthetic_mixture(n, nq, dim, clusters, center_scale, decay, o.seed);
  write_fvecs(fs::path(o.out) / "base.fvecs", base);
  write_fvecs(fs::path(o.out) / "query.fvecs", queries);
  std::cerr << "wrote " << n << " base + " << nq << " query vectors (dim " << dim << ", seed "
            << o.seed << ") to " << o.out << "\n";
  return 0;
}

int cmd_build(const CommonOpts& o) {
  fs::create_directories(o.out);
  const LayoutMode mode = parse_layout(o.layout);

  Timer t_total;
  Dataset base = read_vectors(o.base);

  Timer t_pca;
  PcaModel pca = pca_fit(base, static_cast<Eigen::Index>(o.d_low));
  Dataset low = pca_project_all(pca, base);
  const double pca_seconds = t_pca.seconds();

  Timer t_graph;
  BuildParams bp;
  bp.M = o.m;
  bp.ef_construction = o.efc;
  bp.rng_seed = o.seed;
  HnswGraph graph = hnsw_build(base, bp);
  validate_graph(graph);
  const double graph_seconds = t_graph.seconds();

  Timer t_image;
  StorageImage image = build_image(graph, base, &low, mode);
  const double image_seconds = t_image.seconds();

  const fs::path pca_path = fs::path(o.out) / "pca.pcam";
  const fs::path graph_path = fs::path(o.out) / "graph.hnsg";
  const fs::path image_path = fs::path(o.out) / "image.phdb";
  save_pca(pca_path, pca);
  save_graph(graph_path, graph);
  save_image(image_path, image);

  SizeReport sizes = image.size_report();
  json manifest = {
      {"params",
       {{"d_low", o.d_low},
        {"m", o.m},
        {"ef_construction", o.efc},
        {"layout", o.layout}}},
      {"dataset", {{"base", o.base}, {"n", base.size()}, {"dim", base.dim()}}},
      {"artifacts",
       {{"pca", pca_path.string()}, {"graph", graph_path.string()}, {"image", image_path.string()}}},
      {"sizes",
       {{"image_total_bytes", sizes.total_bytes},
        {"image_header_bytes", sizes.header_bytes},
        {"image_index_bytes", sizes.index_bytes_total()},
        {"image_lowdim_table_bytes", sizes.lowdim_table_bytes},
        {"image_highdim_table_bytes", sizes.highdim_table_bytes},
        {"inline_lowdim_payload_bytes", sizes.inline_lowdim_payload_bytes},
        {"graph_layers", graph.num_layers()}}},
      {"timings",
       {{"pca_seconds", pca_seconds},
        {"graph_seconds", graph_seconds},
        {"image_seconds", image_seconds},
        {"total_seconds", t_total.seconds()}}},
      {"seed", o.seed},
  };
  std::ofstream mf(fs::path(o.out) / "manifest.json");
  mf << manifest.dump(2) << "\n";
  std::cerr << "built " << o.layout << " image (" << sizes.total_bytes << " bytes, "
            << graph.num_layers() << " layers) in " << t_total.seconds() << " s\n";
  return 0;
}

int cmd_search(const CommonOpts& o, std::uint32_t topk) {
  const fs::path dir(o.out);
  HnswGraph graph = load_graph(dir / "graph.hnsg");
  StorageImage image = load_image(dir / "image.phdb");
  Dataset queries = read_vectors(o.queries);

  SearchParams params = make_params(o, topk);
  if (params.ef_base < params.K) params.ef_base = params.K;

  PcaModel pca;
  const bool filtered = image.mode() != LayoutMode::HighDimOnly;
  if (filtered) pca = load_pca(dir / "pca.pcam");

  QueryStats totals;
  for (Eigen::Index qi = 0; qi < queries.size(); ++qi) {
    SearchResult res = filtered
                           ? phnsw_search(queries.matrix().row(qi), graph, image, pca, params)
                           : hnsw_search(queries.matrix().row(qi), graph, image, params);
    for (std::size_t rank = 0; rank < res.entries.size(); ++rank) {
      std::cout << qi << " " << rank << " " << res.entries[rank].id << " "
                << res.entries[rank].dist << "\n";
    }
    totals.traffic += res.stats.traffic;
    totals.lowdim_evals += res.stats.lowdim_evals;
    totals.highdim_evals += res.stats.highdim_evals;
    totals.expansions += res.stats.expansions;
  }
  std::cerr << "queries=" << queries.size() << " transactions=" << totals.traffic.transactions
            << " bytes=" << totals.traffic.bytes << " lowdim_evals=" << totals.lowdim_evals
            << " highdim_evals=" << totals.highdim_evals << " expansions=" << totals.expansions
            << "\n";
  return 0;
}

GroundTruth resolve_truth(const CommonOpts& o, const Dataset& base, const Dataset& queries,
                          std::size_t K) {
  if (!o.truth.empty()) {
    IdMatrix ids = read_ivecs(o.truth);
    if (ids.rows() != queries.size() || static_cast<std::size_t>(ids.cols()) < K) {
      throw std::runtime_error("ground-truth file shape does not match queries");
    }
    GroundTruth gt;
    gt.K = K;
    gt.per_query.resize(static_cast<std::size_t>(ids.rows()));
    for (Eigen::Index i = 0; i < ids.rows(); ++i) {
      auto& row = gt.per_query[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < K; ++j) {
        NodeId id = static_cast<NodeId>(ids(i, static_cast<Eigen::Index>(j)));
        row.push_back({squared_distance(base.matrix().row(id), queries.matrix().row(i)), id});
      }
    }
    return gt;
  }
  // Brute force, cached beside the dataset.
  const fs::path cache = o.base + ".gt" + std::to_string(K) + ".ivecs";
  if (fs::exists(cache)) {
    CommonOpts with_cache = o;
    with_cache.truth = cache.string();
    return resolve_truth(with_cache, base, queries, K);
  }
  GroundTruth gt = ground_truth(base, queries, K);
  IdMatrix ids(queries.size(), static_cast<Eigen::Index>(K));
  for (Eigen::Index i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      ids(i, static_cast<Eigen::Index>(j)) =
          static_cast<std::int32_t>(gt.per_query[static_cast<std::size_t>(i)][j].id);
    }
  }
  write_ivecs(cache, ids);
  std::cerr << "cached ground truth to " << cache.string() << "\n";
  return gt;
}

int cmd_bench(const CommonOpts& o, std::uint32_t topk, const std::string& variants_csv,
              int sweep_layer, const std::vector<std::uint32_t>& sweep_ks) {
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  Dataset base = read_vectors(o.base);
  Dataset queries = read_vectors(o.queries);
  HnswGraph graph = load_graph(dir / "graph.hnsg");
  PcaModel pca = load_pca(dir / "pca.pcam");
  Dataset low = pca_project_all(pca, base);

  SearchParams params = make_params(o, topk);
  GroundTruth gt = resolve_truth(o, base, queries, params.K);

  std::vector<Variant> variants;
  for (std::size_t pos = 0; pos < variants_csv.size();) {
    std::size_t comma = variants_csv.find(',', pos);
    std::string name = variants_csv.substr(pos, comma - pos);
    if (name == "std") variants.push_back(Variant::hnsw_std);
    else if (name == "sep") variants.push_back(Variant::phnsw_sep);
    else if (name == "inline") variants.push_back(Variant::phnsw_inline);
    else throw CLI::ValidationError("--variants", "unknown variant " + name);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }

  std::vector<BenchReport> reports;
  for (Variant v : variants) {
    StorageImage img = build_image(graph, base, &low, variant_layout(v));
    if (sweep_layer >= 0) {
      auto pts = sweep_k(queries, gt, graph, img, pca, v, static_cast<std::uint32_t>(sweep_layer),
                         sweep_ks, params);
      reports.insert(reports.end(), pts.begin(), pts.end());
    } else {
      reports.push_back(run_bench(queries, gt, graph, img, pca, v, params));
    }
  }

  const fs::path csv_path = dir / "bench.csv";
  std::ofstream csv(csv_path);
  write_csv(csv, reports);
  for (const BenchReport& r : reports) {
    std::cerr << variant_name(r.variant) << " k0=" << r.layer_k0 << " k1=" << r.layer_k1
              << " recall@" << r.K << "=" << r.recall << " qps=" << r.qps
              << " bytes/query=" << r.bytes_per_query()
              << " txns/query=" << r.transactions_per_query() << "\n";
  }
  std::cerr << "wrote " << csv_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pHNSW: PCA-filtered HNSW search with byte-accounted storage layouts"};
  app.require_subcommand(1);

  CommonOpts o;
  std::uint32_t topk = 10;

  std::size_t gen_n = 10000, gen_nq = 100, gen_clusters = 32;
  std::uint32_t gen_dim = 128;
  double gen_center_scale = 1.5, gen_decay = 0.95;

  auto* gen = app.add_subcommand("gen", "generate a seeded synthetic dataset (fvecs)");
  gen->add_option("--out", o.out, "output directory");
  gen->add_option("--seed", o.seed, "rng seed");
  gen->add_option("--n", gen_n, "base vectors");
  gen->add_option("--nq", gen_nq, "query vectors");
  gen->add_option("--dim", gen_dim, "dimensionality");
  gen->add_option("--clusters", gen_clusters, "mixture components");
  gen->add_option("--center-scale", gen_center_scale, "cluster spread multiplier");
  gen->add_option("--decay", gen_decay, "per-dimension scale decay");

  auto* build = app.add_subcommand("build", "fit PCA, build the graph and the storage image");
  build->add_option("--base", o.base, "base vectors (fvecs/bvecs)")->required();
  build->add_option("--out", o.out, "artifact directory");
  build->add_option("--dlow", o.d_low, "projected dimensionality");
  build->add_option("--m", o.m, "graph degree parameter M");
  build->add_option("--efc", o.efc, "construction beam width");
  build->add_option("--layout", o.layout, "storage layout: std|sep|inline");
  build->add_option("--seed", o.seed, "rng seed");

  auto* search = app.add_subcommand("search", "run queries against built artifacts");
  search->add_option("--queries", o.queries, "query vectors (fvecs/bvecs)")->required();
  search->add_option("--out", o.out, "artifact directory");
  search->add_option("--topk", topk, "results per query");
  search->add_option("--ef", o.ef, "layer-0 beam width");
  search->add_option("--k0", o.k0, "filter size at layer 0");
  search->add_option("--k1", o.k1, "filter size at layer 1");
  search->add_option("--krest", o.krest, "filter size at layers >= 2");

  std::string variants_csv = "std,sep,inline";
  int sweep_layer = -1;
  std::vector<std::uint32_t> sweep_ks;
  auto* bench = app.add_subcommand("bench", "recall/QPS/traffic comparison, CSV output");
  bench->add_option("--base", o.base, "base vectors")->required();
  bench->add_option("--queries", o.queries, "query vectors")->required();
  bench->add_option("--truth", o.truth, "ground-truth ivecs (computed and cached if omitted)");
  bench->add_option("--out", o.out, "artifact directory (input) and csv destination");
  bench->add_option("--topk", topk, "recall cutoff K");
  bench->add_option("--ef", o.ef, "layer-0 beam width");
  bench->add_option("--k0", o.k0, "filter size at layer 0");
  bench->add_option("--k1", o.k1, "filter size at layer 1");
  bench->add_option("--krest", o.krest, "filter size at layers >= 2");
  bench->add_option("--variants", variants_csv, "comma list of std,sep,inline");
  bench->add_option("--sweep-layer", sweep_layer, "sweep the filter size of this layer (0 or 1)");
  bench->add_option("--sweep-k", sweep_ks, "k values for the sweep");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(o, gen_n, gen_nq, gen_dim, gen_clusters, gen_center_scale, gen_decay);
    if (build->parsed()) return cmd_build(o);
    if (search->parsed()) return cmd_search(o, topk);
    if (bench->parsed()) return cmd_bench(o, topk, variants_csv, sweep_layer, sweep_ks);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
