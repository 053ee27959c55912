#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "bridgerole/embedanalysis.hpp"
#include "bridgerole/graphbuild.hpp"
#include "bridgerole/pipeline.hpp"
#include "bridgerole/rgcnvgae.hpp"
#include "bridgerole/synthetic.hpp"

using namespace bridgerole;

namespace {

const pipeline::CitySnapshot& built_city() {
  static const auto snapshot = [] {
    const auto dir = std::filesystem::temp_directory_path() / "bridgerole_bench_city";
    const auto cfg = pipeline::write_inputs(synthetic::make_city(), dir.string());
    return pipeline::run_pipeline(cfg, {pipeline::Stage::kBuild, false});
  }();
  return snapshot;
}

analysis::Matrix gaussian_blobs(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  analysis::Matrix m(n, 32);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shift = (i % 3) * 6.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = nd(rng) + (j < 3 ? shift : 0.0);
  }
  return m;
}

void BM_Betweenness(benchmark::State& state) {
  const auto& g = built_city().graph;
  for (auto _ : state) benchmark::DoNotOptimize(graph::betweenness(g));
  state.counters["street_nodes"] = static_cast<double>(g.ids_of(graph::NodeKind::kStreet).size());
}
BENCHMARK(BM_Betweenness)->Unit(benchmark::kMillisecond);

void BM_EncoderEpoch(benchmark::State& state) {
  const auto& s = built_city();
  const auto eg = vgae::EncoderGraph::from_graph(s.graph);
  const auto x = vgae::select_rows(s.features, eg.node_ids);
  const vgae::EncoderConfig cfg;
  const auto weights = vgae::RgcnWeights::initialize(cfg);
  const auto neg = vgae::sample_negatives(eg, eg.edges.size(), 0);
  const auto eps = vgae::sample_noise(static_cast<Eigen::Index>(eg.num_nodes), cfg.latent_dim(), 0);
  for (auto _ : state) {
    auto grad = weights.zeros_like();
    benchmark::DoNotOptimize(vgae::loss_and_gradient(x, eg, weights, eps, eg.edges, neg, 1.0, &grad));
  }
  state.counters["nodes"] = static_cast<double>(eg.num_nodes);
}
BENCHMARK(BM_EncoderEpoch)->Unit(benchmark::kMillisecond);

void BM_Hdbscan(benchmark::State& state) {
  const auto x = gaussian_blobs(state.range(0), 1);
  const int mcs = analysis::hdbscan_min_cluster_size(static_cast<std::size_t>(x.rows()));
  for (auto _ : state) benchmark::DoNotOptimize(analysis::hdbscan(x, mcs));
}
BENCHMARK(BM_Hdbscan)->Arg(150)->Arg(700)->Unit(benchmark::kMillisecond);

void BM_Umap(benchmark::State& state) {
  const auto x = gaussian_blobs(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(analysis::umap2(x));
}
BENCHMARK(BM_Umap)->Arg(150)->Arg(700)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
