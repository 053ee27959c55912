#include <bit>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <memory>

#include <openssl/evp.h>

#include "bridgerole/error.hpp"
#include "bridgerole/pipeline.hpp"
#include "pipeline_internal.hpp"

namespace bridgerole::pipeline {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kIngest: return "ingest";
    case Stage::kBuild: return "build";
    case Stage::kTrain: return "train";
    case Stage::kProfile: return "profile";
    case Stage::kClassify: return "classify";
    case Stage::kAnalyze: return "analyze";
    case Stage::kExport: return "export";
  }
  return "?";
}

analysis::Matrix CitySnapshot::bridge_embeddings() const {
  const auto& ids = embedding.node_ids;
  analysis::Matrix out(static_cast<Eigen::Index>(bridge_ids.size()), embedding.mu.cols());
  for (std::size_t i = 0; i < bridge_ids.size(); ++i) {
    const auto it = std::lower_bound(ids.begin(), ids.end(), bridge_ids[i]);
    if (it == ids.end() || *it != bridge_ids[i]) {
      throw Error(ErrorCode::kDimensionMismatch, "bridge " + std::to_string(bridge_ids[i]) + " has no embedding");
    }
    out.row(static_cast<Eigen::Index>(i)) = embedding.mu.row(it - ids.begin());
  }
  return out;
}

std::optional<int> CitySnapshot::cluster_of(std::size_t row) const {
  if (row >= clusters.labels.size()) return std::nullopt;
  return clusters.labels[row];
}

std::array<std::size_t, 5> CitySnapshot::category_counts() const {
  std::array<std::size_t, 5> counts{};
  for (const auto& c : classifications) ++counts[static_cast<std::size_t>(c.category)];
  return counts;
}

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error(ErrorCode::kInvalidArgument, "sha256 unavailable");
    }
  }

  void bytes(const void* data, std::size_t size) { EVP_DigestUpdate(ctx_.get(), data, size); }
  void u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v)); }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void matrix(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }
  void opt(const std::optional<double>& v) {
    u64(v.has_value());
    if (v) f64(*v);
  }

  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest, &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kHex[digest[i] >> 4];
      out += kHex[digest[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

void hash_layer(Sha256& h, const vgae::RgcnLayer& layer) {
  h.u64(layer.bases.size());
  for (const auto& b : layer.bases) h.matrix(b);
  h.matrix(layer.coefficients);
  h.matrix(layer.self_loop);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <class F>
void in_stage(Stage stage, F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e.code(), std::string(to_string(stage)), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorCode::kIo, std::string(to_string(stage)), e.what());
  }
}

void run_analysis(CitySnapshot& s) {
  const analysis::Matrix emb = s.bridge_embeddings();
  const auto n = static_cast<std::size_t>(emb.rows());
  if (n < 2) throw Error(ErrorCode::kTooFewPoints, "analysis needs at least two bridges");

  analysis::UmapParams umap;
  umap.seed = s.config.cluster_seed;
  if (n > static_cast<std::size_t>(umap.n_neighbors)) {
    s.coords2d = analysis::umap2(emb, umap);
    s.reduction = "umap";
  } else {
    s.coords2d = analysis::pca2(emb).coords;
    s.reduction = "pca";
  }
  s.clusters = analysis::cluster_with_fallback(s.coords2d, n, s.config.cluster_seed);

  std::vector<double> highway(n);
  for (std::size_t i = 0; i < n; ++i) highway[i] = static_cast<double>(s.profiles[i].highway_count);
  s.correlations = analysis::latent_correlation_scan(emb, highway);
}

}  // namespace

std::string compute_content_hash(const CitySnapshot& s) {
  Sha256 h;
  h.str("bridgerole.snapshot.v1");

  auto cfg = config_json(s.config);
  for (const char* k : {"streets_path", "bridges_path", "buildings_path", "output_dir"}) cfg.erase(k);
  h.str(cfg.dump());

  const auto& g = s.graph;
  h.u64(g.size());
  for (const auto& n : g.nodes()) {
    h.u64(static_cast<std::uint64_t>(n.kind));
    h.f64(n.geo.lat);
    h.f64(n.geo.lon);
    h.f64(n.plane.x);
    h.f64(n.plane.y);
    h.u64(n.name.has_value());
    if (n.name) h.str(*n.name);
    h.u64(n.category ? static_cast<std::uint64_t>(*n.category) + 1 : 0);
    h.u64(n.is_highway);
    h.opt(n.span_m);
    h.opt(n.year_built);
    if (n.kind == graph::NodeKind::kBridge) {
      const auto snapped = g.snapped_street(n.id);
      h.u64(snapped ? *snapped + 1ULL : 0);
      h.u64(g.highway_count(n.id));
      for (auto c : graph::kCategories) {
        const auto& e = g.building_edges(n.id, c);
        h.u64(e.size());
        for (auto t : e) h.u64(t);
      }
    }
  }
  const auto edges = g.street_edges();
  h.u64(edges.size());
  for (const auto& [a, b] : edges) {
    h.u64(a);
    h.u64(b);
  }
  h.matrix(s.features);

  h.u64(s.weights.hidden.size());
  for (const auto& l : s.weights.hidden) hash_layer(h, l);
  hash_layer(h, s.weights.mu_head);
  hash_layer(h, s.weights.logvar_head);
  h.u64(s.embedding.node_ids.size());
  for (auto id : s.embedding.node_ids) h.u64(id);
  h.matrix(s.embedding.mu);
  h.matrix(s.embedding.logvar);

  const auto& r = s.train_report;
  h.u64(r.epochs.size());
  for (const auto& e : r.epochs) {
    h.u64(static_cast<std::uint64_t>(e.epoch));
    h.f64(e.total);
    h.f64(e.recon);
    h.f64(e.kl);
    h.f64(e.beta);
  }
  h.u64(static_cast<std::uint64_t>(r.stop_reason));
  h.u64(static_cast<std::uint64_t>(r.best_epoch));
  h.opt(r.holdout_auc);

  h.u64(s.bridge_ids.size());
  for (auto id : s.bridge_ids) h.u64(id);
  h.u64(s.profiles.size());
  for (const auto& p : s.profiles) {
    h.u64(p.bridge_id);
    h.u64(p.shop_paths);
    h.u64(p.hospital_paths);
    h.u64(p.residence_paths);
    h.u64(p.highway_count);
    h.u64(p.is_highway);
  }
  h.u64(s.classifications.size());
  for (const auto& c : s.classifications) {
    h.u64(c.bridge_id);
    h.str(c.label());
    h.f64(c.confidence);
    h.u64(c.total_paths);
  }

  const auto& cl = s.clusters;
  h.u64(cl.labels.size());
  for (int l : cl.labels) h.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(l)));
  h.str(analysis::to_string(cl.method));
  h.opt(cl.silhouette);
  h.u64(static_cast<std::uint64_t>(cl.n_clusters));
  h.u64(cl.noise_count);
  h.u64(static_cast<std::uint64_t>(cl.k));
  h.u64(static_cast<std::uint64_t>(cl.min_cluster_size));
  h.matrix(s.coords2d);
  h.str(s.reduction);
  h.u64(s.correlations.size());
  for (const auto& c : s.correlations) {
    h.u64(static_cast<std::uint64_t>(c.dim));
    h.f64(c.spearman_r);
    h.f64(c.p_value);
    h.u64(c.defined);
  }
  return h.hex();
}

CitySnapshot run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  CitySnapshot s;
  s.config = config;
  const auto reached = [&](Stage st) { return static_cast<int>(options.last_stage) >= static_cast<int>(st); };

  in_stage(Stage::kIngest, [&] {
    config.validate();
    const auto& keys = config.property_keys;
    graph::ingest_streets(s.graph, detail::read_file(config.streets_path), keys);
    graph::ingest_bridges(s.graph, detail::read_file(config.bridges_path), keys);
    graph::ingest_buildings(s.graph, detail::read_file(config.buildings_path), keys, config.radius_m);
  });
  s.bridge_ids = s.graph.ids_of(graph::NodeKind::kBridge);

  if (reached(Stage::kBuild)) {
    in_stage(Stage::kBuild, [&] {
      graph::build_edges(s.graph, config.knn());
      s.features = graph::build_features(s.graph);
    });
  }
  if (reached(Stage::kTrain)) {
    in_stage(Stage::kTrain, [&] {
      auto result = vgae::train(s.graph, s.features, config.encoder);
      s.weights = std::move(result.weights);
      s.embedding = std::move(result.embedding);
      s.train_report = std::move(result.report);
    });
  }
  if (reached(Stage::kProfile)) {
    in_stage(Stage::kProfile, [&] { s.profiles = metapath::profile(s.graph); });
  }
  if (reached(Stage::kClassify)) {
    in_stage(Stage::kClassify, [&] { s.classifications = metapath::classify_all(s.profiles, config.thresholds); });
  }
  if (reached(Stage::kAnalyze)) {
    in_stage(Stage::kAnalyze, [&] { run_analysis(s); });
  }

  s.content_hash = compute_content_hash(s);
  s.created_at = utc_now();
  if (options.write_outputs) {
    in_stage(Stage::kExport, [&] { write_outputs(s, config.output_dir); });
  }
  return s;
}

}  // namespace bridgerole::pipeline
