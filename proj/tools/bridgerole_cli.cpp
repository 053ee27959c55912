#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "bridgerole/error.hpp"
#include "bridgerole/overpass.hpp"
#include "bridgerole/pipeline.hpp"
#include "bridgerole/service.hpp"
#include "bridgerole/synthetic.hpp"

namespace fs = std::filesystem;
using namespace bridgerole;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Pipeline config (JSON)");
  cmd->add_option("--seed", c.seed, "Seed for training and clustering");
  cmd->add_option("--out", c.out_dir, "Output directory");
}

pipeline::PipelineConfig resolve_config(const Common& c) {
  if (c.config_path.empty()) throw Error(ErrorCode::kInvalidConfig, "--config is required");
  auto cfg = pipeline::load_config(c.config_path);
  if (c.seed) {
    cfg.encoder.seed = *c.seed;
    cfg.cluster_seed = *c.seed;
  }
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  return cfg;
}

std::string snapshot_path(const Common& c) {
  if (!c.out_dir.empty()) return (fs::path(c.out_dir) / "snapshot.json").string();
  return (fs::path(resolve_config(c).output_dir) / "snapshot.json").string();
}

void print_summary(const pipeline::CitySnapshot& s, pipeline::Stage last) {
  std::cout << "bridges: " << s.bridge_count() << "\n"
            << "street nodes: " << s.graph.count(graph::NodeKind::kStreet) << "\n"
            << "buildings: " << s.graph.count(graph::NodeKind::kBuilding) << "\n";
  if (last >= pipeline::Stage::kTrain && !s.train_report.epochs.empty()) {
    const auto& r = s.train_report;
    std::cout << "training: " << r.epochs.size() << " epochs (" << vgae::to_string(r.stop_reason)
              << "), loss " << r.epochs.front().total << " -> " << r.epochs.back().total << "\n";
  }
  if (last >= pipeline::Stage::kClassify) {
    const auto counts = s.category_counts();
    for (std::size_t i = 0; i < counts.size(); ++i) {
      std::cout << metapath::to_string(static_cast<metapath::Category>(i)) << ": " << counts[i] << "\n";
    }
  }
  if (last >= pipeline::Stage::kAnalyze) {
    std::cout << "clustering: " << analysis::to_string(s.clusters.method) << ", " << s.clusters.n_clusters
              << " clusters, silhouette ";
    if (s.clusters.silhouette) {
      std::cout << *s.clusters.silhouette;
    } else {
      std::cout << "undefined";
    }
    std::cout << "\n";
  }
  std::cout << "content hash: " << s.content_hash << "\n";
}

void run_stage(const Common& c, pipeline::Stage last) {
  const auto cfg = resolve_config(c);
  const auto s = pipeline::run_pipeline(cfg, {last, true});
  print_summary(s, last);
  std::cout << "outputs: " << cfg.output_dir << "\n";
}

void write_config(const pipeline::PipelineConfig& cfg, const std::string& dir) {
  auto rel = cfg;
  rel.streets_path = "streets.geojson";
  rel.bridges_path = "bridges.geojson";
  rel.buildings_path = "buildings.geojson";
  rel.output_dir = "out";
  std::ofstream(fs::path(dir) / "config.json") << pipeline::config_to_json(rel) << "\n";
}

overpass::BoundingBox parse_bbox(const std::string& text) {
  overpass::BoundingBox b;
  char sep[3];
  std::istringstream in(text);
  if (!(in >> b.south >> sep[0] >> b.west >> sep[1] >> b.north >> sep[2] >> b.east) || sep[0] != ',' ||
      sep[1] != ',' || sep[2] != ',') {
    throw Error(ErrorCode::kInvalidArgument, "--bbox expects south,west,north,east");
  }
  b.validate();
  return b;
}

service::Service* g_service = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bridge role classification over road, bridge and building graphs"};
  app.require_subcommand(1);

  Common common;
  std::string bbox;
  std::string endpoint = overpass::FetchOptions{}.endpoint;
  auto* fetch = app.add_subcommand("fetch", "Download an Overpass extract into GeoJSON inputs");
  fetch->add_option("--bbox", bbox, "south,west,north,east")->required();
  fetch->add_option("--endpoint", endpoint, "Overpass interpreter URL");
  add_common(fetch, common);

  bool dense = false;
  std::uint64_t city_seed = 1;
  auto* make_city = app.add_subcommand("make-city", "Write a synthetic city and a matching config");
  make_city->add_flag("--dense", dense, "Pack many shops around the commercial district");
  make_city->add_option("--seed", city_seed, "Layout seed");
  make_city->add_option("--out", common.out_dir, "Directory for the inputs")->required();

  struct StageCmd {
    const char* name;
    const char* help;
    pipeline::Stage stage;
  };
  const StageCmd stages[] = {
      {"build", "Ingest inputs and build the graph and features", pipeline::Stage::kBuild},
      {"train", "Build and train the encoder", pipeline::Stage::kTrain},
      {"classify", "Train, profile metapaths and classify bridges", pipeline::Stage::kClassify},
      {"analyze", "Classify, reduce to 2D, cluster and correlate", pipeline::Stage::kAnalyze},
      {"run", "Run every stage and write all outputs", pipeline::Stage::kExport},
  };
  std::vector<std::pair<CLI::App*, pipeline::Stage>> stage_cmds;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, common);
    stage_cmds.emplace_back(cmd, s.stage);
  }

  std::optional<int> k_shop, k_hospital, k_residence;
  std::optional<std::size_t> budget;
  auto* whatif = app.add_subcommand("whatif", "Re-evaluate classification under new k values");
  add_common(whatif, common);
  whatif->add_option("--k-shop", k_shop);
  whatif->add_option("--k-hospital", k_hospital);
  whatif->add_option("--k-residence", k_residence);
  whatif->add_option("--budget", budget, "Rank the top N bridges for funding");

  int port = 8080;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Serve the snapshot over HTTP (/api/v1)");
  add_common(serve, common);
  serve->add_option("--port", port);
  serve->add_option("--host", host);

  auto* exp = app.add_subcommand("export", "Rewrite CSV, overlay and metrics from a snapshot");
  add_common(exp, common);
  std::string snapshot_override;
  for (auto* cmd : {whatif, serve, exp}) cmd->add_option("--snapshot", snapshot_override, "Snapshot file");

  CLI11_PARSE(app, argc, argv);

  try {
    auto load = [&] {
      return pipeline::load_snapshot(snapshot_override.empty() ? snapshot_path(common) : snapshot_override);
    };
    if (fetch->parsed()) {
      if (common.out_dir.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
      overpass::FetchOptions opts;
      opts.endpoint = endpoint;
      const auto docs = overpass::fetch(parse_bbox(bbox), opts);
      write_config(pipeline::write_inputs(docs, common.out_dir), common.out_dir);
      std::cout << "wrote inputs to " << common.out_dir << "\n";
    } else if (make_city->parsed()) {
      auto params = dense ? synthetic::dense_params() : synthetic::CityParams{};
      params.seed = city_seed;
      write_config(pipeline::write_inputs(synthetic::make_city(params), common.out_dir), common.out_dir);
      std::cout << "wrote " << (fs::path(common.out_dir) / "config.json").string() << "\n";
    } else if (whatif->parsed()) {
      const auto snap = load();
      auto req = pipeline::WhatIfRequest::identity(snap);
      if (k_shop) req.k_shop = *k_shop;
      if (k_hospital) req.k_hospital = *k_hospital;
      if (k_residence) req.k_residence = *k_residence;
      req.budget_n = budget;
      std::cout << pipeline::whatif_json(snap, pipeline::whatif(snap, req)) << "\n";
    } else if (serve->parsed()) {
      auto snap = std::make_shared<const pipeline::CitySnapshot>(load());
      service::Service svc(snap);
      const int bound = svc.bind(host, port);
      g_service = &svc;
      std::signal(SIGINT, [](int) {
        if (g_service) g_service->stop();
      });
      std::cout << "serving " << snap->bridge_count() << " bridges on http://" << host << ":" << bound
                << std::string(service::kApiPrefix) << "\n"
                << std::flush;
      svc.run();
      g_service = nullptr;
    } else if (exp->parsed()) {
      const auto snap = load();
      const std::string dir = common.out_dir.empty() ? snap.config.output_dir : common.out_dir;
      pipeline::write_outputs(snap, dir);
      std::cout << "exported " << snap.bridge_count() << " bridges to " << dir << "\n";
    } else {
      for (const auto& [cmd, stage] : stage_cmds) {
        if (cmd->parsed()) run_stage(common, stage);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
