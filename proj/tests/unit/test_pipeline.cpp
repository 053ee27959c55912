#include <filesystem>
#include <fstream>
#include <sstream>

#include "bridgerole/error.hpp"
#include "bridgerole/pipeline.hpp"
#include "bridgerole/synthetic.hpp"
#include "city.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bridgerole;
using namespace bridgerole::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// One short-training run of the 30-bridge city shared by the cases below.
const CitySnapshot& city() {
  static const CitySnapshot snapshot = [] {
    const auto cfg = fixture::city_config(fixture::scratch_dir("pipeline_city"), {}, 25);
    return run_pipeline(cfg);
  }();
  return snapshot;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("config JSON round trip and validation") {
  PipelineConfig cfg;
  cfg.streets_path = "/data/s.geojson";
  cfg.k_shop = 7;
  cfg.thresholds.supply_min = 0.85;
  cfg.encoder.layer_dims = {21, 64, 16};
  const auto back = config_from_json(config_to_json(cfg));
  CHECK(back.streets_path == cfg.streets_path);
  CHECK(back.k_shop == 7);
  CHECK(back.thresholds == cfg.thresholds);
  CHECK(back.encoder.layer_dims == cfg.encoder.layer_dims);
  CHECK(config_to_json(back) == config_to_json(cfg));

  auto code = [](std::string_view text) {
    try {
      config_from_json(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  CHECK(code(R"({"k_shop": 5, "colour": "red"})") == ErrorCode::kInvalidConfig);
  CHECK(code(R"({"encoder": {"layer_dims": [21, 8], "lr": 1}})") == ErrorCode::kInvalidConfig);
  CHECK(code(R"({"k_shop": 0})") == ErrorCode::kInvalidK);
  CHECK(code(R"({"radius_m": -1})") == ErrorCode::kInvalidConfig);
  CHECK(code(R"({"encoder": {"layer_dims": [20, 8]}})") == ErrorCode::kInvalidConfig);
  CHECK(code("[1, 2]") == ErrorCode::kInvalidConfig);

  const auto rel = config_from_json(R"({"streets_path": "a.geojson", "output_dir": "out"})", "/base");
  CHECK(rel.streets_path == (fs::path("/base") / "a.geojson").string());
  CHECK(rel.output_dir == (fs::path("/base") / "out").string());
}

TEST_CASE("synthetic city is deterministic per seed") {
  const auto a = synthetic::make_city();
  const auto b = synthetic::make_city();
  CHECK(a.buildings == b.buildings);
  auto p = synthetic::CityParams{};
  p.seed = 2;
  CHECK(synthetic::make_city(p).buildings != a.buildings);
}

TEST_CASE("full run on the 30-bridge city") {
  const auto& s = city();
  CHECK(s.bridge_count() == 30);
  CHECK(s.classifications.size() == 30);
  CHECK(s.profiles.size() == 30);
  CHECK(s.coords2d.rows() == 30);
  CHECK(s.clusters.labels.size() == 30);
  CHECK(s.reduction == "umap");
  CHECK(s.correlations.size() == 32);
  CHECK(s.content_hash.size() == 64);
  CHECK(compute_content_hash(s) == s.content_hash);
  std::size_t total = 0;
  for (auto c : s.category_counts()) total += c;
  CHECK(total == 30);
  CHECK(s.embedding.mu.cols() == 32);
  CHECK(s.bridge_embeddings().rows() == 30);

  const fs::path out = s.config.output_dir;
  for (const char* f : {"classification.csv", "metrics.json", "overlay.geojson", "embeddings.csv", "coords2d.csv",
                        "checkpoint.json", "snapshot.json"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
}

TEST_CASE("content hash ignores timestamps and input locations") {
  auto s = city();
  s.created_at = "2000-01-01T00:00:00Z";
  s.config.streets_path = "/elsewhere/streets.geojson";
  s.config.output_dir = "/elsewhere/out";
  for (auto& e : s.train_report.epochs) e.wall_time_s += 1.0;
  CHECK(compute_content_hash(s) == city().content_hash);
  s.classifications[0].confidence += 1e-9;
  CHECK(compute_content_hash(s) != city().content_hash);
}

TEST_CASE("partial runs stop at the requested stage") {
  const auto cfg = fixture::city_config(fixture::scratch_dir("pipeline_partial"), {}, 5);
  const auto s = run_pipeline(cfg, {Stage::kClassify, false});
  CHECK(s.classifications.size() == 30);
  CHECK(s.coords2d.size() == 0);
  CHECK_FALSE(s.cluster_of(0).has_value());
  CHECK_FALSE(fs::exists(fs::path(cfg.output_dir) / "snapshot.json"));
  const auto built = run_pipeline(cfg, {Stage::kBuild, false});
  CHECK(built.features.rows() == static_cast<Eigen::Index>(built.graph.size()));
  CHECK(built.train_report.epochs.empty());
}

TEST_CASE("stage errors carry the stage name") {
  const auto dir = fixture::scratch_dir("pipeline_missing");
  auto cfg = fixture::city_config(dir, {}, 2);
  fs::remove(cfg.bridges_path);
  try {
    run_pipeline(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.stage() == "ingest");
    CHECK(e.code() == ErrorCode::kIo);
    CHECK(std::string(e.what()).rfind("ingest:", 0) == 0);
  }

  auto bad = fixture::city_config(fixture::scratch_dir("pipeline_badk"), {}, 2);
  bad.k_shop = 0;
  try {
    run_pipeline(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidK);
  }
}

TEST_CASE("snapshot save and load") {
  const auto& s = city();
  const auto path = fs::path(s.config.output_dir) / "snapshot.json";
  const auto back = load_snapshot(path.string());
  CHECK(back.content_hash == s.content_hash);
  CHECK(back.classifications == s.classifications);
  CHECK(back.profiles == s.profiles);
  CHECK(back.graph.street_edges() == s.graph.street_edges());

  // Tampering is detected.
  auto text = slurp(path);
  const auto pos = text.find("\"confidence\":");
  REQUIRE(pos != std::string::npos);
  text.insert(pos + 13, "0.000001+");
  const auto tampered = fs::path(fixture::scratch_dir("pipeline_tamper")) / "snapshot.json";
  std::ofstream(tampered) << text;
  CHECK_THROWS_AS(load_snapshot(tampered.string()), Error);

  auto doc = json::parse(slurp(path));
  doc["classifications"][0]["confidence"] = doc["classifications"][0]["confidence"].get<double>() + 0.25;
  std::ofstream(tampered) << doc.dump();
  try {
    load_snapshot(tampered.string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFormat);
  }
  CHECK_THROWS_AS(load_snapshot("/nonexistent/snapshot.json"), Error);
}

TEST_CASE("classification CSV") {
  const auto& s = city();
  const auto lines = split_lines(classification_csv(s));
  REQUIRE(lines.size() == 31);
  std::string header;
  for (std::size_t i = 0; i < kClassificationColumns.size(); ++i) {
    header += (i ? "," : "") + std::string(kClassificationColumns[i]);
  }
  CHECK(lines[0] == header);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK(lines[i].rfind(std::to_string(s.bridge_ids[i - 1]) + ",", 0) == 0);
    CHECK(lines[i].find(s.classifications[i - 1].label()) != std::string::npos);
  }
  CHECK(slurp(fs::path(s.config.output_dir) / "classification.csv") == classification_csv(s));
}

TEST_CASE("overlay export") {
  const auto& s = city();
  const auto features = parse_overlay(overlay_geojson(s));
  REQUIRE(features.size() == 30);
  std::array<std::size_t, 5> counts{};
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(features[i].category == s.classifications[i].label());
    CHECK(features[i].color == category_color(s.classifications[i].category));
    CHECK(features[i].bridge_id == std::optional<NodeId>(s.bridge_ids[i]));
    CHECK(features[i].cluster_id == s.cluster_of(i));
    ++counts[static_cast<std::size_t>(metapath::parse_label(features[i].category)->first)];
  }
  CHECK(counts == s.category_counts());

  CHECK(category_color(metapath::Category::kSupplyChain) == "#1f77b4");
  CHECK(category_color(metapath::Category::kMedicalAccess) == "#d62728");
  CHECK(category_color(metapath::Category::kResidentialProtection) == "#2ca02c");
  CHECK(category_color(metapath::Category::kBalancedMultiUse) == "#7f7f7f");
  CHECK(category_color(metapath::Category::kMixed) == "#ff7f0e");

  CHECK_THROWS_AS(parse_overlay(R"({"type":"FeatureCollection"})"), Error);
  CHECK_THROWS_AS(
      parse_overlay(
          R"({"type":"FeatureCollection","features":[{"type":"Feature","geometry":{"type":"Point","coordinates":[140,36]},"properties":{"category":"Unknown","confidence":0}}]})"),
      Error);
}

TEST_CASE("metrics and JSON documents") {
  const auto& s = city();
  const auto m = json::parse(metrics_json(s));
  CHECK(m["bridges"] == 30);
  CHECK(m["content_hash"] == s.content_hash);
  CHECK(m["clustering"]["method"] == analysis::to_string(s.clusters.method));
  CHECK(m["correlations"].size() == 32);
  CHECK(m["training"]["epochs"] == s.train_report.epochs.size());

  const auto b = json::parse(bridges_json(s));
  CHECK(b.size() == 30);
  const auto c = json::parse(classification_json(s));
  CHECK(c["rows"].size() == 30);
  const auto e = json::parse(embedding2d_json(s));
  CHECK(e["points"].size() == 30);
  CHECK(e["method"] == "umap");
}

TEST_CASE("whatif") {
  const auto& s = city();
  SUBCASE("identity request changes nothing") {
    const auto r = whatif(s, WhatIfRequest::identity(s));
    CHECK(r.changed.empty());
    CHECK(r.counts_before == r.counts_after);
    CHECK(r.coverage_before == r.coverage_after);
    CHECK(r.classifications == s.classifications);
    CHECK(whatif_json(s, r) == whatif_json(s, whatif(s, WhatIfRequest::identity(s))));
  }
  SUBCASE("raising k_shop adds shop paths") {
    auto low = WhatIfRequest::identity(s);
    low.k_shop = 3;
    auto high = low;
    high.k_shop = 5;
    const auto a = whatif(s, low);
    const auto b = whatif(s, high);
    CHECK(b.coverage_after[0] > a.coverage_after[0]);
    bool gained = false;
    for (std::size_t i = 0; i < 30; ++i) gained |= b.profiles[i].shop_paths > a.profiles[i].shop_paths;
    CHECK(gained);
    // The snapshot itself is untouched.
    CHECK(compute_content_hash(s) == s.content_hash);
  }
  SUBCASE("budget ranking") {
    auto req = WhatIfRequest::identity(s);
    req.budget_n = 3;
    const auto r = whatif(s, req);
    REQUIRE(r.budget.size() == 3);
    CHECK(r.budget == rank_for_budget(r.classifications, 3));
    req.budget_n = 31;
    CHECK_THROWS_AS(whatif(s, req), Error);
    req.budget_n = 0;
    CHECK(whatif(s, req).budget.empty());
  }
  SUBCASE("invalid k") {
    auto req = WhatIfRequest::identity(s);
    req.k_hospital = 0;
    try {
      whatif(s, req);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidK);
    }
  }
  SUBCASE("threshold override") {
    auto req = WhatIfRequest::identity(s);
    metapath::ClassifierThresholds t;
    t.supply_min = 0.31;
    t.medical_min = 0.31;
    t.residential_min = 0.31;
    req.thresholds = t;
    const auto r = whatif(s, req);
    CHECK(r.counts_after[static_cast<std::size_t>(metapath::Category::kMixed)] == 0);
  }
  SUBCASE("request parsing") {
    const auto r = whatif_request_from_json(R"({"k_shop": 3, "budget_n": 2})", s);
    CHECK(r.k_shop == 3);
    CHECK(r.k_hospital == s.config.k_hospital);
    CHECK(r.budget_n == std::optional<std::size_t>(2));
    CHECK(whatif_request_from_json("", s).k_residence == s.config.k_residence);
    CHECK_THROWS_AS(whatif_request_from_json(R"({"k_shops": 3})", s), Error);
    CHECK_THROWS_AS(whatif_request_from_json(R"({"budget_n": -1})", s), Error);
    CHECK_THROWS_AS(whatif_request_from_json("{", s), Error);
  }
}

TEST_CASE("rank_for_budget follows the documented order") {
  using metapath::BridgeClassification;
  using metapath::Category;
  auto make = [](NodeId id, Category c, double conf, std::uint32_t total) {
    BridgeClassification b;
    b.bridge_id = id;
    b.category = c;
    b.confidence = conf;
    b.total_paths = total;
    return b;
  };
  const std::vector<BridgeClassification> cls = {
      make(1, Category::kBalancedMultiUse, 0.0, 0), make(2, Category::kMixed, 0.6, 10),
      make(3, Category::kResidentialProtection, 0.8, 20), make(4, Category::kSupplyChain, 0.95, 20),
      make(5, Category::kSupplyChain, 1.0, 5), make(6, Category::kMedicalAccess, 0.7, 10),
      make(7, Category::kSupplyChain, 0.95, 30), make(8, Category::kSupplyChain, 0.95, 30)};
  CHECK(rank_for_budget(cls, 3) == std::vector<NodeId>{5, 7, 8});
  CHECK(rank_for_budget(cls, 8) == std::vector<NodeId>{5, 7, 8, 4, 6, 3, 2, 1});
  CHECK_THROWS_AS(rank_for_budget(cls, 9), Error);
}

TEST_CASE("load_config resolves relative paths") {
  const auto dir = fixture::scratch_dir("pipeline_config");
  std::ofstream(fs::path(dir) / "c.json") << R"({"streets_path": "s.geojson", "bridges_path": "b.geojson",
    "buildings_path": "x/y.geojson", "k_residence": 12})";
  const auto cfg = load_config((fs::path(dir) / "c.json").string());
  CHECK(cfg.streets_path == (fs::path(dir) / "s.geojson").string());
  CHECK(cfg.buildings_path == (fs::path(dir) / "x/y.geojson").string());
  CHECK(cfg.k_residence == 12);
  CHECK_THROWS_AS(load_config((fs::path(dir) / "missing.json").string()), Error);
}
