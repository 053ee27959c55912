#include <filesystem>

#include "bridgerole/error.hpp"
#include "bridgerole/pipeline.hpp"
#include "pipeline_internal.hpp"

namespace bridgerole::pipeline {

using detail::json;
using detail::read_opt;
using detail::require_known_keys;

void PipelineConfig::validate() const {
  if (k_shop < 1 || k_hospital < 1 || k_residence < 1) {
    throw Error(ErrorCode::kInvalidK, "k_shop, k_hospital and k_residence must be >= 1");
  }
  if (!(radius_m > 0.0)) throw Error(ErrorCode::kInvalidConfig, "radius_m must be positive");
  thresholds.validate();
  encoder.validate();
  if (encoder.input_dim() != static_cast<int>(graph::kFeatureWidth)) {
    throw Error(ErrorCode::kInvalidConfig,
                "encoder.layer_dims must start with " + std::to_string(graph::kFeatureWidth));
  }
}

namespace {

json keys_to_json(const graph::PropertyKeys& k) {
  return json{{"highway", k.highway},   {"trunk_values", k.trunk_values},
              {"name", k.name},         {"span", k.span},
              {"year", k.year},         {"amenity", k.amenity},
              {"hospital_value", k.hospital_value},
              {"shop", k.shop},         {"building", k.building},
              {"residence_values", k.residence_values}};
}

graph::PropertyKeys keys_from_json(const json& j) {
  constexpr std::string_view where = "property_keys";
  require_known_keys(j,
                     {"highway", "trunk_values", "name", "span", "year", "amenity", "hospital_value", "shop",
                      "building", "residence_values"},
                     where);
  graph::PropertyKeys k;
  read_opt(j, "highway", k.highway, where);
  read_opt(j, "trunk_values", k.trunk_values, where);
  read_opt(j, "name", k.name, where);
  read_opt(j, "span", k.span, where);
  read_opt(j, "year", k.year, where);
  read_opt(j, "amenity", k.amenity, where);
  read_opt(j, "hospital_value", k.hospital_value, where);
  read_opt(j, "shop", k.shop, where);
  read_opt(j, "building", k.building, where);
  read_opt(j, "residence_values", k.residence_values, where);
  return k;
}

json thresholds_to_json(const metapath::ClassifierThresholds& t) {
  return json{{"supply_min", t.supply_min},
              {"medical_min", t.medical_min},
              {"residential_min", t.residential_min},
              {"balanced_max", t.balanced_max}};
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

metapath::ClassifierThresholds thresholds_from_json(const json& j) {
  constexpr std::string_view where = "thresholds";
  require_known_keys(j, {"supply_min", "medical_min", "residential_min", "balanced_max"}, where);
  metapath::ClassifierThresholds t;
  read_opt(j, "supply_min", t.supply_min, where);
  read_opt(j, "medical_min", t.medical_min, where);
  read_opt(j, "residential_min", t.residential_min, where);
  read_opt(j, "balanced_max", t.balanced_max, where);
  t.validate();
  return t;
}

json thresholds_json(const metapath::ClassifierThresholds& t) { return thresholds_to_json(t); }

PipelineConfig config_from_json(std::string_view text, const std::string& base_dir) {
  const json j = detail::parse_json(text, "config");
  constexpr std::string_view where = "config";
  require_known_keys(j,
                     {"streets_path", "bridges_path", "buildings_path", "property_keys", "k_shop", "k_hospital",
                      "k_residence", "radius_m", "thresholds", "encoder", "cluster_seed", "output_dir"},
                     where);
  PipelineConfig c;
  read_opt(j, "streets_path", c.streets_path, where);
  read_opt(j, "bridges_path", c.bridges_path, where);
  read_opt(j, "buildings_path", c.buildings_path, where);
  read_opt(j, "k_shop", c.k_shop, where);
  read_opt(j, "k_hospital", c.k_hospital, where);
  read_opt(j, "k_residence", c.k_residence, where);
  read_opt(j, "radius_m", c.radius_m, where);
  read_opt(j, "cluster_seed", c.cluster_seed, where);
  read_opt(j, "output_dir", c.output_dir, where);
  if (auto it = j.find("property_keys"); it != j.end()) c.property_keys = keys_from_json(*it);
  if (auto it = j.find("thresholds"); it != j.end()) c.thresholds = thresholds_from_json(*it);
  if (auto it = j.find("encoder"); it != j.end()) c.encoder = detail::encoder_config_from_json(*it);
  c.streets_path = resolve(c.streets_path, base_dir);
  c.bridges_path = resolve(c.bridges_path, base_dir);
  c.buildings_path = resolve(c.buildings_path, base_dir);
  c.output_dir = resolve(c.output_dir, base_dir);
  c.validate();
  return c;
}

json config_json(const PipelineConfig& c) {
  return json{{"streets_path", c.streets_path},
              {"bridges_path", c.bridges_path},
              {"buildings_path", c.buildings_path},
              {"property_keys", keys_to_json(c.property_keys)},
              {"k_shop", c.k_shop},
              {"k_hospital", c.k_hospital},
              {"k_residence", c.k_residence},
              {"radius_m", c.radius_m},
              {"thresholds", thresholds_to_json(c.thresholds)},
              {"encoder", detail::encoder_config_to_json(c.encoder)},
              {"cluster_seed", c.cluster_seed},
              {"output_dir", c.output_dir}};
}

std::string config_to_json(const PipelineConfig& config) { return config_json(config).dump(2); }

PipelineConfig load_config(const std::string& path) {
  const std::string text = detail::read_file(path);
  const auto dir = std::filesystem::path(path).parent_path().string();
  return config_from_json(text, dir.empty() ? std::string(".") : dir);
}

PipelineConfig write_inputs(const InputDocuments& documents, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  PipelineConfig c;
  c.streets_path = (fs::path(dir) / "streets.geojson").string();
  c.bridges_path = (fs::path(dir) / "bridges.geojson").string();
  c.buildings_path = (fs::path(dir) / "buildings.geojson").string();
  c.output_dir = (fs::path(dir) / "out").string();
  detail::write_file(c.streets_path, documents.streets);
  detail::write_file(c.bridges_path, documents.bridges);
  detail::write_file(c.buildings_path, documents.buildings);
  return c;
}

}  // namespace bridgerole::pipeline
