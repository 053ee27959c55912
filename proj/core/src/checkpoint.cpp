#include <fstream>

#include "bridgerole/error.hpp"
#include "bridgerole/rgcnvgae.hpp"
#include "json_io.hpp"

namespace bridgerole::vgae {
namespace {

constexpr const char* kFormatName = "bridgerole.rgcnvgae.checkpoint";
constexpr int kFormatVersion = 1;

}  // namespace

void write_checkpoint(const std::string& path, const EncoderConfig& config, const RgcnWeights& weights,
                      const LatentEmbedding& embedding) {
  using detail::json;
  json doc{{"format", kFormatName},
           {"version", kFormatVersion},
           {"config", detail::encoder_config_to_json(config)},
           {"weights", detail::weights_to_json(weights)},
           {"embedding",
            {{"node_ids", embedding.node_ids},
             {"mu", detail::matrix_to_json(embedding.mu)},
             {"logvar", detail::matrix_to_json(embedding.logvar)}}}};
  detail::write_file(path, doc.dump());
}

Checkpoint read_checkpoint(const std::string& path) {
  const auto doc = detail::parse_json(detail::read_file(path), path);
  if (doc.value("format", "") != kFormatName) throw Error(ErrorCode::kFormat, path + ": not an encoder checkpoint");
  if (doc.value("version", 0) != kFormatVersion) {
    throw Error(ErrorCode::kFormat, path + ": unsupported checkpoint version");
  }
  Checkpoint ck;
  try {
    ck.config = detail::encoder_config_from_json(doc.at("config"));
    ck.weights = detail::weights_from_json(doc.at("weights"));
    const auto& e = doc.at("embedding");
    ck.embedding.node_ids = e.at("node_ids").get<std::vector<graph::NodeId>>();
    ck.embedding.mu = detail::matrix_from_json(e.at("mu"));
    ck.embedding.logvar = detail::matrix_from_json(e.at("logvar"));
    ck.embedding.z = ck.embedding.mu;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kFormat, path + ": " + ex.what());
  }
  return ck;
}

void write_embeddings_csv(const std::string& path, const LatentEmbedding& embedding) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.precision(17);
  out << "node_id";
  for (Eigen::Index d = 0; d < embedding.mu.cols(); ++d) out << ",mu" << d;
  out << '\n';
  for (Eigen::Index r = 0; r < embedding.mu.rows(); ++r) {
    out << (static_cast<std::size_t>(r) < embedding.node_ids.size() ? embedding.node_ids[static_cast<std::size_t>(r)]
                                                                    : static_cast<graph::NodeId>(r));
    for (Eigen::Index d = 0; d < embedding.mu.cols(); ++d) out << ',' << embedding.mu(r, d);
    out << '\n';
  }
}

}  // namespace bridgerole::vgae
