#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include "bridgerole/error.hpp"
#include "bridgerole/rgcnvgae.hpp"
#include "json.hpp"

namespace bridgerole::detail {

using nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

inline json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string(what) + ": " + e.what());
  }
}

// Rejects keys outside `allowed`; `where` prefixes the message.
inline void require_known_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                               std::string_view where) {
  if (!obj.is_object()) throw Error(ErrorCode::kInvalidConfig, std::string(where) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::kInvalidConfig, std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_opt(const json& obj, const char* key, T& out, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidConfig, std::string(where) + ": bad value for '" + key + "'");
  }
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw Error(ErrorCode::kFormat, "matrix row count mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = data[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorCode::kFormat, "matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline json encoder_config_to_json(const vgae::EncoderConfig& c) {
  return json{{"layer_dims", c.layer_dims},
              {"num_bases", c.num_bases},
              {"learning_rate", c.learning_rate},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"beta_start", c.beta_start},
              {"beta_end", c.beta_end},
              {"beta_epochs", c.beta_epochs},
              {"neg_ratio", c.neg_ratio},
              {"patience", c.patience},
              {"min_improvement", c.min_improvement},
              {"max_epochs", c.max_epochs},
              {"seed", c.seed},
              {"holdout_fraction", c.holdout_fraction}};
}

inline vgae::EncoderConfig encoder_config_from_json(const json& j) {
  constexpr std::string_view where = "encoder";
  require_known_keys(j,
                     {"layer_dims", "num_bases", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
                      "beta_start", "beta_end", "beta_epochs", "neg_ratio", "patience", "min_improvement",
                      "max_epochs", "seed", "holdout_fraction"},
                     where);
  vgae::EncoderConfig c;
  read_opt(j, "layer_dims", c.layer_dims, where);
  read_opt(j, "num_bases", c.num_bases, where);
  read_opt(j, "learning_rate", c.learning_rate, where);
  read_opt(j, "adam_beta1", c.adam_beta1, where);
  read_opt(j, "adam_beta2", c.adam_beta2, where);
  read_opt(j, "adam_eps", c.adam_eps, where);
  read_opt(j, "beta_start", c.beta_start, where);
  read_opt(j, "beta_end", c.beta_end, where);
  read_opt(j, "beta_epochs", c.beta_epochs, where);
  read_opt(j, "neg_ratio", c.neg_ratio, where);
  read_opt(j, "patience", c.patience, where);
  read_opt(j, "min_improvement", c.min_improvement, where);
  read_opt(j, "max_epochs", c.max_epochs, where);
  read_opt(j, "seed", c.seed, where);
  read_opt(j, "holdout_fraction", c.holdout_fraction, where);
  c.validate();
  return c;
}

inline json layer_to_json(const vgae::RgcnLayer& layer) {
  json bases = json::array();
  for (const auto& b : layer.bases) bases.push_back(matrix_to_json(b));
  return json{{"bases", std::move(bases)},
              {"coefficients", matrix_to_json(layer.coefficients)},
              {"self_loop", matrix_to_json(layer.self_loop)}};
}

inline vgae::RgcnLayer layer_from_json(const json& j) {
  vgae::RgcnLayer layer;
  for (const auto& b : j.at("bases")) layer.bases.push_back(matrix_from_json(b));
  layer.coefficients = matrix_from_json(j.at("coefficients"));
  layer.self_loop = matrix_from_json(j.at("self_loop"));
  return layer;
}

inline json weights_to_json(const vgae::RgcnWeights& w) {
  json hidden = json::array();
  for (const auto& l : w.hidden) hidden.push_back(layer_to_json(l));
  return json{{"hidden", std::move(hidden)},
              {"mu_head", layer_to_json(w.mu_head)},
              {"logvar_head", layer_to_json(w.logvar_head)}};
}

inline vgae::RgcnWeights weights_from_json(const json& j) {
  vgae::RgcnWeights w;
  for (const auto& l : j.at("hidden")) w.hidden.push_back(layer_from_json(l));
  w.mu_head = layer_from_json(j.at("mu_head"));
  w.logvar_head = layer_from_json(j.at("logvar_head"));
  return w;
}

}  // namespace bridgerole::detail
