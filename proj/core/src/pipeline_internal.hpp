#pragma once

#include "bridgerole/pipeline.hpp"
#include "json_io.hpp"

namespace bridgerole::pipeline {

detail::json config_json(const PipelineConfig& config);
detail::json thresholds_json(const metapath::ClassifierThresholds& thresholds);
metapath::ClassifierThresholds thresholds_from_json(const detail::json& j);

detail::json graph_to_json(const graph::HetGraph& graph);
graph::HetGraph graph_from_json(const detail::json& j);

}  // namespace bridgerole::pipeline
