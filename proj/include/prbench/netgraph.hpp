// SPDX-License-Identifier: Apache-2.0
//
// Whole-network estimation: operator graphs, building-block matching and the
// sum over blocks and leftover layers.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "prbench/forest.hpp"
#include "prbench/fusion.hpp"

namespace prbench {

/// "n2" < "n10": digit runs compare numerically, everything else bytewise.
bool natural_less(std::string_view a, std::string_view b);

struct NaturalLess {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const { return natural_less(a, b); }
};

struct NetworkGraph {
  std::map<std::string, LayerConfig, NaturalLess> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  /// Topological order; among ready nodes the naturally smallest id first.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::string>, NaturalLess> preds;
  std::map<std::string, std::vector<std::string>, NaturalLess> succs;
};

/// Builds the derived fields and checks the graph: edges name known nodes
/// (ParseError), no cycles (CycleDetected), every node reachable from an
/// input (Unreachable), consumers accept their producers' shapes
/// (ShapeMismatch). Without explicit inputs, source nodes are the inputs.
NetworkGraph make_network(std::map<std::string, LayerConfig, NaturalLess> nodes,
                          std::vector<std::pair<std::string, std::string>> edges,
                          std::vector<std::string> inputs = {}, std::vector<std::string> outputs = {});

/// {"nodes": {"n1": {...layer...}}, "edges": [["n1", "n2"]], "inputs": [...], "outputs": [...]}
NetworkGraph load_network(const json& doc);
json network_to_json(const NetworkGraph& graph);

struct MatchedBlock {
  BlockInstance block;
  std::vector<std::string> node_ids;  // parallel to block.layers
};

struct Decomposition {
  std::vector<MatchedBlock> blocks;
  std::vector<std::string> residual_layers;  // in topological order
};

/// Greedy matching: one topological pass per block kind in the order
/// ResNetDown, ResNetPlain, DwSep, PoolFc. Intermediate block outputs may not
/// escape the block; a match must also pass block validation.
Decomposition match_blocks(const NetworkGraph& graph);

/// Forest models per kind plus kinds that cost nothing.
struct ModelSet {
  std::map<OpKind, LatencyModel> models;
  std::set<OpKind> zero_cost;
};

/// estimate_layer through the matching model; MissingEstimator otherwise.
LayerEstimator make_estimator(const ModelSet& models);

struct BlockEstimate {
  BlockKind kind{BlockKind::DwSep};
  std::vector<std::string> node_ids;
  double seconds{0.0};
};

struct LayerEstimate {
  std::string node_id;
  OpKind kind{OpKind::Conv2D};
  double seconds{0.0};
};

struct NetworkEstimate {
  double total{0.0};
  std::vector<BlockEstimate> blocks;
  std::vector<LayerEstimate> residual;
};

/// total = sum of block estimates followed by residual estimates. Residual
/// ReLU layers cost nothing when the profile fuses ReLU.
NetworkEstimate estimate_network(const NetworkGraph& graph, const LayerEstimator& estimator,
                                 const PlatformProfile& profile);
NetworkEstimate estimate_network(const NetworkGraph& graph, const ModelSet& models,
                                 const PlatformProfile& profile);

json to_json(const NetworkEstimate& estimate);

// Reference topologies --------------------------------------------------------

/// MobileNetV1: stem conv, 13 depthwise-separable groups, global average
/// pool and classifier. `resolution` must be a multiple of 32.
NetworkGraph mobilenet_v1(std::int64_t resolution = 224, std::int64_t classes = 1000);

/// ResNet18: stem conv and pool, 8 two-conv residual blocks (3 with a
/// projection shortcut), global average pool and classifier.
NetworkGraph resnet18(std::int64_t resolution = 224, std::int64_t classes = 1000);

}  // namespace prbench
