// SPDX-License-Identifier: Apache-2.0

#include "prbench/netgraph.hpp"

#include <algorithm>
#include <cctype>
#include <queue>

namespace prbench {

bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0;
  std::size_t j = 0;
  const auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  while (i < a.size() && j < b.size()) {
    if (digit(a[i]) && digit(b[j])) {
      std::size_t ie = i;
      std::size_t je = j;
      while (ie < a.size() && digit(a[ie])) ++ie;
      while (je < b.size() && digit(b[je])) ++je;
      // Compare digit runs by value: strip leading zeros, then length, then text.
      std::size_t is = i;
      std::size_t js = j;
      while (is + 1 < ie && a[is] == '0') ++is;
      while (js + 1 < je && b[js] == '0') ++js;
      const auto ra = a.substr(is, ie - is);
      const auto rb = b.substr(js, je - js);
      if (ra.size() != rb.size()) return ra.size() < rb.size();
      if (ra != rb) return ra < rb;
      if (ie - i != je - j) return ie - i < je - j;
      i = ie;
      j = je;
      continue;
    }
    if (a[i] != b[j]) return static_cast<unsigned char>(a[i]) < static_cast<unsigned char>(b[j]);
    ++i;
    ++j;
  }
  return a.size() - i < b.size() - j;
}

NetworkGraph make_network(std::map<std::string, LayerConfig, NaturalLess> nodes,
                          std::vector<std::pair<std::string, std::string>> edges, std::vector<std::string> inputs,
                          std::vector<std::string> outputs) {
  NetworkGraph g;
  g.nodes = std::move(nodes);
  g.edges = std::move(edges);
  g.inputs = std::move(inputs);
  g.outputs = std::move(outputs);

  for (const auto& [id, layer] : g.nodes) {
    validate(layer);
    (void)output_shape(layer);
    g.preds[id];
    g.succs[id];
  }
  for (const auto& [from, to] : g.edges) {
    for (const auto* id : {&from, &to}) {
      if (!g.nodes.contains(*id)) throw Error(ErrorCode::ParseError, "edge names unknown node '" + *id + "'");
    }
    g.succs[from].push_back(to);
    g.preds[to].push_back(from);
  }
  for (auto* list : {&g.inputs, &g.outputs}) {
    for (const auto& id : *list) {
      if (!g.nodes.contains(id)) throw Error(ErrorCode::ParseError, "unknown input/output node '" + id + "'");
    }
  }
  if (g.inputs.empty()) {
    for (const auto& [id, p] : g.preds) {
      if (p.empty()) g.inputs.push_back(id);
    }
  }

  // Kahn's algorithm with natural-order tie-breaking.
  std::map<std::string, std::size_t, NaturalLess> indegree;
  for (const auto& [id, p] : g.preds) indegree[id] = p.size();
  const auto later = [](const std::string& a, const std::string& b) { return natural_less(b, a); };
  std::priority_queue<std::string, std::vector<std::string>, decltype(later)> ready(later);
  for (const auto& [id, d] : indegree) {
    if (d == 0) ready.push(id);
  }
  while (!ready.empty()) {
    const std::string id = ready.top();
    ready.pop();
    g.order.push_back(id);
    for (const auto& next : g.succs[id]) {
      if (--indegree[next] == 0) ready.push(next);
    }
  }
  if (g.order.size() != g.nodes.size()) {
    for (const auto& [id, d] : indegree) {
      if (d > 0) throw Error(ErrorCode::CycleDetected, "node '" + id + "' lies on a cycle");
    }
  }

  std::set<std::string, NaturalLess> seen(g.inputs.begin(), g.inputs.end());
  std::vector<std::string> stack(g.inputs.begin(), g.inputs.end());
  while (!stack.empty()) {
    const std::string id = stack.back();
    stack.pop_back();
    for (const auto& next : g.succs[id]) {
      if (seen.insert(next).second) stack.push_back(next);
    }
  }
  for (const auto& id : g.order) {
    if (!seen.contains(id)) throw Error(ErrorCode::Unreachable, "node '" + id + "' is not reachable from an input");
  }

  for (const auto& [from, to] : g.edges) {
    const Shape produced = output_shape(g.nodes.at(from));
    if (!accepts_input(g.nodes.at(to), produced)) {
      throw Error(ErrorCode::ShapeMismatch, "edge " + from + " -> " + to + ": " + to_string(g.nodes.at(to)) +
                                                " cannot consume " + to_string(produced));
    }
  }
  return g;
}

NetworkGraph load_network(const json& doc) {
  check_format_version(doc, "network");
  std::map<std::string, LayerConfig, NaturalLess> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  try {
    for (const auto& [id, layer] : doc.at("nodes").items()) {
      try {
        nodes.emplace(id, layer_from_json(layer));
      } catch (const Error& e) {
        throw Error(e.code(), "node '" + id + "': " + e.detail());
      }
    }
    for (const auto& e : doc.value("edges", json::array())) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::ParseError, "edges must be [from, to] pairs");
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    inputs = doc.value("inputs", std::vector<std::string>{});
    outputs = doc.value("outputs", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("network: ") + e.what());
  }
  return make_network(std::move(nodes), std::move(edges), std::move(inputs), std::move(outputs));
}

json network_to_json(const NetworkGraph& graph) {
  json nodes = json::object();
  for (const auto& [id, layer] : graph.nodes) nodes[id] = layer;
  json edges = json::array();
  for (const auto& [from, to] : graph.edges) edges.push_back({from, to});
  return json{{"format_version", kFormatVersion},
              {"nodes", nodes},
              {"edges", edges},
              {"inputs", graph.inputs},
              {"outputs", graph.outputs}};
}

// ---------------------------------------------------------------------------

namespace {

class Matcher {
 public:
  explicit Matcher(const NetworkGraph& g) : g_(g) {}

  std::optional<std::vector<std::string>> match(BlockKind kind, const std::string& anchor) const {
    std::optional<std::vector<std::string>> ids;
    switch (kind) {
      case BlockKind::DwSep: ids = chain(anchor, block_pattern(kind)); break;
      case BlockKind::PoolFc: ids = chain(anchor, block_pattern(kind)); break;
      case BlockKind::ResNetPlain: ids = resnet(anchor, false); break;
      case BlockKind::ResNetDown: ids = resnet(anchor, true); break;
    }
    if (!ids) return std::nullopt;
    for (const auto& id : *ids) {
      if (claimed_.contains(id)) return std::nullopt;
    }
    try {
      validate(instance(kind, *ids));
    } catch (const Error&) {
      return std::nullopt;
    }
    return ids;
  }

  BlockInstance instance(BlockKind kind, const std::vector<std::string>& ids) const {
    BlockInstance b{kind, {}};
    for (const auto& id : ids) b.layers.push_back(g_.nodes.at(id));
    return b;
  }

  void claim(const std::vector<std::string>& ids) { claimed_.insert(ids.begin(), ids.end()); }
  bool claimed(const std::string& id) const { return claimed_.contains(id); }

 private:
  OpKind kind(const std::string& id) const { return g_.nodes.at(id).kind; }
  const std::vector<std::string>& preds(const std::string& id) const { return g_.preds.at(id); }
  const std::vector<std::string>& succs(const std::string& id) const { return g_.succs.at(id); }

  // Follows a private single-consumer chain starting at `anchor`.
  std::optional<std::vector<std::string>> chain(const std::string& anchor, const std::vector<OpKind>& pattern) const {
    std::vector<std::string> ids{anchor};
    if (!matches_slot(pattern[0], kind(anchor))) return std::nullopt;
    for (std::size_t i = 1; i < pattern.size(); ++i) {
      const auto& prev = ids.back();
      if (succs(prev).size() != 1) return std::nullopt;
      const auto& next = succs(prev).front();
      if (preds(next).size() != 1 || !matches_slot(pattern[i], kind(next))) return std::nullopt;
      ids.push_back(next);
    }
    return ids;
  }

  // conv0 -> relu -> conv1 -> add -> relu, where add's other operand is the
  // block input itself (plain) or a conv reading it (down).
  std::optional<std::vector<std::string>> resnet(const std::string& anchor, bool down) const {
    if (kind(anchor) != OpKind::Conv2D || preds(anchor).size() != 1) return std::nullopt;
    const std::string& input = preds(anchor).front();
    auto head = chain(anchor, {OpKind::Conv2D, OpKind::ReLU, OpKind::Conv2D});
    if (!head) return std::nullopt;
    const std::string& conv1 = head->back();
    if (succs(conv1).size() != 1) return std::nullopt;
    const std::string& add = succs(conv1).front();
    if (kind(add) != OpKind::Add || preds(add).size() != 2 || succs(add).size() != 1) return std::nullopt;
    const std::string& other = preds(add)[0] == conv1 ? preds(add)[1] : preds(add)[0];
    const std::string& relu = succs(add).front();
    if (kind(relu) != OpKind::ReLU || preds(relu).size() != 1) return std::nullopt;

    std::vector<std::string> ids = *head;
    if (down) {
      if (kind(other) != OpKind::Conv2D || preds(other).size() != 1 || preds(other).front() != input ||
          succs(other).size() != 1) {
        return std::nullopt;
      }
      ids.push_back(other);
    } else if (other != input) {
      return std::nullopt;
    }
    ids.push_back(add);
    ids.push_back(relu);
    return ids;
  }

  const NetworkGraph& g_;
  std::set<std::string> claimed_;
};

}  // namespace

Decomposition match_blocks(const NetworkGraph& graph) {
  Matcher matcher(graph);
  Decomposition d;
  for (BlockKind kind : kAllBlockKinds) {
    for (const auto& id : graph.order) {
      if (matcher.claimed(id)) continue;
      if (auto ids = matcher.match(kind, id)) {
        matcher.claim(*ids);
        d.blocks.push_back({matcher.instance(kind, *ids), *ids});
      }
    }
  }
  // Report blocks in network order.
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < graph.order.size(); ++i) position[graph.order[i]] = i;
  std::stable_sort(d.blocks.begin(), d.blocks.end(), [&](const MatchedBlock& a, const MatchedBlock& b) {
    return position.at(a.node_ids.front()) < position.at(b.node_ids.front());
  });
  for (const auto& id : graph.order) {
    if (!matcher.claimed(id)) d.residual_layers.push_back(id);
  }
  return d;
}

LayerEstimator make_estimator(const ModelSet& models) {
  return [&models](const LayerConfig& layer) -> double {
    if (models.zero_cost.contains(layer.kind)) return 0.0;
    const auto it = models.models.find(layer.kind);
    if (it == models.models.end()) {
      throw Error(ErrorCode::MissingEstimator, "no model for " + std::string(to_string(layer.kind)));
    }
    return estimate_layer(it->second, layer);
  };
}

NetworkEstimate estimate_network(const NetworkGraph& graph, const LayerEstimator& estimator,
                                 const PlatformProfile& profile) {
  const Decomposition d = match_blocks(graph);
  NetworkEstimate out;
  for (const auto& m : d.blocks) {
    try {
      out.blocks.push_back({m.block.kind, m.node_ids, estimate_block(m.block, estimator, profile)});
    } catch (const Error& e) {
      throw Error(e.code(), std::string(to_string(m.block.kind)) + " at " + m.node_ids.front() + ": " + e.detail());
    }
  }
  for (const auto& id : d.residual_layers) {
    const auto& layer = graph.nodes.at(id);
    double t = 0.0;
    if (!(profile.relu_fused && layer.kind == OpKind::ReLU)) {
      try {
        t = estimator(layer);
      } catch (const Error& e) {
        throw Error(e.code(), "node " + id + ": " + e.detail());
      }
    }
    out.residual.push_back({id, layer.kind, t});
  }
  for (const auto& b : out.blocks) out.total += b.seconds;
  for (const auto& r : out.residual) out.total += r.seconds;
  return out;
}

NetworkEstimate estimate_network(const NetworkGraph& graph, const ModelSet& models,
                                 const PlatformProfile& profile) {
  return estimate_network(graph, make_estimator(models), profile);
}

json to_json(const NetworkEstimate& estimate) {
  json blocks = json::array();
  for (const auto& b : estimate.blocks) {
    blocks.push_back({{"kind", std::string(to_string(b.kind))}, {"nodes", b.node_ids}, {"seconds", b.seconds}});
  }
  json residual = json::array();
  for (const auto& r : estimate.residual) {
    residual.push_back({{"node", r.node_id}, {"kind", std::string(to_string(r.kind))}, {"seconds", r.seconds}});
  }
  return json{{"format_version", kFormatVersion},
              {"total_s", estimate.total},
              {"blocks", blocks},
              {"residual", residual}};
}

// ---------------------------------------------------------------------------

namespace {

class GraphBuilder {
 public:
  std::string add(LayerConfig layer, std::vector<std::string> inputs) {
    const std::string id = "n" + std::to_string(++count_);
    for (auto& from : inputs) edges_.emplace_back(std::move(from), id);
    nodes_.emplace(id, std::move(layer));
    return id;
  }

  const LayerConfig& at(const std::string& id) const { return nodes_.at(id); }

  NetworkGraph finish(const std::string& output) {
    return make_network(std::move(nodes_), std::move(edges_), {"n1"}, {output});
  }

 private:
  int count_{0};
  std::map<std::string, LayerConfig, NaturalLess> nodes_;
  std::vector<std::pair<std::string, std::string>> edges_;
};

LayerConfig conv2d(OpKind kind, Shape in, std::int64_t k, std::int64_t f, std::int64_t s, std::int64_t pad) {
  return {kind, {{"C", in.c}, {"C_h", in.h}, {"C_w", in.w}, {"K", k}, {"F_h", f}, {"F_w", f}, {"s", s}, {"pad", pad}}};
}

LayerConfig elementwise(OpKind kind, Shape s) { return {kind, {{"C", s.c}, {"C_h", s.h}, {"C_w", s.w}}}; }

LayerConfig pool(OpKind kind, Shape in, std::int64_t f) {
  return {kind, {{"C", in.c}, {"C_h", in.h}, {"C_w", in.w}, {"F", f}}};
}

LayerConfig dense(std::int64_t in, std::int64_t out) {
  return {OpKind::FullyConnected, {{"batch", 1}, {"in", in}, {"out", out}}};
}

void check_resolution(std::int64_t resolution, std::int64_t classes) {
  if (resolution < 32 || resolution % 32 != 0) {
    throw Error(ErrorCode::InvalidArgument, "resolution must be a positive multiple of 32");
  }
  if (classes < 1) throw Error(ErrorCode::InvalidArgument, "classes must be >= 1");
}

}  // namespace

NetworkGraph mobilenet_v1(std::int64_t resolution, std::int64_t classes) {
  check_resolution(resolution, classes);
  GraphBuilder b;
  Shape x{3, resolution, resolution};
  std::string last = b.add(conv2d(OpKind::Conv2D, x, 32, 3, 2, 1), {});
  x = output_shape(b.at(last));
  last = b.add(elementwise(OpKind::ReLU, x), {last});

  const std::pair<std::int64_t, std::int64_t> groups[] = {{64, 1},  {128, 2}, {128, 1}, {256, 2}, {256, 1},
                                                          {512, 2}, {512, 1}, {512, 1}, {512, 1}, {512, 1},
                                                          {512, 1}, {1024, 2}, {1024, 1}};
  for (const auto& [channels, stride] : groups) {
    last = b.add(conv2d(OpKind::DepthwiseConv2D, x, 1, 3, stride, 1), {last});
    x = output_shape(b.at(last));
    last = b.add(elementwise(OpKind::ReLU, x), {last});
    last = b.add(conv2d(OpKind::PointwiseConv2D, x, channels, 1, 1, 0), {last});
    x = output_shape(b.at(last));
    last = b.add(elementwise(OpKind::ReLU, x), {last});
  }
  last = b.add(pool(OpKind::AvgPool2D, x, x.h), {last});
  last = b.add(dense(x.c, classes), {last});
  return b.finish(last);
}

NetworkGraph resnet18(std::int64_t resolution, std::int64_t classes) {
  check_resolution(resolution, classes);
  GraphBuilder b;
  Shape x{3, resolution, resolution};
  std::string last = b.add(conv2d(OpKind::Conv2D, x, 64, 7, 2, 3), {});
  x = output_shape(b.at(last));
  last = b.add(elementwise(OpKind::ReLU, x), {last});
  last = b.add(pool(OpKind::MaxPool2D, x, 2), {last});
  x = output_shape(b.at(last));

  for (std::int64_t channels : {64, 128, 256, 512}) {
    for (int i = 0; i < 2; ++i) {
      const bool down = i == 0 && channels != 64;
      const std::string input = last;
      const Shape in = x;
      std::string y = b.add(conv2d(OpKind::Conv2D, in, channels, 3, down ? 2 : 1, 1), {input});
      x = output_shape(b.at(y));
      y = b.add(elementwise(OpKind::ReLU, x), {y});
      y = b.add(conv2d(OpKind::Conv2D, x, channels, 3, 1, 1), {y});
      std::string shortcut = input;
      if (down) shortcut = b.add(conv2d(OpKind::Conv2D, in, channels, 1, 2, 0), {input});
      y = b.add(elementwise(OpKind::Add, x), {y, shortcut});
      last = b.add(elementwise(OpKind::ReLU, x), {y});
    }
  }
  last = b.add(pool(OpKind::AvgPool2D, x, x.h), {last});
  last = b.add(dense(x.c, classes), {last});
  return b.finish(last);
}

}  // namespace prbench
