// SPDX-License-Identifier: Apache-2.0

#include "prbench/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "prbench/json_io.hpp"
#include "prbench/rng.hpp"

namespace prbench {

std::vector<double> encode_features(const LayerConfig& config, int encoding) {
  if (encoding < 1 || encoding > kMaxEncoding) {
    throw Error(ErrorCode::EncodingVersionMismatch, "unsupported feature encoding " + std::to_string(encoding));
  }
  std::vector<double> x;
  for (const auto& name : canonical_params(config.kind)) x.push_back(static_cast<double>(config.at(name)));
  if (encoding >= 2) {
    const Shape out = output_shape(config);
    x.push_back(static_cast<double>(mac_count(config)));
    x.push_back(static_cast<double>(out.h * out.w));
  }
  return x;
}

std::vector<std::string> feature_names(OpKind kind, int encoding) {
  const auto canon = canonical_params(kind);
  std::vector<std::string> names(canon.begin(), canon.end());
  if (encoding >= 2) {
    names.push_back("mac_count");
    names.push_back("out_spatial");
  }
  return names;
}

void validate(const ForestHyperparams& hp) {
  if (hp.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "n_trees must be >= 1");
  if (hp.max_depth < 0) throw Error(ErrorCode::InvalidArgument, "max_depth must be >= 0");
  if (hp.min_samples_leaf < 1) throw Error(ErrorCode::InvalidArgument, "min_samples_leaf must be >= 1");
  if (!(hp.feature_subsample > 0.0) || hp.feature_subsample > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "feature_subsample must lie in (0, 1]");
  }
  if (hp.encoding < 1 || hp.encoding > kMaxEncoding) {
    throw Error(ErrorCode::EncodingVersionMismatch, "unsupported feature encoding " + std::to_string(hp.encoding));
  }
}

double RegressionTree::predict(std::span<const double> features) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& node = nodes[i];
    i = static_cast<std::size_t>(features[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                 : node.right);
  }
  return nodes[i].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

namespace {

struct Split {
  int feature{-1};
  double threshold{0.0};
  double sse{0.0};
  std::size_t left_count{0};
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns, const std::vector<double>& targets,
              const ForestHyperparams& hp, std::uint64_t seed)
      : columns_(columns), y_(targets), hp_(hp), rng_(seed) {}

  RegressionTree build() {
    const std::size_t n = y_.size();
    std::vector<std::size_t> rows(n);
    if (hp_.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng_.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    grow(rows, 0, rows.size(), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    const std::size_t count = end - begin;
    double sum = 0.0;
    double lo = y_[rows[begin]];
    double hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[rows[i]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // A pure node keeps its exact target instead of a rounded mean.
    const double mean = lo == hi ? lo : sum / static_cast<double>(count);
    tree_.nodes[static_cast<std::size_t>(id)].value = mean;

    const bool depth_exhausted = hp_.max_depth > 0 && depth >= hp_.max_depth;
    if (lo == hi || depth_exhausted || count < 2 * static_cast<std::size_t>(hp_.min_samples_leaf)) return id;

    const Split split = best_split(rows, begin, end, mean);
    if (split.feature < 0) return id;

    const auto& col = columns_[static_cast<std::size_t>(split.feature)];
    auto middle = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                        rows.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](std::size_t r) { return col[r] <= split.threshold; });
    const auto mid = static_cast<std::size_t>(middle - rows.begin());

    const int left = grow(rows, begin, mid, depth + 1);
    const int right = grow(rows, mid, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  // Scans one feature; improves `best` only on a strictly smaller SSE, so the
  // caller's ascending feature order settles ties.
  bool scan_feature(int feature, const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                    double mean, Split& best) {
    const auto& col = columns_[static_cast<std::size_t>(feature)];
    order_.clear();
    for (std::size_t i = begin; i < end; ++i) order_.emplace_back(col[rows[i]], y_[rows[i]] - mean);
    std::sort(order_.begin(), order_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t n = order_.size();
    if (order_.front().first == order_.back().first) return false;

    double total = 0.0;
    double total_sq = 0.0;
    for (const auto& [x, v] : order_) {
      total += v;
      total_sq += v * v;
    }
    const std::size_t min_leaf = static_cast<std::size_t>(hp_.min_samples_leaf);
    bool found = false;
    double left = 0.0;
    double left_sq = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left += order_[i].second;
      left_sq += order_[i].second * order_[i].second;
      if (order_[i].first == order_[i + 1].first) continue;
      const std::size_t nl = i + 1;
      const std::size_t nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double right = total - left;
      const double right_sq = total_sq - left_sq;
      const double sse = (left_sq - left * left / static_cast<double>(nl)) +
                         (right_sq - right * right / static_cast<double>(nr));
      found = true;
      if (best.feature < 0 || sse < best.sse) {
        best.feature = feature;
        best.sse = sse;
        best.threshold = 0.5 * (order_[i].first + order_[i + 1].first);
        best.left_count = nl;
      }
    }
    return found;
  }

  Split best_split(const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end, double mean) {
    const int d = static_cast<int>(columns_.size());
    std::vector<int> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    for (int i = d - 1; i > 0; --i) {
      std::swap(features[static_cast<std::size_t>(i)],
                features[static_cast<std::size_t>(rng_.below(static_cast<std::uint64_t>(i) + 1))]);
    }
    const auto k = static_cast<std::size_t>(
        std::max(1, static_cast<int>(std::floor(hp_.feature_subsample * d + 1e-9))));

    std::vector<int> chosen(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
    Split best;
    for (int f : chosen) scan_feature(f, rows, begin, end, mean, best);
    for (std::size_t i = k; best.feature < 0 && i < features.size(); ++i) {
      scan_feature(features[i], rows, begin, end, mean, best);
    }
    return best;
  }

  const std::vector<std::vector<double>>& columns_;
  const std::vector<double>& y_;
  const ForestHyperparams& hp_;
  Rng rng_;
  RegressionTree tree_;
  std::vector<std::pair<double, double>> order_;
};

}  // namespace

LatencyModel fit(std::span<const TrainingSample> samples, const ForestHyperparams& hp,
                 std::optional<PrLattice> lattice) {
  validate(hp);
  if (samples.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "need >= 2 training samples, got " + std::to_string(samples.size()));
  }
  const OpKind kind = samples.front().config.kind;
  if (lattice && lattice->kind != kind) {
    throw Error(ErrorCode::KindMismatch, "lattice is for " + std::string(to_string(lattice->kind)));
  }
  const std::size_t d = feature_names(kind, hp.encoding).size();
  std::vector<std::vector<double>> columns(d, std::vector<double>(samples.size()));
  std::vector<double> targets(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.config.kind != kind) {
      throw Error(ErrorCode::KindMismatch, "training set mixes " + std::string(to_string(kind)) + " and " +
                                               std::string(to_string(s.config.kind)));
    }
    if (!(s.latency > 0.0) || !std::isfinite(s.latency)) {
      throw Error(ErrorCode::InvalidArgument, "training latencies must be positive");
    }
    validate(s.config);
    const auto x = encode_features(s.config, hp.encoding);
    for (std::size_t f = 0; f < d; ++f) columns[f][i] = x[f];
    targets[i] = s.latency;
  }

  LatencyModel model{kind, std::vector<RegressionTree>(static_cast<std::size_t>(hp.n_trees)), std::move(lattice),
                     hp.encoding, hp, samples.size()};
  auto train = [&](std::size_t t) {
    TreeBuilder builder(columns, targets, hp, mix_seed(hp.seed, t));
    model.trees[t] = builder.build();
  };
  unsigned workers = hp.threads == 0 ? std::thread::hardware_concurrency() : hp.threads;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(hp.n_trees)));
  if (workers == 1) {
    for (std::size_t t = 0; t < model.trees.size(); ++t) train(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < model.trees.size(); t = next++) train(t);
      });
    }
  }
  return model;
}

double predict(const LatencyModel& model, const LayerConfig& config) {
  if (config.kind != model.kind) {
    throw Error(ErrorCode::KindMismatch, "model estimates " + std::string(to_string(model.kind)) + ", got " +
                                             std::string(to_string(config.kind)));
  }
  if (model.encoding < 1 || model.encoding > kMaxEncoding) {
    throw Error(ErrorCode::EncodingVersionMismatch, "model uses feature encoding " +
                                                        std::to_string(model.encoding) + ", supported up to " +
                                                        std::to_string(kMaxEncoding));
  }
  if (model.trees.empty()) throw Error(ErrorCode::CorruptModel, "model has no trees");
  validate(config);
  const auto x = encode_features(config, model.encoding);
  // Shifted mean: exact whenever every tree agrees.
  const double first = model.trees.front().predict(x);
  double shift = 0.0;
  for (std::size_t t = 1; t < model.trees.size(); ++t) shift += model.trees[t].predict(x) - first;
  return first + shift / static_cast<double>(model.trees.size());
}

double estimate_layer(const LatencyModel& model, const LayerConfig& config) {
  if (config.kind != model.kind) {
    throw Error(ErrorCode::KindMismatch, "model estimates " + std::string(to_string(model.kind)) + ", got " +
                                             std::string(to_string(config.kind)));
  }
  if (!model.lattice) return predict(model, config);
  return predict(model, map_to_pr(config, *model.lattice).config);
}

// ---------------------------------------------------------------------------

std::string serialize(const LatencyModel& model) {
  const auto& hp = model.hyperparams;
  json meta{{"kind", std::string(to_string(model.kind))},
            {"encoding_version", model.encoding},
            {"feature_names", feature_names(model.kind, model.encoding)},
            {"n_samples", model.n_samples},
            {"seed", hp.seed},
            {"hyperparams",
             {{"n_trees", hp.n_trees},
              {"max_depth", hp.max_depth},
              {"min_samples_leaf", hp.min_samples_leaf},
              {"feature_subsample", hp.feature_subsample},
              {"bootstrap", hp.bootstrap}}}};
  json widths = json::object();
  if (model.lattice) {
    for (const auto& name : canonical_params(model.kind)) widths[name] = model.lattice->width(name);
  }
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back(n.feature < 0 ? json::array({-1, n.value})
                                    : json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    }
    trees.push_back(json{{"nodes", std::move(nodes)}});
  }
  json doc{{"format_version", kFormatVersion}, {"meta", meta}, {"widths", widths}};
  doc["lattice"] = model.lattice ? json(*model.lattice) : json(nullptr);
  doc["trees"] = std::move(trees);
  return doc.dump() + "\n";
}

LatencyModel deserialize(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::CorruptModel, std::string("model is not valid JSON: ") + e.what());
  }
  check_format_version(doc, "model");
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw Error(ErrorCode::CorruptModel, "model lacks format_version");
  }
  LatencyModel model;
  try {
    const auto& meta = doc.at("meta");
    model.kind = parse_op_kind(meta.at("kind").get<std::string>());
    model.encoding = meta.at("encoding_version").get<int>();
    model.n_samples = meta.at("n_samples").get<std::size_t>();
    const auto& hp = meta.at("hyperparams");
    model.hyperparams.seed = meta.at("seed").get<std::uint64_t>();
    model.hyperparams.n_trees = hp.at("n_trees").get<int>();
    model.hyperparams.max_depth = hp.at("max_depth").get<int>();
    model.hyperparams.min_samples_leaf = hp.at("min_samples_leaf").get<int>();
    model.hyperparams.feature_subsample = hp.at("feature_subsample").get<double>();
    model.hyperparams.bootstrap = hp.at("bootstrap").get<bool>();
    model.hyperparams.encoding = model.encoding;
    if (!doc.at("lattice").is_null()) model.lattice = doc.at("lattice").get<PrLattice>();

    const std::size_t d = feature_names(model.kind, std::clamp(model.encoding, 1, kMaxEncoding)).size();
    for (const auto& t : doc.at("trees")) {
      RegressionTree tree;
      const auto& nodes = t.at("nodes");
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        TreeNode node;
        if (n.size() == 2) {
          node.value = n[1].get<double>();
        } else if (n.size() == 5) {
          node.feature = n[0].get<int>();
          node.threshold = n[1].get<double>();
          node.left = n[2].get<int>();
          node.right = n[3].get<int>();
          node.value = n[4].get<double>();
          const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(nodes.size()); };
          if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= d || !in_range(node.left) ||
              !in_range(node.right)) {
            throw Error(ErrorCode::CorruptModel, "tree node " + std::to_string(i) + " is malformed");
          }
        } else {
          throw Error(ErrorCode::CorruptModel, "tree node " + std::to_string(i) + " has wrong arity");
        }
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw Error(ErrorCode::CorruptModel, "empty tree");
      model.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptModel, e.what());
  }
  if (model.trees.empty()) throw Error(ErrorCode::CorruptModel, "model has no trees");
  return model;
}

}  // namespace prbench
