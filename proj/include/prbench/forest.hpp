// SPDX-License-Identifier: Apache-2.0
//
// Random-forest regression over layer configurations: CART trees with a
// variance criterion, bootstrap bagging and per-split feature subsampling.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prbench/domain.hpp"
#include "prbench/prset.hpp"

namespace prbench {

/// Feature encodings:
///   1: canonical parameters in canonical order
///   2: encoding 1 followed by mac_count and output spatial size (h * w)
inline constexpr int kDefaultEncoding = 2;
inline constexpr int kMaxEncoding = 2;

std::vector<double> encode_features(const LayerConfig& config, int encoding = kDefaultEncoding);
std::vector<std::string> feature_names(OpKind kind, int encoding = kDefaultEncoding);

struct ForestHyperparams {
  int n_trees{100};
  int max_depth{0};  // 0: unlimited
  int min_samples_leaf{1};
  double feature_subsample{1.0 / 3.0};
  bool bootstrap{true};
  std::uint64_t seed{0};
  int encoding{kDefaultEncoding};
  unsigned threads{1};  // 0: hardware concurrency; results never depend on it
};

void validate(const ForestHyperparams& hp);

struct TreeNode {
  int feature{-1};  // -1 marks a leaf
  double threshold{0.0};
  int left{-1};   // taken when x[feature] <= threshold
  int right{-1};
  double value{0.0};  // mean training target of the node
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> features) const;
  std::size_t leaf_count() const;
};

struct TrainingSample {
  LayerConfig config;
  double latency{0.0};
};

struct LatencyModel {
  OpKind kind{OpKind::Conv2D};
  std::vector<RegressionTree> trees;
  /// Present when estimates should be taken at the representative config.
  std::optional<PrLattice> lattice;
  int encoding{kDefaultEncoding};
  ForestHyperparams hyperparams;
  std::size_t n_samples{0};
};

/// Trains hp.n_trees CART trees. Splits minimise the summed squared error of
/// the children at midpoint thresholds; ties keep the lowest feature index,
/// then the lowest threshold. If none of the subsampled features can split a
/// node, the remaining features are tried in random order. Throws
/// InsufficientData (< 2 samples), KindMismatch (mixed kinds) and
/// InvalidArgument (non-positive latency).
LatencyModel fit(std::span<const TrainingSample> samples, const ForestHyperparams& hp,
                 std::optional<PrLattice> lattice = std::nullopt);

/// Mean of the per-tree predictions.
double predict(const LatencyModel& model, const LayerConfig& config);

/// predict at the config's representative when the model carries a lattice.
double estimate_layer(const LatencyModel& model, const LayerConfig& config);

/// Versioned JSON: {"format_version", "meta", "widths", "lattice", "trees"}.
std::string serialize(const LatencyModel& model);
/// Throws VersionMismatch or CorruptModel.
LatencyModel deserialize(std::string_view text);

}  // namespace prbench
