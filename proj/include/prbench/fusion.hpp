// SPDX-License-Identifier: Apache-2.0
//
// Building-block latency composition. Block layer patterns, in order:
//   DwSep        DepthwiseConv2D, ReLU, PointwiseConv2D, ReLU
//   ResNetPlain  Conv2D, ReLU, Conv2D, Add, ReLU
//   ResNetDown   Conv2D, ReLU, Conv2D, Conv2D (shortcut), Add, ReLU
//   PoolFc       AvgPool2D | MaxPool2D, FullyConnected

#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prbench/domain.hpp"
#include "prbench/json_io.hpp"

namespace prbench {

/// Layer kinds of a block pattern, in order. A pooling slot is reported as
/// AvgPool2D but accepts MaxPool2D too.
std::vector<OpKind> block_pattern(BlockKind kind);
bool matches_slot(OpKind slot, OpKind actual) noexcept;

/// Checks pattern kinds and arity, per-layer validity and shape chaining.
/// Throws InvalidBlock or ShapeMismatch.
void validate(const BlockInstance& block);

/// Sum of mac_count over the non-ReLU layers.
std::int64_t block_ops(const BlockInstance& block);

/// Per-layer estimate; implementations throw MissingEstimator for kinds they
/// do not cover.
using LayerEstimator = std::function<double(const LayerConfig&)>;

struct FusingWeights {
  double w{0.0};  // seconds per MAC
  double c{0.0};  // seconds
  friend bool operator==(const FusingWeights&, const FusingWeights&) = default;
};

using FusingFactorModel = std::map<BlockKind, FusingWeights>;

struct PlatformProfile {
  enum class Mode { ParallelFu, FusingFactor, PlainSum };

  Mode mode{Mode::PlainSum};
  std::set<BlockKind> parallel_pairs;
  FusingFactorModel fusing;
  bool relu_fused{false};

  friend bool operator==(const PlatformProfile&, const PlatformProfile&) = default;
};

std::string_view to_string(PlatformProfile::Mode mode) noexcept;

/// ParallelFu: max over layers for parallel pairs, else the sum.
/// FusingFactor: sum minus (ops * w + c), never below the largest layer.
/// PlainSum: the sum. ReLU layers are skipped when profile.relu_fused.
/// Throws MissingEstimator or MissingFusingWeights.
double estimate_block(const BlockInstance& block, const LayerEstimator& estimator,
                      const PlatformProfile& profile);

struct FusingSample {
  BlockInstance block;
  double measured{0.0};
  double estimated_sum{0.0};
};

/// Per block kind, least squares of (estimated_sum - measured) against
/// block_ops. Throws InsufficientData or SingularFit.
FusingFactorModel fit_fusing_factor(const std::vector<FusingSample>& samples);

void to_json(json& j, const PlatformProfile& profile);
void from_json(const json& j, PlatformProfile& profile);

// Block measurement files -----------------------------------------------------

struct BlockMeasurement {
  std::string id;
  BlockInstance block;
  double latency{0.0};
};

/// Columns: block_id, block_kind, latency_s, layers (JSON array of layers).
void write_block_measurements(const std::string& path, const std::vector<BlockMeasurement>& rows);
std::vector<BlockMeasurement> read_block_measurements(const std::string& path);

/// Columns: block_id, sum_estimated_s.
void write_block_estimates(const std::string& path, const std::map<std::string, double>& sums);
std::map<std::string, double> read_block_estimates(const std::string& path);

}  // namespace prbench
