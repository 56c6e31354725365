// SPDX-License-Identifier: Apache-2.0
//
// Core vocabulary: operator kinds, layer configurations, parameter bounds,
// hardware descriptions and measurement records.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "prbench/error.hpp"

namespace prbench {

enum class OpKind {
  Conv1D,
  Conv2D,
  PointwiseConv2D,
  DepthwiseConv2D,
  FullyConnected,
  AvgPool2D,
  MaxPool2D,
  ReLU,
  Add,
};

inline constexpr OpKind kAllOpKinds[] = {
    OpKind::Conv1D,         OpKind::Conv2D,    OpKind::PointwiseConv2D,
    OpKind::DepthwiseConv2D, OpKind::FullyConnected, OpKind::AvgPool2D,
    OpKind::MaxPool2D,      OpKind::ReLU,      OpKind::Add,
};

std::string_view to_string(OpKind kind) noexcept;
/// Accepts the canonical spelling ("Conv2D") and lower-case CLI spellings
/// ("conv2d", "pointwise_conv2d", "fc").
OpKind parse_op_kind(std::string_view text);

/// Canonical parameter names of a kind, in feature/CSV order.
std::span<const std::string> canonical_params(OpKind kind);
bool is_canonical_param(OpKind kind, std::string_view name);
bool is_pool(OpKind kind) noexcept;

/// Union of all canonical parameter names, in store column order.
std::span<const std::string> all_param_names();

using ParamMap = std::map<std::string, std::int64_t, std::less<>>;

struct LayerConfig {
  OpKind kind{OpKind::Conv2D};
  ParamMap params;

  std::int64_t at(std::string_view name) const;
  std::optional<std::int64_t> find(std::string_view name) const;

  friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
  friend auto operator<=>(const LayerConfig&, const LayerConfig&) = default;
};

/// Feature-map shape (channels, height, width). FullyConnected tensors are
/// flat and use {features, 1, 1}.
struct Shape {
  std::int64_t c{1};
  std::int64_t h{1};
  std::int64_t w{1};

  std::int64_t elements() const noexcept { return c * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

struct ParamViolation {
  std::string name;
  std::optional<std::int64_t> value;
  std::string reason;
};

/// All invariant violations of a config; empty iff the config is valid.
std::vector<ParamViolation> violations(const LayerConfig& config);
/// Throws InvalidParam listing every violation.
void validate(const LayerConfig& config);

/// Spatial output extent; throws NonPositiveOutput when it would be < 1.
Shape output_shape(const LayerConfig& config);
Shape input_shape(const LayerConfig& config);
/// True iff a tensor of `produced` shape can feed `consumer`. FullyConnected
/// consumers flatten, so only the element count has to agree.
bool accepts_input(const LayerConfig& consumer, const Shape& produced);

/// Multiply-accumulate count; element count of the output for pooling and
/// element-wise kinds.
std::int64_t mac_count(const LayerConfig& config);

std::string to_string(const LayerConfig& config);

// ---------------------------------------------------------------------------

struct ParamRange {
  std::int64_t min{1};
  std::int64_t max{1};
  std::int64_t def{1};

  std::int64_t size() const noexcept { return max - min + 1; }
  friend bool operator==(const ParamRange&, const ParamRange&) = default;
};

struct ParamBounds {
  OpKind kind{OpKind::Conv2D};
  std::map<std::string, ParamRange, std::less<>> ranges;

  const ParamRange& at(std::string_view name) const;
  /// The config with every parameter at its default.
  LayerConfig defaults() const;
  bool contains(const LayerConfig& config) const;

  friend bool operator==(const ParamBounds&, const ParamBounds&) = default;
};

/// Checks min <= default <= max, the canonical name set, kind-intrinsic
/// fixed values and that every config in the box has a positive output size.
void check_bounds(const ParamBounds& bounds);

/// Mid-range defaults that resemble common DNN shapes.
ParamBounds default_bounds(OpKind kind);

// ---------------------------------------------------------------------------

struct HardwareDescription {
  OpKind operation{OpKind::Conv1D};
  std::vector<std::string> operation_params;
  std::vector<std::int64_t> dims;
  std::vector<std::string> mapping;
};

void validate(const HardwareDescription& desc);

/// Per-parameter step width; a missing entry or 1 means linear influence.
using StepWidthMap = std::map<std::string, std::int64_t, std::less<>>;

std::int64_t width_of(const StepWidthMap& widths, std::string_view name);

// ---------------------------------------------------------------------------

enum class BlockKind { DwSep, ResNetPlain, ResNetDown, PoolFc };

inline constexpr BlockKind kAllBlockKinds[] = {
    BlockKind::ResNetDown, BlockKind::ResNetPlain, BlockKind::DwSep,
    BlockKind::PoolFc};

std::string_view to_string(BlockKind kind) noexcept;
BlockKind parse_block_kind(std::string_view text);

/// A building block; layers are in pattern order (see fusion.hpp).
struct BlockInstance {
  BlockKind kind{BlockKind::DwSep};
  std::vector<LayerConfig> layers;

  friend bool operator==(const BlockInstance&, const BlockInstance&) = default;
};

using Subject = std::variant<LayerConfig, BlockInstance>;

enum class Aggregate { Median, Mean, Min };

double aggregate(std::span<const double> values, Aggregate how = Aggregate::Median);

struct MeasurementRecord {
  Subject subject;
  int repeats{1};
  std::vector<double> raw_times;
  double latency{0.0};
  std::string backend_id;
  std::int64_t timestamp{0};  // seconds since epoch; not persisted in the store
};

}  // namespace prbench
