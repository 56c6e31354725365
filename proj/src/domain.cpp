// SPDX-License-Identifier: Apache-2.0

#include "prbench/domain.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

namespace prbench {
namespace {

const std::vector<std::string> kConv1DParams{"C", "C_w", "K", "F", "s", "pad"};
const std::vector<std::string> kConv2DParams{"C",   "C_h", "C_w", "K",
                                             "F_h", "F_w", "s",   "pad"};
const std::vector<std::string> kFcParams{"batch", "in", "out"};
const std::vector<std::string> kPoolParams{"C", "C_h", "C_w", "F"};
const std::vector<std::string> kElementwiseParams{"C", "C_h", "C_w"};
const std::vector<std::string> kAllParams{"C", "C_h", "C_w", "K",     "F",  "F_h",
                                          "F_w", "s", "pad", "batch", "in", "out"};

std::string lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    if (ch == '_' || ch == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

// floor((in + 2 pad - kernel) / stride) + 1, or <= 0 when the kernel does not fit.
std::int64_t conv_extent(std::int64_t in, std::int64_t kernel, std::int64_t stride,
                         std::int64_t pad) {
  const std::int64_t span = in + 2 * pad - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

}  // namespace

std::string_view to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Conv1D: return "Conv1D";
    case OpKind::Conv2D: return "Conv2D";
    case OpKind::PointwiseConv2D: return "PointwiseConv2D";
    case OpKind::DepthwiseConv2D: return "DepthwiseConv2D";
    case OpKind::FullyConnected: return "FullyConnected";
    case OpKind::AvgPool2D: return "AvgPool2D";
    case OpKind::MaxPool2D: return "MaxPool2D";
    case OpKind::ReLU: return "ReLU";
    case OpKind::Add: return "Add";
  }
  return "?";
}

OpKind parse_op_kind(std::string_view text) {
  const std::string key = lower(text);
  for (OpKind kind : kAllOpKinds) {
    if (lower(to_string(kind)) == key) return kind;
  }
  if (key == "pwconv2d" || key == "pointwise") return OpKind::PointwiseConv2D;
  if (key == "dwconv2d" || key == "depthwise") return OpKind::DepthwiseConv2D;
  if (key == "fc" || key == "dense" || key == "gemm") return OpKind::FullyConnected;
  if (key == "avgpool" || key == "averagepool2d") return OpKind::AvgPool2D;
  if (key == "maxpool") return OpKind::MaxPool2D;
  throw Error(ErrorCode::InvalidArgument, "unknown operator kind '" + std::string(text) + "'");
}

std::span<const std::string> canonical_params(OpKind kind) {
  switch (kind) {
    case OpKind::Conv1D: return kConv1DParams;
    case OpKind::Conv2D:
    case OpKind::PointwiseConv2D:
    case OpKind::DepthwiseConv2D: return kConv2DParams;
    case OpKind::FullyConnected: return kFcParams;
    case OpKind::AvgPool2D:
    case OpKind::MaxPool2D: return kPoolParams;
    case OpKind::ReLU:
    case OpKind::Add: return kElementwiseParams;
  }
  return {};
}

bool is_canonical_param(OpKind kind, std::string_view name) {
  const auto params = canonical_params(kind);
  return std::find(params.begin(), params.end(), name) != params.end();
}

bool is_pool(OpKind kind) noexcept {
  return kind == OpKind::AvgPool2D || kind == OpKind::MaxPool2D;
}

std::span<const std::string> all_param_names() { return kAllParams; }

std::int64_t LayerConfig::at(std::string_view name) const {
  auto it = params.find(name);
  if (it == params.end()) {
    throw Error(ErrorCode::InvalidParam,
                std::string(name) + " missing from " + std::string(to_string(kind)));
  }
  return it->second;
}

std::optional<std::int64_t> LayerConfig::find(std::string_view name) const {
  auto it = params.find(name);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << shape.c << "x" << shape.h << "x" << shape.w;
  return os.str();
}

std::vector<ParamViolation> violations(const LayerConfig& config) {
  std::vector<ParamViolation> out;
  const auto canon = canonical_params(config.kind);
  for (const auto& name : canon) {
    auto value = config.find(name);
    if (!value) {
      out.push_back({name, std::nullopt, "missing"});
      continue;
    }
    const std::int64_t lo = (name == "pad") ? 0 : 1;
    if (*value < lo) out.push_back({name, *value, name == "pad" ? "must be >= 0" : "must be >= 1"});
  }
  for (const auto& [name, value] : config.params) {
    if (!is_canonical_param(config.kind, name)) {
      out.push_back({name, value, "not a parameter of " + std::string(to_string(config.kind))});
    }
  }
  if (config.kind == OpKind::PointwiseConv2D) {
    for (const char* name : {"F_h", "F_w"}) {
      auto value = config.find(name);
      if (value && *value != 1) out.push_back({name, *value, "pointwise kernels are 1x1"});
    }
  }
  if (config.kind == OpKind::DepthwiseConv2D) {
    auto value = config.find("K");
    if (value && *value != 1) out.push_back({"K", *value, "depthwise multiplier must be 1"});
  }
  return out;
}

void validate(const LayerConfig& config) {
  const auto found = violations(config);
  if (found.empty()) return;
  std::ostringstream os;
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (i) os << "; ";
    os << found[i].name << "=";
    if (found[i].value) {
      os << *found[i].value;
    } else {
      os << "<none>";
    }
    os << " (" << found[i].reason << ")";
  }
  throw Error(ErrorCode::InvalidParam, os.str());
}

Shape input_shape(const LayerConfig& config) {
  switch (config.kind) {
    case OpKind::Conv1D: return {config.at("C"), 1, config.at("C_w")};
    case OpKind::FullyConnected: return {config.at("in"), 1, 1};
    default: return {config.at("C"), config.at("C_h"), config.at("C_w")};
  }
}

Shape output_shape(const LayerConfig& config) {
  Shape out;
  switch (config.kind) {
    case OpKind::Conv1D:
      out = {config.at("K"), 1,
             conv_extent(config.at("C_w"), config.at("F"), config.at("s"), config.at("pad"))};
      break;
    case OpKind::Conv2D:
    case OpKind::PointwiseConv2D:
    case OpKind::DepthwiseConv2D: {
      const std::int64_t s = config.at("s");
      const std::int64_t pad = config.at("pad");
      const std::int64_t channels =
          config.kind == OpKind::DepthwiseConv2D ? config.at("C") * config.at("K") : config.at("K");
      out = {channels, conv_extent(config.at("C_h"), config.at("F_h"), s, pad),
             conv_extent(config.at("C_w"), config.at("F_w"), s, pad)};
      break;
    }
    case OpKind::FullyConnected:
      out = {config.at("out"), 1, 1};
      break;
    case OpKind::AvgPool2D:
    case OpKind::MaxPool2D: {
      // Non-overlapping windows: stride equals the pooling size.
      const std::int64_t f = config.at("F");
      out = {config.at("C"), config.at("C_h") / f, config.at("C_w") / f};
      break;
    }
    case OpKind::ReLU:
    case OpKind::Add:
      out = {config.at("C"), config.at("C_h"), config.at("C_w")};
      break;
  }
  if (out.h < 1 || out.w < 1) {
    throw Error(ErrorCode::NonPositiveOutput, to_string(config) + " has output " + to_string(out));
  }
  return out;
}

bool accepts_input(const LayerConfig& consumer, const Shape& produced) {
  if (consumer.kind == OpKind::FullyConnected) return produced.elements() == consumer.at("in");
  return input_shape(consumer) == produced;
}

std::int64_t mac_count(const LayerConfig& config) {
  const Shape out = output_shape(config);
  switch (config.kind) {
    case OpKind::Conv1D:
      return config.at("K") * config.at("C") * config.at("F") * out.w;
    case OpKind::Conv2D:
    case OpKind::PointwiseConv2D:
      return config.at("K") * config.at("C") * config.at("F_h") * config.at("F_w") * out.h * out.w;
    case OpKind::DepthwiseConv2D:
      return config.at("C") * config.at("F_h") * config.at("F_w") * out.h * out.w;
    case OpKind::FullyConnected:
      return config.at("batch") * config.at("in") * config.at("out");
    default:
      return out.elements();
  }
}

std::string to_string(const LayerConfig& config) {
  std::ostringstream os;
  os << to_string(config.kind) << "{";
  bool first = true;
  for (const auto& name : canonical_params(config.kind)) {
    auto value = config.find(name);
    if (!value) continue;
    if (!first) os << ",";
    first = false;
    os << name << ":" << *value;
  }
  for (const auto& [name, value] : config.params) {
    if (is_canonical_param(config.kind, name)) continue;
    os << (first ? "" : ",") << name << ":" << value;
    first = false;
  }
  os << "}";
  return os.str();
}

// ---------------------------------------------------------------------------

const ParamRange& ParamBounds::at(std::string_view name) const {
  auto it = ranges.find(name);
  if (it == ranges.end()) {
    throw Error(ErrorCode::InvalidBounds, "no bounds for " + std::string(name));
  }
  return it->second;
}

LayerConfig ParamBounds::defaults() const {
  LayerConfig config{kind, {}};
  for (const auto& [name, range] : ranges) config.params[name] = range.def;
  return config;
}

bool ParamBounds::contains(const LayerConfig& config) const {
  if (config.kind != kind) return false;
  for (const auto& [name, range] : ranges) {
    auto value = config.find(name);
    if (!value || *value < range.min || *value > range.max) return false;
  }
  return true;
}

void check_bounds(const ParamBounds& bounds) {
  for (const auto& name : canonical_params(bounds.kind)) {
    if (!bounds.ranges.contains(name)) {
      throw Error(ErrorCode::InvalidBounds, "missing range for " + name);
    }
  }
  for (const auto& [name, r] : bounds.ranges) {
    if (!is_canonical_param(bounds.kind, name)) {
      throw Error(ErrorCode::InvalidBounds,
                  name + " is not a parameter of " + std::string(to_string(bounds.kind)));
    }
    const std::int64_t lo = name == "pad" ? 0 : 1;
    if (r.min < lo || r.min > r.def || r.def > r.max) {
      std::ostringstream os;
      os << name << " range [" << r.min << "," << r.max << "] default " << r.def
         << " violates min <= default <= max, min >= " << lo;
      throw Error(ErrorCode::InvalidBounds, os.str());
    }
  }
  auto fixed_at = [&](const char* name, std::int64_t value) {
    const auto& r = bounds.at(name);
    if (r.min != value || r.max != value) {
      throw Error(ErrorCode::InvalidBounds, std::string(name) + " must be fixed to " +
                                                std::to_string(value) + " for " +
                                                std::string(to_string(bounds.kind)));
    }
  };
  if (bounds.kind == OpKind::PointwiseConv2D) {
    fixed_at("F_h", 1);
    fixed_at("F_w", 1);
  }
  if (bounds.kind == OpKind::DepthwiseConv2D) fixed_at("K", 1);

  // Worst corner of the box: smallest input, largest kernel, no padding.
  LayerConfig corner{bounds.kind, {}};
  for (const auto& [name, r] : bounds.ranges) corner.params[name] = r.min;
  for (const char* kernel : {"F", "F_h", "F_w"}) {
    if (bounds.ranges.contains(kernel)) corner.params[kernel] = bounds.at(kernel).max;
  }
  try {
    output_shape(corner);
  } catch (const Error&) {
    throw Error(ErrorCode::InvalidBounds,
                "bounds admit configs with non-positive output, e.g. " + to_string(corner));
  }
}

ParamBounds default_bounds(OpKind kind) {
  ParamBounds b{kind, {}};
  auto& r = b.ranges;
  switch (kind) {
    case OpKind::Conv1D:
      r = {{"C", {1, 64, 16}}, {"C_w", {16, 128, 64}}, {"K", {1, 64, 16}},
           {"F", {1, 9, 3}},   {"s", {1, 2, 1}},       {"pad", {0, 4, 1}}};
      break;
    case OpKind::Conv2D:
      r = {{"C", {1, 256, 64}},  {"C_h", {7, 224, 56}}, {"C_w", {7, 224, 56}},
           {"K", {1, 256, 64}},  {"F_h", {1, 7, 3}},    {"F_w", {1, 7, 3}},
           {"s", {1, 2, 1}},     {"pad", {0, 3, 1}}};
      break;
    case OpKind::PointwiseConv2D:
      r = {{"C", {1, 512, 128}}, {"C_h", {1, 112, 28}}, {"C_w", {1, 112, 28}},
           {"K", {1, 512, 128}}, {"F_h", {1, 1, 1}},    {"F_w", {1, 1, 1}},
           {"s", {1, 2, 1}},     {"pad", {0, 0, 0}}};
      break;
    case OpKind::DepthwiseConv2D:
      r = {{"C", {1, 512, 128}}, {"C_h", {7, 112, 28}}, {"C_w", {7, 112, 28}},
           {"K", {1, 1, 1}},     {"F_h", {3, 7, 3}},    {"F_w", {3, 7, 3}},
           {"s", {1, 2, 1}},     {"pad", {0, 3, 1}}};
      break;
    case OpKind::FullyConnected:
      r = {{"batch", {1, 8, 1}}, {"in", {1, 4096, 1024}}, {"out", {1, 4096, 512}}};
      break;
    case OpKind::AvgPool2D:
    case OpKind::MaxPool2D:
      r = {{"C", {1, 512, 64}}, {"C_h", {7, 112, 56}}, {"C_w", {7, 112, 56}}, {"F", {1, 7, 2}}};
      break;
    case OpKind::ReLU:
    case OpKind::Add:
      r = {{"C", {1, 512, 64}}, {"C_h", {1, 112, 56}}, {"C_w", {1, 112, 56}}};
      break;
  }
  return b;
}

// ---------------------------------------------------------------------------

void validate(const HardwareDescription& desc) {
  if (desc.mapping.size() != desc.dims.size()) {
    throw Error(ErrorCode::MappingMismatch,
                "mapping has " + std::to_string(desc.mapping.size()) + " entries but dims has " +
                    std::to_string(desc.dims.size()));
  }
  for (const auto& name : desc.operation_params) {
    if (!is_canonical_param(desc.operation, name)) {
      throw Error(ErrorCode::MappingMismatch,
                  name + " is not a parameter of " + std::string(to_string(desc.operation)));
    }
  }
  for (std::size_t i = 0; i < desc.mapping.size(); ++i) {
    const auto& name = desc.mapping[i];
    if (std::find(desc.operation_params.begin(), desc.operation_params.end(), name) ==
        desc.operation_params.end()) {
      throw Error(ErrorCode::MappingMismatch, "mapped parameter " + name + " not in operation_params");
    }
    if (desc.dims[i] < 1) {
      throw Error(ErrorCode::MappingMismatch, "dims must be positive");
    }
  }
}

std::int64_t width_of(const StepWidthMap& widths, std::string_view name) {
  auto it = widths.find(name);
  return it == widths.end() ? 1 : it->second;
}

// ---------------------------------------------------------------------------

std::string_view to_string(BlockKind kind) noexcept {
  switch (kind) {
    case BlockKind::DwSep: return "DwSep";
    case BlockKind::ResNetPlain: return "ResNetPlain";
    case BlockKind::ResNetDown: return "ResNetDown";
    case BlockKind::PoolFc: return "PoolFc";
  }
  return "?";
}

BlockKind parse_block_kind(std::string_view text) {
  const std::string key = lower(text);
  for (BlockKind kind : kAllBlockKinds) {
    if (lower(to_string(kind)) == key) return kind;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown block kind '" + std::string(text) + "'");
}

double aggregate(std::span<const double> values, Aggregate how) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "aggregate of empty sample");
  std::vector<double> v(values.begin(), values.end());
  switch (how) {
    case Aggregate::Min:
      return *std::min_element(v.begin(), v.end());
    case Aggregate::Mean: {
      double sum = 0.0;
      for (double x : v) sum += x;
      return sum / static_cast<double>(v.size());
    }
    case Aggregate::Median:
      break;
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace prbench
