// SPDX-License-Identifier: Apache-2.0

#include "prbench/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "prbench/csv.hpp"

namespace prbench {

std::vector<OpKind> block_pattern(BlockKind kind) {
  switch (kind) {
    case BlockKind::DwSep:
      return {OpKind::DepthwiseConv2D, OpKind::ReLU, OpKind::PointwiseConv2D, OpKind::ReLU};
    case BlockKind::ResNetPlain:
      return {OpKind::Conv2D, OpKind::ReLU, OpKind::Conv2D, OpKind::Add, OpKind::ReLU};
    case BlockKind::ResNetDown:
      return {OpKind::Conv2D, OpKind::ReLU, OpKind::Conv2D, OpKind::Conv2D, OpKind::Add, OpKind::ReLU};
    case BlockKind::PoolFc:
      return {OpKind::AvgPool2D, OpKind::FullyConnected};
  }
  return {};
}

bool matches_slot(OpKind slot, OpKind actual) noexcept {
  if (slot == OpKind::AvgPool2D) return is_pool(actual);
  return slot == actual;
}

namespace {

void expect_feeds(const BlockInstance& block, std::size_t consumer, const Shape& produced,
                  std::string_view from) {
  if (!accepts_input(block.layers[consumer], produced)) {
    std::ostringstream os;
    os << to_string(block.kind) << " layer " << consumer << " (" << to_string(block.layers[consumer])
       << ") cannot consume " << to_string(produced) << " from " << from;
    throw Error(ErrorCode::ShapeMismatch, os.str());
  }
}

void expect_same(const BlockInstance& block, const Shape& a, const Shape& b, std::string_view what) {
  if (a != b) {
    throw Error(ErrorCode::ShapeMismatch, std::string(to_string(block.kind)) + ": " + std::string(what) + " " +
                                              to_string(a) + " vs " + to_string(b));
  }
}

}  // namespace

void validate(const BlockInstance& block) {
  const auto pattern = block_pattern(block.kind);
  if (block.layers.size() != pattern.size()) {
    throw Error(ErrorCode::InvalidBlock, std::string(to_string(block.kind)) + " needs " +
                                             std::to_string(pattern.size()) + " layers, got " +
                                             std::to_string(block.layers.size()));
  }
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (!matches_slot(pattern[i], block.layers[i].kind)) {
      throw Error(ErrorCode::InvalidBlock, std::string(to_string(block.kind)) + " layer " + std::to_string(i) +
                                               " must be " + std::string(to_string(pattern[i])) + ", got " +
                                               std::string(to_string(block.layers[i].kind)));
    }
    try {
      validate(block.layers[i]);
      (void)output_shape(block.layers[i]);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidBlock, std::string(to_string(block.kind)) + " layer " + std::to_string(i) +
                                               ": " + e.what());
    }
  }

  const auto& L = block.layers;
  const auto out = [&](std::size_t i) { return output_shape(L[i]); };
  switch (block.kind) {
    case BlockKind::DwSep:
      for (std::size_t i = 1; i < L.size(); ++i) expect_feeds(block, i, out(i - 1), "its predecessor");
      break;
    case BlockKind::PoolFc:
      expect_feeds(block, 1, out(0), "the pooling layer");
      break;
    case BlockKind::ResNetPlain:
      expect_feeds(block, 1, out(0), "conv0");
      expect_feeds(block, 2, out(1), "relu");
      expect_same(block, out(2), input_shape(L[0]), "residual branch must keep the input shape:");
      expect_feeds(block, 3, out(2), "conv1");
      expect_feeds(block, 4, out(3), "add");
      break;
    case BlockKind::ResNetDown:
      expect_feeds(block, 1, out(0), "conv0");
      expect_feeds(block, 2, out(1), "relu");
      expect_same(block, input_shape(L[3]), input_shape(L[0]), "shortcut must read the block input:");
      expect_same(block, out(3), out(2), "shortcut and residual outputs differ:");
      expect_feeds(block, 4, out(2), "conv1");
      expect_feeds(block, 5, out(4), "add");
      break;
  }
}

std::int64_t block_ops(const BlockInstance& block) {
  validate(block);
  std::int64_t ops = 0;
  for (const auto& layer : block.layers) {
    if (layer.kind != OpKind::ReLU) ops += mac_count(layer);
  }
  return ops;
}

std::string_view to_string(PlatformProfile::Mode mode) noexcept {
  switch (mode) {
    case PlatformProfile::Mode::ParallelFu: return "parallel_fu";
    case PlatformProfile::Mode::FusingFactor: return "fusing_factor";
    case PlatformProfile::Mode::PlainSum: return "plain_sum";
  }
  return "?";
}

double estimate_block(const BlockInstance& block, const LayerEstimator& estimator,
                      const PlatformProfile& profile) {
  validate(block);
  double sum = 0.0;
  double peak = 0.0;
  for (const auto& layer : block.layers) {
    if (profile.relu_fused && layer.kind == OpKind::ReLU) continue;
    const double t = estimator(layer);
    sum += t;
    peak = std::max(peak, t);
  }
  switch (profile.mode) {
    case PlatformProfile::Mode::ParallelFu:
      return profile.parallel_pairs.contains(block.kind) ? peak : sum;
    case PlatformProfile::Mode::FusingFactor: {
      const auto it = profile.fusing.find(block.kind);
      if (it == profile.fusing.end()) {
        throw Error(ErrorCode::MissingFusingWeights, "no fusing weights for " + std::string(to_string(block.kind)));
      }
      const double factor = static_cast<double>(block_ops(block)) * it->second.w + it->second.c;
      return std::max(sum - factor, peak);
    }
    case PlatformProfile::Mode::PlainSum:
      return sum;
  }
  return sum;
}

FusingFactorModel fit_fusing_factor(const std::vector<FusingSample>& samples) {
  std::map<BlockKind, std::vector<std::pair<double, double>>> points;
  for (const auto& s : samples) {
    points[s.block.kind].emplace_back(static_cast<double>(block_ops(s.block)), s.estimated_sum - s.measured);
  }
  if (points.empty()) throw Error(ErrorCode::InsufficientData, "no block measurements");

  FusingFactorModel model;
  for (const auto& [kind, pts] : points) {
    if (pts.size() < 2) {
      throw Error(ErrorCode::InsufficientData, std::string(to_string(kind)) + " has " +
                                                   std::to_string(pts.size()) + " measurement(s), need 2");
    }
    const double n = static_cast<double>(pts.size());
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [x, y] : pts) {
      mx += x;
      my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& [x, y] : pts) {
      sxx += (x - mx) * (x - mx);
      sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0.0)) {
      throw Error(ErrorCode::SingularFit, std::string(to_string(kind)) + ": every block has the same #ops");
    }
    const double w = sxy / sxx;
    model[kind] = {w, my - w * mx};
  }
  return model;
}

void to_json(json& j, const PlatformProfile& profile) {
  j = json{{"format_version", kFormatVersion}, {"mode", std::string(to_string(profile.mode))}};
  json pairs = json::array();
  for (auto kind : profile.parallel_pairs) pairs.push_back(std::string(to_string(kind)));
  j["parallel_pairs"] = pairs;
  j["relu_fused"] = profile.relu_fused;
  json fusing = json::object();
  for (const auto& [kind, fw] : profile.fusing) fusing[std::string(to_string(kind))] = {{"w", fw.w}, {"c", fw.c}};
  j["fusing"] = fusing;
}

void from_json(const json& j, PlatformProfile& profile) {
  check_format_version(j, "profile");
  try {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "parallel_fu") {
      profile.mode = PlatformProfile::Mode::ParallelFu;
    } else if (mode == "fusing_factor") {
      profile.mode = PlatformProfile::Mode::FusingFactor;
    } else if (mode == "plain_sum") {
      profile.mode = PlatformProfile::Mode::PlainSum;
    } else {
      throw Error(ErrorCode::ParseError, "unknown profile mode '" + mode + "'");
    }
    profile.parallel_pairs.clear();
    for (const auto& k : j.value("parallel_pairs", json::array())) {
      profile.parallel_pairs.insert(parse_block_kind(k.get<std::string>()));
    }
    profile.relu_fused = j.value("relu_fused", false);
    profile.fusing.clear();
    const json fusing = j.value("fusing", json::object());
    for (const auto& [name, fw] : fusing.items()) {
      profile.fusing[parse_block_kind(name)] = {fw.at("w").get<double>(), fw.at("c").get<double>()};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("profile: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kBlockHeader{"block_id", "block_kind", "latency_s", "layers"};
const std::vector<std::string> kEstimateHeader{"block_id", "sum_estimated_s"};

std::vector<std::vector<std::string>> read_table(const std::string& path, const std::vector<std::string>& header) {
  auto rows = csv::parse(read_text_file(path));
  if (rows.empty() || rows.front() != header) {
    throw Error(ErrorCode::ParseError, path + ": expected header " + csv::join(header));
  }
  rows.erase(rows.begin());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != header.size()) {
      throw Error(ErrorCode::ParseError, path + ": row " + std::to_string(i + 2) + " has " +
                                             std::to_string(rows[i].size()) + " fields");
    }
  }
  return rows;
}

double parse_seconds(const std::string& text, const std::string& path) {
  double v = 0.0;
  if (!csv::parse_double(text, v)) throw Error(ErrorCode::ParseError, path + ": bad number '" + text + "'");
  return v;
}

}  // namespace

void write_block_measurements(const std::string& path, const std::vector<BlockMeasurement>& rows) {
  std::string out = csv::join(kBlockHeader) + "\n";
  for (const auto& r : rows) {
    json layers = json::array();
    for (const auto& l : r.block.layers) layers.push_back(l);
    out += csv::join({r.id, std::string(to_string(r.block.kind)), csv::format_double(r.latency), layers.dump()});
    out += "\n";
  }
  write_file_atomic(path, out);
}

std::vector<BlockMeasurement> read_block_measurements(const std::string& path) {
  std::vector<BlockMeasurement> out;
  for (const auto& row : read_table(path, kBlockHeader)) {
    BlockMeasurement m;
    m.id = row[0];
    m.block.kind = parse_block_kind(row[1]);
    m.latency = parse_seconds(row[2], path);
    for (const auto& l : parse_json(row[3], "block layers")) m.block.layers.push_back(layer_from_json(l));
    validate(m.block);
    out.push_back(std::move(m));
  }
  return out;
}

void write_block_estimates(const std::string& path, const std::map<std::string, double>& sums) {
  std::string out = csv::join(kEstimateHeader) + "\n";
  for (const auto& [id, v] : sums) out += csv::join({id, csv::format_double(v)}) + "\n";
  write_file_atomic(path, out);
}

std::map<std::string, double> read_block_estimates(const std::string& path) {
  std::map<std::string, double> out;
  for (const auto& row : read_table(path, kEstimateHeader)) out[row[0]] = parse_seconds(row[1], path);
  return out;
}

}  // namespace prbench
