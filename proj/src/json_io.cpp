// SPDX-License-Identifier: Apache-2.0

#include "prbench/json_io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

namespace prbench {

void to_json(json& j, const LayerConfig& config) {
  json params = json::object();
  for (const auto& name : canonical_params(config.kind)) {
    if (auto v = config.find(name)) params[name] = *v;
  }
  for (const auto& [name, value] : config.params) {
    if (!params.contains(name)) params[name] = value;
  }
  j = json{{"kind", std::string(to_string(config.kind))}, {"params", std::move(params)}};
}

void from_json(const json& j, LayerConfig& config) {
  try {
    config.kind = parse_op_kind(j.at("kind").get<std::string>());
    config.params.clear();
    for (const auto& [name, value] : j.at("params").items()) {
      config.params[name] = value.get<std::int64_t>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("LayerConfig: ") + e.what());
  }
}

LayerConfig layer_from_json(const json& j) {
  LayerConfig config = j.get<LayerConfig>();
  validate(config);
  return config;
}

void to_json(json& j, const ParamBounds& bounds) {
  json params = json::object();
  for (const auto& name : canonical_params(bounds.kind)) {
    auto it = bounds.ranges.find(name);
    if (it == bounds.ranges.end()) continue;
    params[name] = json{{"min", it->second.min}, {"max", it->second.max}, {"default", it->second.def}};
  }
  j = json{{"format_version", kFormatVersion},
           {"kind", std::string(to_string(bounds.kind))},
           {"params", std::move(params)}};
}

void from_json(const json& j, ParamBounds& bounds) {
  check_format_version(j, "bounds");
  try {
    bounds.kind = parse_op_kind(j.at("kind").get<std::string>());
    bounds.ranges.clear();
    for (const auto& [name, value] : j.at("params").items()) {
      ParamRange r;
      if (value.is_number_integer()) {
        r.min = r.max = r.def = value.get<std::int64_t>();
      } else {
        r.min = value.at("min").get<std::int64_t>();
        r.max = value.at("max").get<std::int64_t>();
        r.def = value.contains("default") ? value.at("default").get<std::int64_t>()
                                          : r.min + (r.max - r.min) / 2;
      }
      bounds.ranges[name] = r;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bounds: ") + e.what());
  }
}

void to_json(json& j, const HardwareDescription& desc) {
  j = json{{"operation", std::string(to_string(desc.operation))},
           {"operation_params", desc.operation_params},
           {"dims", desc.dims},
           {"mapping", desc.mapping}};
}

void from_json(const json& j, HardwareDescription& desc) {
  try {
    desc.operation = parse_op_kind(j.at("operation").get<std::string>());
    desc.operation_params = j.at("operation_params").get<std::vector<std::string>>();
    desc.dims = j.at("dims").get<std::vector<std::int64_t>>();
    desc.mapping = j.at("mapping").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("hardware description: ") + e.what());
  }
}

void to_json(json& j, const BlockInstance& block) {
  j = json{{"block", std::string(to_string(block.kind))}, {"layers", block.layers}};
}

void from_json(const json& j, BlockInstance& block) {
  try {
    block.kind = parse_block_kind(j.at("block").get<std::string>());
    block.layers.clear();
    for (const auto& layer : j.at("layers")) block.layers.push_back(layer_from_json(layer));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("block: ") + e.what());
  }
}

void check_format_version(const json& j, std::string_view what) {
  if (!j.is_object() || !j.contains("format_version")) return;
  const auto& field = j.at("format_version");
  std::string version = field.is_string() ? field.get<std::string>() : field.dump();
  const std::string major = version.substr(0, version.find('.'));
  const std::string ours(kFormatVersion.substr(0, kFormatVersion.find('.')));
  if (major != ours) {
    throw Error(ErrorCode::VersionMismatch, std::string(what) + " has format_version " + version +
                                                ", expected major " + ours);
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
  return ss.str();
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  return parse_json(read_text_file(path), path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "rename to " + path.string() + ": " + ec.message());
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace prbench
