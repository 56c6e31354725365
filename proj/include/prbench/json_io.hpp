// SPDX-License-Identifier: Apache-2.0
//
// JSON encodings of the domain types and small file helpers shared by the
// CLI and the Python bindings.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prbench/domain.hpp"

namespace prbench {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kFormatVersion = "1.0";

void to_json(json& j, const LayerConfig& config);
void from_json(const json& j, LayerConfig& config);

/// {"kind": "Conv2D", "params": {"C": {"min":1,"max":64,"default":32}, ...}}
void to_json(json& j, const ParamBounds& bounds);
void from_json(const json& j, ParamBounds& bounds);

/// Mirrors the textual listing: operation, operation_params, dims, mapping.
void to_json(json& j, const HardwareDescription& desc);
void from_json(const json& j, HardwareDescription& desc);

void to_json(json& j, const BlockInstance& block);
void from_json(const json& j, BlockInstance& block);

/// Parses and validates a LayerConfig; errors surface as InvalidParam/ParseError.
LayerConfig layer_from_json(const json& j);

/// Rejects documents whose "format_version" major differs from ours. A
/// missing field is accepted.
void check_format_version(const json& j, std::string_view what);

std::string read_text_file(const std::filesystem::path& path);
json read_json_file(const std::filesystem::path& path);
json parse_json(std::string_view text, std::string_view what);

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace prbench
