// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace prbench::csv {

/// Quotes a field when it contains a comma, quote or newline (RFC 4180).
std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

/// Splits a document into records; quoted fields may span lines.
std::vector<std::vector<std::string>> parse(std::string_view text);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);
/// Strict parse of a whole field; returns false on trailing garbage.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

}  // namespace prbench::csv
