// SPDX-License-Identifier: Apache-2.0
//
// The prbench command line. Exit codes: 0 success, 1 domain error, 2 usage
// error.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prbench
