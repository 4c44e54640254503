#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tailmix::cli {

inline constexpr std::uint64_t kDefaultSeed = 20230612;

/// Runs one command line (without the program name). Results go to `out`
/// or the --out file, diagnostics to `err`. Returns 0 on success, 1 on a
/// usage error and 2 on a data or model error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tailmix::cli
