#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pded::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point behind the `pded` binary. `args` excludes the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pded::cli
