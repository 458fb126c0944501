#pragma once

#include <string>
#include <vector>

namespace rmfem::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Names accepted by `run`.
const std::vector<std::string>& experiment_names();

/// Entry point of the `rmfem` executable; returns the process exit status.
int main(int argc, const char* const* argv);

}  // namespace rmfem::cli
