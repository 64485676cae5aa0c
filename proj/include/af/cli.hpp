#pragma once

#include <string>
#include <vector>

namespace af::cli {

/// Entry point behind main(); returns the process exit code.
/// 0 ok, 2 validation, 3 io, 4 convergence.
int run(const std::vector<std::string>& args);

}  // namespace af::cli
