#pragma once

#include <string>
#include <vector>

namespace dsvr::media {

/// Outcome of running an external tool.
struct RunResult {
    int exit_code = -1;
    std::string output;  ///< merged stdout + stderr
};

/// Runs `argv` (argv[0] = program path or name resolved via PATH) and captures
/// its combined stdout/stderr. Throws if the process cannot be spawned.
RunResult run_tool(const std::vector<std::string>& argv);

}  // namespace dsvr::media
