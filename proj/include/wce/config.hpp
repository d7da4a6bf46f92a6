#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace wce {

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    std::optional<std::string> speed; // "eps" or "eps2"
};

// Parse and execute a run configuration. Returns the process exit status:
// 0 success, 2 malformed configuration (nothing written), 3 stage failure
// (completed-stage outputs retained, manifest marks the failed stage).
int run_config(const std::string& config_path, const CliOverrides& overrides = {});

} // namespace wce
