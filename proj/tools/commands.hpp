// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nk::cli {

// Exit-code contract: 0 success, 1 usage/config error, 2 runtime/numerical
// failure, 3 property-suite failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitPropertyFailure = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<uint64_t> seed;
    std::vector<std::string> overrides;  // section.key=value
};

int cmd_train(const CommonArgs& args);
int cmd_eval(const CommonArgs& args, const std::string& checkpoint, const std::string& split);
int cmd_lab(const CommonArgs& args, const std::string& experiment,
            const std::vector<std::string>& checkpoints);
int cmd_verify();

}  // namespace nk::cli
