// Copyright 2026 The opo-cascade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Subcommands of the `opo` tool. Each one reads a scenario, writes its CSV
// outputs plus a JSON-lines manifest into the output directory, and prints a
// short human-readable summary.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace opo {

struct CommandOptions {
    std::filesystem::path scenario;
    std::optional<std::uint64_t> seed;
    int threads = 0;              // 0: machine parallelism
    std::filesystem::path out_dir;  // empty: $OPO_OUT_DIR, then ./out
    bool quick = false;           // ensembles run a tenth of the trajectories
    bool plot = true;             // also write a matplotlib script next to the CSV
};

struct CommandResult {
    std::vector<std::filesystem::path> outputs;
    std::filesystem::path manifest;
};

std::filesystem::path resolve_out_dir(const CommandOptions& opt);

CommandResult cmd_analyze(const CommandOptions& opt, std::ostream& out);
CommandResult cmd_simulate(const CommandOptions& opt, std::ostream& out);
CommandResult cmd_ensemble(const CommandOptions& opt, std::ostream& out);
CommandResult cmd_sweep(const CommandOptions& opt, std::ostream& out);
CommandResult cmd_perturb(const CommandOptions& opt, std::ostream& out);

}  // namespace opo
