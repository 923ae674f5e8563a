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

// The acceptance suite: one check per criterion A1..A12, each printing a single
// PASS/FAIL line. Shared by the `acceptance` test binary and `opo verify`.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace opo {

struct AcceptanceOptions {
    bool quick = false;  // smaller ensembles, widened tolerances (see README)
    int threads = 0;
    std::filesystem::path scenario_dir;  // empty: the bundled scenarios
    std::filesystem::path work_dir;      // scratch space for A12; empty: a temp directory
    std::vector<std::string> only;       // criterion ids to run; empty: all
};

struct CriterionResult {
    std::string id;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream& out);

}  // namespace opo
