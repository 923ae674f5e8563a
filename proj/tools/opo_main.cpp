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

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "opo/acceptance.hpp"
#include "opo/commands.hpp"
#include "opo/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Cascaded optical parametric oscillator toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", OPO_VERSION);

    opo::CommandOptions opt;
    std::optional<std::uint64_t> seed;
    auto common = [&](CLI::App* sub, bool needs_scenario) {
        if (needs_scenario) sub->add_option("scenario", opt.scenario, "scenario file (.scn)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_option("--threads", opt.threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
        sub->add_option("--out", opt.out_dir, "output directory (default: $OPO_OUT_DIR or ./out)");
        sub->add_flag("--quick", opt.quick, "reduced ensembles");
        sub->add_flag("!--no-plot", opt.plot, "skip the plot script");
    };
    auto* analyze = app.add_subcommand("analyze", "regime, thresholds, steady state and stability");
    auto* sim = app.add_subcommand("simulate", "integrate one trajectory and write it as CSV");
    auto* ens = app.add_subcommand("ensemble", "stochastic ensemble moments");
    auto* sweep = app.add_subcommand("sweep", "steady-state intensities across a drive grid");
    auto* perturb = app.add_subcommand("perturb", "kick a steady state and follow the recovery");
    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    for (auto* s : {analyze, sim, ens, sweep, perturb}) common(s, true);
    common(verify, false);
    std::vector<std::string> only;
    verify->add_option("criteria", only, "criterion ids to run (default: all)");

    CLI11_PARSE(app, argc, argv);
    opt.seed = seed;

    try {
        if (*verify) {
            opo::AcceptanceOptions a;
            a.quick = opt.quick;
            a.threads = opt.threads;
            a.only = only;
            if (!opt.out_dir.empty()) a.work_dir = opt.out_dir;
            const auto results = opo::run_acceptance(a, std::cout);
            std::string failed;
            for (const auto& r : results) {
                if (!r.passed) failed += (failed.empty() ? "" : " ") + r.id;
            }
            if (!failed.empty()) {
                std::cerr << "failing criteria: " << failed << "\n";
                return 1;
            }
            return 0;
        }
        if (*analyze) opo::cmd_analyze(opt, std::cout);
        if (*sim) opo::cmd_simulate(opt, std::cout);
        if (*ens) opo::cmd_ensemble(opt, std::cout);
        if (*sweep) opo::cmd_sweep(opt, std::cout);
        if (*perturb) opo::cmd_perturb(opt, std::cout);
    } catch (const opo::Error& e) {
        std::cerr << "error: " << opo::to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
