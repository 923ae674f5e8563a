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

// CSV tables and run manifests.
//
// Numbers are written with 17 significant digits through std::to_chars, so the
// output never depends on the process locale and parses back to the same double.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "opo/experiments.hpp"

namespace opo {

std::string format_double(double v);
double parse_double(std::string_view text);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const;  // throws ParseError when absent
};

std::string to_csv(const CsvTable& t);
CsvTable parse_csv(std::string_view text);
void write_csv(const std::filesystem::path& path, const CsvTable& t);
CsvTable read_csv(const std::filesystem::path& path);

/// t, then Re/Im/|alpha|^2/phi per mode, then theta1 and theta2.
CsvTable trajectory_table(const Trajectory& traj);
/// t, then mean (re, im), standard errors and variance per observable.
CsvTable ensemble_table(const EnsembleStats& st);
/// The window averages as a single row with the same columns (t is the window end).
CsvTable ensemble_window_table(const EnsembleStats& st, double t);
CsvTable sweep_table(const std::vector<SweepPoint>& pts);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

/// JSON-lines manifest: a "start" record before any output is written and a
/// "finish" record listing every output with its size and digest.
class RunManifest {
public:
    RunManifest(std::filesystem::path path, std::string command, const Scenario& sc,
                std::filesystem::path scenario_path, int threads);

    void start();
    void add_output(const std::filesystem::path& p);
    void add_result(const std::string& key, const std::string& value);
    void add_result(const std::string& key, double value);
    void finish(const std::string& status, std::int64_t steps);

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    struct Result {
        std::string key;
        std::string text;
        double number = 0.0;
        bool is_number = false;
    };

    std::filesystem::path path_;
    std::string command_;
    Scenario scenario_;
    std::filesystem::path scenario_path_;
    int threads_ = 0;
    std::vector<std::filesystem::path> outputs_;
    std::vector<Result> results_;
    double started_ = 0.0;
};

}  // namespace opo
