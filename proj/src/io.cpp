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

#include "opo/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace opo {

namespace {

using nlohmann::json;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text, bool append = false) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

json params_json(const SystemParams& p) {
    json j;
    j["topology"] = p.topology == Topology::Nondegenerate ? "nondegenerate" : "degenerate";
    j["gamma"] = p.gamma;
    j["chi1"] = p.chi1;
    j["chi2"] = p.chi2;
    j["drive"] = cplx_json(p.drive);
    j["detuning"] = p.detuning;
    return j;
}

json config_json(const IntegratorConfig& c) {
    json j;
    j["representation"] = std::string(to_string(c.representation));
    j["scheme"] = std::string(to_string(c.scheme));
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["record_stride"] = c.record_stride;
    j["seed"] = c.seed;
    j["initial"] = static_cast<int>(c.initial.kind);
    j["seed_amplitude"] = c.initial.seed_amplitude;
    j["randomize_phases"] = c.initial.randomize_phases;
    if (c.initial.state) {
        json s = json::array();
        for (const auto& a : c.initial.state->amplitudes()) s.push_back(cplx_json(a));
        j["initial_state"] = s;
    }
    return j;
}

json protocol_json(const Protocol& p) {
    json j;
    j["kind"] = std::string(to_string(p.kind));
    j["grid"] = p.grid;
    j["perturb_time"] = p.perturb_time;
    j["target"] = std::string(to_string(p.target));
    j["magnitude"] = p.magnitude;
    j["n_traj"] = p.n_traj;
    j["observables"] = p.observables;
    j["window_start"] = p.window_start;
    j["window_end"] = p.window_end;
    j["analysis_window"] = p.analysis_window;
    return j;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc()) throw Error(ErrorCode::IoError, "number formatting failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::ParseError, "not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw Error(ErrorCode::ParseError, "no column '" + std::string(name) + "'");
}

std::string to_csv(const CsvTable& t) {
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i) out += ',';
        out += t.header[i];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size()) throw Error(ErrorCode::ShapeMismatch, "CSV row width differs from the header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::size_t c = 0;
        for (;;) {
            const auto comma = line.find(',', c);
            cells.push_back(line.substr(c, comma == std::string_view::npos ? std::string_view::npos : comma - c));
            if (comma == std::string_view::npos) break;
            c = comma + 1;
        }
        if (first) {
            for (auto s : cells) t.header.emplace_back(s);
            first = false;
            continue;
        }
        if (cells.size() != t.header.size()) throw Error(ErrorCode::ParseError, "CSV row width differs from the header");
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto s : cells) row.push_back(parse_double(s));
        t.rows.push_back(std::move(row));
    }
    if (first) throw Error(ErrorCode::ParseError, "empty CSV");
    return t;
}

void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_file(path, to_csv(t)); }

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

CsvTable trajectory_table(const Trajectory& traj) {
    CsvTable t;
    const int n = traj.params.mode_count();
    t.header.push_back("t");
    for (int i = 0; i < n; ++i) {
        const auto k = std::to_string(i);
        for (const char* col : {"re_a", "im_a", "n", "phi"}) t.header.push_back(col + k);
    }
    t.header.push_back("theta1");
    t.header.push_back("theta2");

    // Positive-P rows report alpha (not alpha^+) and the real part of alpha alpha^+.
    Trajectory view = traj;
    if (!traj.states.empty() && traj.states.front().representation() == Representation::PositiveP) {
        for (auto& s : view.states) {
            std::vector<cplx> a(s.amplitudes().begin(), s.amplitudes().begin() + n);
            s = PhaseSpaceState(Representation::Classical, traj.params.topology, std::move(a));
        }
    }
    const auto ph = phase_observables(view);
    for (std::size_t r = 0; r < traj.states.size(); ++r) {
        std::vector<double> row;
        row.reserve(t.header.size());
        row.push_back(traj.times[r]);
        for (int i = 0; i < n; ++i) {
            const cplx a = traj.states[r].alpha(i);
            row.push_back(a.real());
            row.push_back(a.imag());
            row.push_back(traj.states[r].intensity(i).real());
            row.push_back(ph.phases[r][static_cast<std::size_t>(i)]);
        }
        row.push_back(ph.theta1[r]);
        row.push_back(ph.theta2[r]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

namespace {

CsvTable ensemble_header(const EnsembleStats& st) {
    CsvTable t;
    t.header.push_back("t");
    for (const auto& name : st.names) {
        for (const char* suffix : {"_re", "_im", "_se_re", "_se_im", "_var"}) t.header.push_back(name + suffix);
    }
    return t;
}

void push_moments(std::vector<double>& row, const MomentEstimate& m) {
    row.push_back(m.mean.real());
    row.push_back(m.mean.imag());
    row.push_back(m.se_re);
    row.push_back(m.se_im);
    row.push_back(m.var_re);
}

}  // namespace

CsvTable ensemble_table(const EnsembleStats& st) {
    CsvTable t = ensemble_header(st);
    for (std::size_t r = 0; r < st.times.size(); ++r) {
        std::vector<double> row{st.times[r]};
        for (const auto& m : st.series[r]) push_moments(row, m);
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable ensemble_window_table(const EnsembleStats& st, double time) {
    CsvTable t = ensemble_header(st);
    std::vector<double> row{time};
    for (const auto& m : st.window) push_moments(row, m);
    t.rows.push_back(std::move(row));
    return t;
}

CsvTable sweep_table(const std::vector<SweepPoint>& pts) {
    CsvTable t;
    t.header = {"epsilon_sq", "regime"};
    for (int i = 0; i < kModes; ++i) t.header.push_back("analytic_n" + std::to_string(i));
    for (int i = 0; i < kModes; ++i) t.header.push_back("numeric_n" + std::to_string(i));
    for (const char* c : {"max_gap", "converged", "marginal"}) t.header.emplace_back(c);
    for (const auto& p : pts) {
        std::vector<double> row{p.epsilon_sq, static_cast<double>(static_cast<int>(p.regime))};
        row.insert(row.end(), p.analytic.begin(), p.analytic.end());
        row.insert(row.end(), p.numeric.begin(), p.numeric.end());
        row.push_back(p.max_gap);
        row.push_back(p.converged ? 1.0 : 0.0);
        row.push_back(p.marginal ? 1.0 : 0.0);
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string file_digest(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunManifest::RunManifest(std::filesystem::path path, std::string command, const Scenario& sc,
                         std::filesystem::path scenario_path, int threads)
    : path_(std::move(path)), command_(std::move(command)), scenario_(sc),
      scenario_path_(std::move(scenario_path)), threads_(threads) {}

void RunManifest::start() {
    started_ = now_seconds();
    json j;
    j["event"] = "start";
    j["tool"] = "opo";
    j["version"] = OPO_VERSION;
    j["command"] = command_;
    j["scenario"] = scenario_path_.string();
    j["name"] = scenario_.name;
    j["params"] = params_json(scenario_.params);
    j["integrator"] = config_json(scenario_.config);
    j["protocol"] = protocol_json(scenario_.protocol);
    j["seed"] = scenario_.config.seed;
    j["threads"] = threads_;
    write_file(path_, j.dump() + "\n");
}

void RunManifest::add_output(const std::filesystem::path& p) { outputs_.push_back(p); }

void RunManifest::add_result(const std::string& key, const std::string& value) {
    results_.push_back({key, value, 0.0, false});
}

void RunManifest::add_result(const std::string& key, double value) { results_.push_back({key, {}, value, true}); }

void RunManifest::finish(const std::string& status, std::int64_t steps) {
    json j;
    j["event"] = "finish";
    j["status"] = status;
    j["steps"] = steps;
    j["wall_seconds"] = now_seconds() - started_;
    json outs = json::array();
    for (const auto& p : outputs_) {
        json o;
        o["path"] = p.string();
        if (std::filesystem::exists(p)) {
            o["bytes"] = std::filesystem::file_size(p);
            o["fnv1a64"] = file_digest(p);
        }
        outs.push_back(o);
    }
    j["outputs"] = outs;
    json res = json::object();
    for (const auto& r : results_) {
        if (r.is_number) {
            res[r.key] = std::isfinite(r.number) ? json(r.number) : json(format_double(r.number));
        } else {
            res[r.key] = r.text;
        }
    }
    j["results"] = res;
    write_file(path_, j.dump() + "\n", true);
}

}  // namespace opo
