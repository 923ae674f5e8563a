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

#include "opo/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "opo/io.hpp"
#include "opo/stability.hpp"

namespace opo {

namespace {

namespace fs = std::filesystem;

Scenario load(const CommandOptions& opt) {
    Scenario sc = load_scenario(opt.scenario);
    if (opt.seed) sc.config.seed = *opt.seed;
    return sc;
}

fs::path output(const CommandOptions& opt, const Scenario& sc, const std::string& suffix) {
    return resolve_out_dir(opt) / (sc.name + "_" + suffix);
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f || !(f << text)) throw Error(ErrorCode::IoError, "cannot write " + p.string());
}

std::string plot_header(const fs::path& csv) {
    return "#!/usr/bin/env python3\n"
           "import os\nimport numpy as np\nimport matplotlib.pyplot as plt\n\n"
           "here = os.path.dirname(os.path.abspath(__file__))\n"
           "d = np.genfromtxt(os.path.join(here, \"" + csv.filename().string() + "\"), delimiter=\",\", names=True)\n";
}

std::string trajectory_plot(const fs::path& csv, int modes, const std::string& title) {
    std::string s = plot_header(csv);
    s += "fig, (top, mid, bot) = plt.subplots(3, 1, sharex=True, figsize=(7, 8))\n";
    s += "for i in range(" + std::to_string(modes) + "):\n";
    s += "    top.plot(d[\"t\"], d[\"n%d\" % i], label=r\"$|\\alpha_%d|^2$\" % i)\n";
    s += "    mid.plot(d[\"t\"], d[\"phi%d\" % i], label=r\"$\\phi_%d$\" % i)\n";
    s += "bot.plot(d[\"t\"], d[\"theta1\"], label=r\"$\\theta_1$\")\n";
    s += "bot.plot(d[\"t\"], d[\"theta2\"], label=r\"$\\theta_2$\")\n";
    s += "top.set_ylabel(\"intracavity power\")\nmid.set_ylabel(\"phase\")\nbot.set_ylabel(\"phase difference\")\n";
    s += "bot.set_xlabel(r\"$t$\")\n";
    s += "for ax in (top, mid, bot):\n    ax.legend(loc=\"upper right\", fontsize=\"small\")\n";
    s += "top.set_title(\"" + title + "\")\nfig.tight_layout()\n";
    s += "fig.savefig(os.path.join(here, \"" + csv.stem().string() + ".png\"), dpi=150)\n";
    return s;
}

std::string ensemble_plot(const fs::path& csv, const std::vector<std::string>& names, const std::string& title) {
    std::string s = plot_header(csv);
    s += "cols = d.dtype.names\n";
    s += "fig, axes = plt.subplots(" + std::to_string(names.size()) + ", 1, sharex=True, squeeze=False, figsize=(7, 2.5 * " +
         std::to_string(names.size()) + "))\n";
    s += "for k, ax in enumerate(axes[:, 0]):\n";
    s += "    m, e = cols[1 + 5 * k], cols[3 + 5 * k]\n";
    s += "    ax.plot(d[\"t\"], d[m], label=m[:-3])\n";
    s += "    ax.fill_between(d[\"t\"], d[m] - 3 * d[e], d[m] + 3 * d[e], alpha=0.3)\n";
    s += "    ax.legend(loc=\"upper right\", fontsize=\"small\")\n";
    s += "axes[-1, 0].set_xlabel(r\"$t$\")\naxes[0, 0].set_title(\"" + title + "\")\nfig.tight_layout()\n";
    s += "fig.savefig(os.path.join(here, \"" + csv.stem().string() + ".png\"), dpi=150)\n";
    return s;
}

std::string sweep_plot(const fs::path& csv, const std::string& title) {
    std::string s = plot_header(csv);
    s += "fig, ax = plt.subplots(figsize=(7, 4.5))\n";
    s += "for i in range(5):\n";
    s += "    line, = ax.plot(d[\"epsilon_sq\"], d[\"analytic_n%d\" % i], label=r\"$n_%d$\" % i)\n";
    s += "    ax.plot(d[\"epsilon_sq\"], d[\"numeric_n%d\" % i], \"o\", color=line.get_color(), mfc=\"none\")\n";
    s += "ax.set_xlabel(r\"$\\epsilon^2$\")\nax.set_ylabel(r\"$n_i / n_{0,cr}$\")\nax.legend()\n";
    s += "ax.set_title(\"" + title + "\")\nfig.tight_layout()\n";
    s += "fig.savefig(os.path.join(here, \"" + csv.stem().string() + ".png\"), dpi=150)\n";
    return s;
}

void print_state(std::ostream& out, const PhaseSpaceState& s) {
    for (int i = 0; i < s.mode_count(); ++i) {
        out << "  n" << i << " = " << format_double(std::norm(s.alpha(i))) << "\n";
    }
}

}  // namespace

fs::path resolve_out_dir(const CommandOptions& opt) {
    if (!opt.out_dir.empty()) return opt.out_dir;
    if (const char* env = std::getenv("OPO_OUT_DIR"); env && *env) return env;
    return "out";
}

CommandResult cmd_analyze(const CommandOptions& opt, std::ostream& out) {
    const Scenario sc = load(opt);
    const SystemParams& p = sc.params;
    CommandResult res;
    res.manifest = output(opt, sc, "analyze.manifest.jsonl");
    RunManifest man(res.manifest, "analyze", sc, opt.scenario, opt.threads);
    man.start();

    nlohmann::json j;
    j["scenario"] = sc.name;
    out << "scenario " << sc.name << " (" << to_string(p.topology) << ")\n";
    const bool symmetric = p.topology == Topology::Nondegenerate && is_symmetric(p) &&
                           p.detuning == std::array<double, kModes>{};
    if (symmetric) {
        const auto th = thresholds(p);
        const auto sol = steady_state(p);
        const auto rep = analyze_stability(p);
        out << "thresholds: |E_thr1|^2 = " << format_double(th.first_sq) << ", |E_thr2|^2 = " << format_double(th.second_sq)
            << "\n";
        out << "regime: " << to_string(sol.regime) << "; " << (rep.overall_stable ? "stable" : "unstable") << "\n";
        out << "steady-state intensities:\n";
        for (int i = 0; i < kModes; ++i) out << "  n" << i << " = " << format_double(sol.intensities[static_cast<std::size_t>(i)]) << "\n";
        j["regime"] = std::string(to_string(sol.regime));
        j["thresholds"] = {th.first_sq, th.second_sq};
        j["intensities"] = sol.intensities;
        j["stable"] = rep.overall_stable;
        nlohmann::json subs = nlohmann::json::array();
        for (const auto& sr : rep.subsystems) {
            double max_re = -INFINITY;
            for (const auto& ev : sr.eigenvalues) max_re = std::max(max_re, ev.real());
            out << "  " << sr.subsystem.name << ": " << to_string(sr.verdict) << ", max Re(lambda) = " << format_double(max_re);
            nlohmann::json sj{{"name", sr.subsystem.name}, {"verdict", std::string(to_string(sr.verdict))}, {"max_real", max_re}};
            if (sr.subsystem.matrix.size() == 3) {
                const bool rh = routh_hurwitz_cubic(characteristic_cubic(sr.subsystem.matrix));
                out << ", Routh-Hurwitz " << (rh ? "pass" : "fail");
                sj["routh_hurwitz"] = rh;
            }
            out << "\n";
            subs.push_back(sj);
        }
        j["subsystems"] = subs;
        for (const auto& d : rep.diffusing_phases) {
            out << "  diffusing phase " << d.phase << ": Var grows at " << format_double(d.rate) << " per unit time\n";
            j["diffusing"][d.phase] = d.rate;
        }
        for (const auto& w : rep.warnings) out << "  warning: " << w << "\n";
        j["warnings"] = rep.warnings;
        man.add_result("regime", std::string(to_string(sol.regime)));
    } else {
        out << "notice: parameters are not symmetric; the closed forms do not apply, searching numerically\n";
        const auto fp = numeric_fixed_point(p, 0.01, 1e-12, std::max(sc.config.t_end, 2e4), sc.config.seed);
        double max_re = -INFINITY;
        for (const auto& ev : fp.eigenvalues) max_re = std::max(max_re, ev.real());
        out << "numeric fixed point: " << (fp.converged ? "converged" : "not converged") << " (drift norm "
            << format_double(fp.drift_norm) << " at t = " << format_double(fp.time) << ")\n";
        print_state(out, fp.state);
        out << "  max Re(lambda) of the Jacobian = " << format_double(max_re) << "\n";
        std::vector<double> n;
        for (int i = 0; i < p.mode_count(); ++i) n.push_back(std::norm(fp.state.alpha(i)));
        j["regime"] = "numeric";
        j["converged"] = fp.converged;
        j["drift_norm"] = fp.drift_norm;
        j["intensities"] = n;
        j["max_real"] = max_re;
        man.add_result("converged", fp.converged ? "true" : "false");
    }
    const fs::path report = output(opt, sc, "analyze.jsonl");
    write_text(report, j.dump() + "\n");
    man.add_output(report);
    res.outputs.push_back(report);
    man.finish("ok", 0);
    return res;
}

CommandResult cmd_simulate(const CommandOptions& opt, std::ostream& out) {
    const Scenario sc = load(opt);
    CommandResult res;
    res.manifest = output(opt, sc, "simulate.manifest.jsonl");
    RunManifest man(res.manifest, "simulate", sc, opt.scenario, opt.threads);
    man.start();
    const Trajectory tr = simulate(sc.params, sc.config);
    const fs::path csv = output(opt, sc, "simulate.csv");
    write_csv(csv, trajectory_table(tr));
    man.add_output(csv);
    res.outputs.push_back(csv);
    out << "wrote " << tr.states.size() << " records to " << csv.string() << "\n";
    if (sc.config.representation == Representation::Classical && tr.states.size() >= 8) {
        const double dn = drift_norm(classical_drift(tr.states.back(), sc.params));
        man.add_result("terminal_drift_norm", dn);
        out << "terminal drift norm " << format_double(dn) << "\n";
        const double span = tr.times.back() - tr.times.front();
        const double window = sc.protocol.analysis_window > 0.0 ? sc.protocol.analysis_window : 0.5 * span;
        const auto rep = detect_dynamics_class(tr, window);
        man.add_result("dynamics_class", std::string(to_string(rep.cls)));
        man.add_result("envelope_ratio", rep.envelope_ratio);
        out << "dynamics: " << to_string(rep.cls) << " (variation " << format_double(rep.variation) << ", envelope ratio "
            << format_double(rep.envelope_ratio) << ")\n";
        if (rep.cls != DynamicsClass::ConvergedFixedPoint) {
            std::vector<double> n0;
            for (std::size_t r = 0; r < tr.times.size(); ++r) {
                if (tr.times[r] >= tr.times.back() - window) n0.push_back(std::norm(tr.states[r].alpha(0)));
            }
            if (n0.size() >= 8) {
                const double f = dominant_frequency(n0, sc.config.dt * sc.config.record_stride);
                man.add_result("dominant_frequency_n0", f);
                out << "dominant frequency of n0: " << format_double(f) << "\n";
            }
        }
    }
    if (opt.plot) {
        const fs::path py = output(opt, sc, "simulate_plot.py");
        write_text(py, trajectory_plot(csv, sc.params.mode_count(), sc.name));
        man.add_output(py);
        res.outputs.push_back(py);
    }
    man.finish("ok", step_count(sc.config));
    return res;
}

CommandResult cmd_ensemble(const CommandOptions& opt, std::ostream& out) {
    const Scenario sc = load(opt);
    CommandResult res;
    res.manifest = output(opt, sc, "ensemble.manifest.jsonl");
    RunManifest man(res.manifest, "ensemble", sc, opt.scenario, opt.threads);
    man.start();
    EnsembleSpec spec;
    spec.n_traj = opt.quick ? std::max(100, sc.protocol.n_traj / 10) : sc.protocol.n_traj;
    spec.threads = opt.threads;
    spec.window_start = sc.protocol.window_start;
    spec.window_end = sc.protocol.window_end;
    auto names = sc.protocol.observables;
    if (names.empty()) {
        for (int i = 0; i < sc.params.mode_count(); ++i) names.push_back("n" + std::to_string(i));
    }
    for (const auto& o : names) spec.observables.push_back(parse_observable(o));
    const EnsembleStats st = run_ensemble(sc.params, sc.config, spec);

    const fs::path csv = output(opt, sc, "ensemble.csv");
    const fs::path win = output(opt, sc, "ensemble_window.csv");
    write_csv(csv, ensemble_table(st));
    const double t_win = spec.window_end >= 0.0 ? spec.window_end : st.times.back();
    write_csv(win, ensemble_window_table(st, t_win));
    for (const auto& p : {csv, win}) {
        man.add_output(p);
        res.outputs.push_back(p);
    }
    man.add_result("n_traj", static_cast<double>(st.n_traj));
    man.add_result("n_discarded", static_cast<double>(st.n_discarded));
    out << st.n_traj << " trajectories, " << st.n_discarded << " discarded\n";
    for (std::size_t k = 0; k < st.names.size(); ++k) {
        const auto& m = st.window[k];
        out << "  <" << st.names[k] << "> = " << format_double(m.mean.real()) << " + " << format_double(m.mean.imag())
            << "i  (se " << format_double(m.se_re) << ", " << format_double(m.se_im) << ")\n";
    }
    if (opt.plot) {
        const fs::path py = output(opt, sc, "ensemble_plot.py");
        write_text(py, ensemble_plot(csv, st.names, sc.name));
        man.add_output(py);
        res.outputs.push_back(py);
    }
    man.finish("ok", step_count(sc.config) * spec.n_traj);
    return res;
}

CommandResult cmd_sweep(const CommandOptions& opt, std::ostream& out) {
    const Scenario sc = load(opt);
    if (sc.protocol.kind != ProtocolKind::Sweep) throw Error(ErrorCode::InvalidConfig, "scenario has no sweep protocol");
    CommandResult res;
    res.manifest = output(opt, sc, "sweep.manifest.jsonl");
    RunManifest man(res.manifest, "sweep", sc, opt.scenario, opt.threads);
    man.start();
    const double t_max = sc.config.t_end > 1.0 ? sc.config.t_end : 2e4;
    const auto pts = threshold_sweep(sc.params, sc.protocol.grid, sc.config.dt, t_max);
    const fs::path csv = output(opt, sc, "sweep.csv");
    write_csv(csv, sweep_table(pts));
    man.add_output(csv);
    res.outputs.push_back(csv);
    double worst = 0.0;
    for (const auto& pt : pts) {
        out << "  eps^2 = " << format_double(pt.epsilon_sq) << "  " << to_string(pt.regime)
            << (pt.marginal ? "" : (pt.converged ? "" : "  (not converged)")) << "  gap " << format_double(pt.max_gap) << "\n";
        if (!pt.marginal) worst = std::max(worst, pt.max_gap);
    }
    man.add_result("max_gap", worst);
    if (opt.plot) {
        const fs::path py = output(opt, sc, "sweep_plot.py");
        write_text(py, sweep_plot(csv, sc.name));
        man.add_output(py);
        res.outputs.push_back(py);
    }
    man.finish("ok", static_cast<std::int64_t>(pts.size()));
    return res;
}

CommandResult cmd_perturb(const CommandOptions& opt, std::ostream& out) {
    const Scenario sc = load(opt);
    CommandResult res;
    res.manifest = output(opt, sc, "perturb.manifest.jsonl");
    RunManifest man(res.manifest, "perturb", sc, opt.scenario, opt.threads);
    man.start();
    const auto pr = run_perturbation(sc);
    const fs::path csv = output(opt, sc, "perturb.csv");
    write_csv(csv, trajectory_table(pr.trajectory));
    man.add_output(csv);
    res.outputs.push_back(csv);
    const auto& r = pr.report;
    man.add_result("recovered", r.recovered ? "true" : "false");
    man.add_result("recovery_time", r.recovery_time);
    man.add_result("theta1_final", r.theta1_final);
    man.add_result("theta2_final", r.theta2_final);
    man.add_result("max_theta1_excursion", r.max_theta1_excursion);
    man.add_result("max_phi2_excursion", r.max_phase_excursion[2]);
    out << (r.recovered ? "recovered" : "did not recover") << " after the kick";
    if (r.recovered) out << " (t = " << format_double(r.recovery_time) << ")";
    out << "\n  theta1 = " << format_double(r.theta1_final) << ", theta2 = " << format_double(r.theta2_final) << "\n";
    out << "  largest |theta1| excursion " << format_double(r.max_theta1_excursion) << ", |phi2| excursion "
        << format_double(r.max_phase_excursion[2]) << "\n";
    if (opt.plot) {
        const fs::path py = output(opt, sc, "perturb_plot.py");
        write_text(py, trajectory_plot(csv, sc.params.mode_count(), sc.name));
        man.add_output(py);
        res.outputs.push_back(py);
    }
    man.finish("ok", step_count(sc.config));
    return res;
}

}  // namespace opo
