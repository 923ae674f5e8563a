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

#include "opo/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "opo/commands.hpp"
#include "opo/io.hpp"
#include "opo/oracle.hpp"
#include "opo/stability.hpp"

#ifndef OPO_SCENARIO_DIR
#define OPO_SCENARIO_DIR "scenarios"
#endif

namespace opo {

namespace {

namespace fs = std::filesystem;

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Context {
    AcceptanceOptions opt;
    fs::path scenarios;

    Scenario scenario(const std::string& name) const { return load_scenario(scenarios / (name + ".scn")); }
};

std::string num(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

double max_real(std::span<const cplx> ev) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& e : ev) m = std::max(m, e.real());
    return m;
}

SystemParams symmetric(double g0, double g, double chi, double eps_sq) {
    SystemParams p;
    p.gamma = {g0, g, g, g, g};
    p.chi1 = p.chi2 = chi;
    return with_epsilon_sq(p, eps_sq);
}

// Threshold structure and long-time steady states across the sweep grid.
Outcome a1(const Context& ctx) {
    const Scenario sc = ctx.scenario("fig2");
    const auto th = thresholds(with_epsilon_sq(sc.params, 1.0));
    const double g0 = sc.params.gamma[0], g = sc.params.gamma[1], chi = sc.params.chi1;
    const double first = g0 * g / chi;
    const double eps2 = th.second_sq / th.first_sq;
    const double ulp = std::numeric_limits<double>::epsilon();
    const bool closed = std::abs(th.first_sq / (first * first) - 1.0) <= 4 * ulp && std::abs(eps2 - 1.21) <= 4 * ulp * 1.21;
    const auto pts = threshold_sweep(sc.params, sc.protocol.grid, sc.config.dt, sc.config.t_end);
    double worst = 0.0;
    bool converged = true;
    for (const auto& pt : pts) {
        worst = std::max(worst, pt.max_gap);
        converged = converged && pt.converged;
    }
    return {closed && converged && worst < 1e-6,
            "eps_thr2^2 = " + num(eps2, 17) + ", max relative gap " + num(worst, 3) + (converged ? "" : ", not all converged")};
}

// n1 = n2 + n3 in regime 3, analytically and at numeric fixed points.
Outcome a2(const Context&) {
    std::mt19937_64 rng(20260101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_analytic = 0.0, worst_numeric = 0.0;
    int failures = 0;
    for (int k = 0; k < 100; ++k) {
        const double g = 0.5 + 1.5 * u(rng);
        const double ratio = 5.0 + 15.0 * u(rng);
        const double chi = 0.5 + 1.5 * u(rng);
        const double thr2 = (1.0 + 1.0 / ratio) * (1.0 + 1.0 / ratio);
        const auto p = symmetric(ratio * g, g, chi, thr2 * (1.2 + 1.8 * u(rng)));
        const auto sol = steady_state(p);
        const auto& n = sol.intensities;
        if (sol.regime != Regime::SecondAbove) {
            ++failures;
            continue;
        }
        worst_analytic = std::max(worst_analytic, std::abs(n[1] - n[2] - n[3]) / n[1]);
        const auto fp = numeric_fixed_point(p, 0.05 / p.gamma[0], 1e-12, 4e3 / g);
        const double m1 = std::norm(fp.state.alpha(1)), m2 = std::norm(fp.state.alpha(2)), m3 = std::norm(fp.state.alpha(3));
        if (!fp.converged) ++failures;
        worst_numeric = std::max(worst_numeric, std::abs(m1 - m2 - m3) / m1);
    }
    const double ulps = worst_analytic / std::numeric_limits<double>::epsilon();
    return {failures == 0 && ulps <= 8.0 && worst_numeric < 1e-6,
            "analytic " + num(ulps, 3) + " ulp, numeric " + num(worst_numeric, 3) +
                (failures ? ", " + std::to_string(failures) + " draws failed" : "")};
}

// Below-threshold eigenvalues -1 +- eps and the verdict flip at eps = 1.
Outcome a3(const Context&) {
    double worst = 0.0;
    for (double eps : {0.0, 0.3, 0.7, 0.99, 1.01}) {
        const auto ev = eigenvalues_dense(below_threshold_matrix(eps).matrix);
        std::vector<double> got, want = {-1 - eps, -1 - eps, -1 + eps, -1 + eps};
        for (const auto& e : ev) {
            got.push_back(e.real());
            worst = std::max(worst, std::abs(e.imag()));
        }
        std::sort(got.begin(), got.end());
        if (got.size() != want.size()) return {false, "wrong eigenvalue count"};
        for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
    auto verdict = [](double eps) { return verdict_of(eigenvalues_dense(below_threshold_matrix(eps).matrix)); };
    const bool flips = verdict(0.99) == Verdict::Stable && verdict(1.0 - 1e-9) == Verdict::Stable &&
                       verdict(1.0 + 1e-9) == Verdict::Unstable && verdict(1.01) == Verdict::Unstable;
    return {worst < 1e-10 && flips, "max eigenvalue error " + num(worst, 3) + (flips ? ", verdict flips at 1" : ", no flip")};
}

// Bisection on the regime-2 tilde-alpha block locates the second threshold.
Outcome a4(const Context&) {
    double worst = 0.0;
    for (double ratio : {5.0, 10.0, 50.0}) {
        const auto base = symmetric(ratio, 1.0, 1.0, 1.0);
        auto growth = [&](double eps_sq) {
            const auto p = with_epsilon_sq(base, eps_sq);
            const auto subs = regime2_subsystems(steady_state_branch(p, Regime::FirstAbove), p);
            for (const auto& s : subs) {
                if (s.name == "regime-2 tilde-alpha") return max_real(eigenvalues_dense(s.matrix));
            }
            throw Error(ErrorCode::InvalidConfig, "tilde-alpha block missing");
        };
        double lo = 1.0 + 1e-6, hi = 4.0;
        if (!(growth(lo) < 0.0 && growth(hi) > 0.0)) return {false, "no sign change for ratio " + num(ratio)};
        while (hi - lo > 1e-15 * hi) {
            const double mid = 0.5 * (lo + hi);
            (growth(mid) < 0.0 ? lo : hi) = mid;
        }
        const double expect = (1.0 + 1.0 / ratio) * (1.0 + 1.0 / ratio);
        worst = std::max(worst, std::abs(0.5 * (lo + hi) / expect - 1.0));
    }
    return {worst < 1e-8, "max relative error " + num(worst, 3)};
}

// Routh-Hurwitz against companion-matrix roots and regime-3 blocks.
Outcome a5(const Context&) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    int checked = 0, mismatched = 0;
    for (int k = 0; k < 1000; ++k) {
        const double a2 = coef(rng), a1 = coef(rng), a0 = coef(rng);
        const double companion[] = {-a2, -a1, -a0, 1, 0, 0, 0, 1, 0};
        const double m = max_real(eigenvalues_dense(Matrix::from_real(3, companion)));
        if (std::abs(m) < 1e-9) continue;
        ++checked;
        if (routh_hurwitz_cubic({1.0, a2, a1, a0}) != (m < 0.0)) ++mismatched;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int blocks = 0, unstable = 0;
    for (int k = 0; k < 100; ++k) {
        const double g = 0.5 + 1.5 * u(rng);
        const double ratio = 0.5 + 30.0 * u(rng);
        const double thr2 = (1.0 + 1.0 / ratio) * (1.0 + 1.0 / ratio);
        const auto p = symmetric(ratio * g, g, 0.5 + u(rng), thr2 * (1.05 + 4.0 * u(rng)));
        std::vector<std::string> warnings;
        for (const auto& s : regime3_subsystems(steady_state(p), p, {}, &warnings)) {
            if (s.matrix.size() != 3) continue;
            const double m = max_real(eigenvalues_dense(s.matrix));
            if (std::abs(m) < 1e-9) continue;
            ++blocks;
            if (m > 0.0) ++unstable;
            if (routh_hurwitz_cubic(characteristic_cubic(s.matrix)) != (m < 0.0)) ++mismatched;
        }
    }
    return {mismatched == 0 && blocks > 0,
            std::to_string(checked) + " cubics and " + std::to_string(blocks) + " regime-3 blocks (" + std::to_string(unstable) +
                " unstable), " + std::to_string(mismatched) + " mismatches"};
}

// Wigner vacuum: <|alpha_i|^2> = 1/2.
Outcome a6(const Context& ctx) {
    const Scenario sc = ctx.scenario("wigner-vacuum");
    EnsembleSpec spec;
    spec.n_traj = ctx.opt.quick ? 2000 : sc.protocol.n_traj;
    spec.threads = ctx.opt.threads;
    spec.window_start = sc.protocol.window_start;
    spec.window_end = sc.protocol.window_end;
    spec.time_series = false;
    for (const auto& o : sc.protocol.observables) spec.observables.push_back(parse_observable(o));
    const auto st = run_ensemble(sc.params, sc.config, spec);
    double worst = 0.0;
    for (const auto& m : st.window) worst = std::max(worst, std::abs(m.mean.real() - 0.5) / m.se_re);
    return {worst <= 3.0 && st.n_discarded == 0, "max deviation " + num(worst, 3) + " SE over " + std::to_string(spec.n_traj) + " trajectories"};
}

// Positive-P ensemble against the master equation.
Outcome a7(const Context& ctx) {
    const Scenario sc = ctx.scenario("weak-drive-pp");
    FockConfig fock;
    fock.cutoffs = {3, 2, 2, 2, 2};
    fock.saturation_threshold = 1e-2;
    const double t0 = sc.protocol.window_start, t1 = sc.protocol.window_end;
    const double sample = sc.config.dt * sc.config.record_stride;
    const double dt_oracle = 0.05;
    const auto& names = sc.protocol.observables;
    std::vector<cplx> oracle(names.size());
    DensityMatrix rho = evolve_master(DensityMatrix::vacuum(fock.dimension()), sc.params, fock, t0, dt_oracle);
    int samples = 0;
    for (double t = t0;; t += sample) {
        for (std::size_t k = 0; k < names.size(); ++k) oracle[k] += expect(rho, fock, names[k]);
        ++samples;
        if (t + sample > t1 + 1e-9) break;
        rho = evolve_master(rho, sc.params, fock, sample, dt_oracle);
    }
    for (auto& v : oracle) v /= static_cast<double>(samples);

    EnsembleSpec spec;
    spec.n_traj = ctx.opt.quick ? 2000 : sc.protocol.n_traj;
    spec.threads = ctx.opt.threads;
    spec.window_start = t0;
    spec.window_end = t1;
    spec.time_series = false;
    for (const auto& o : names) spec.observables.push_back(parse_observable(o));
    const auto st = run_ensemble(sc.params, sc.config, spec);
    const double tol = ctx.opt.quick ? 5.0 : 3.0;
    double worst = 0.0;
    std::string detail;
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto& m = st.window[k];
        const bool triple = names[k].find('*') != std::string::npos;
        const double zr = std::abs(m.mean.real() - oracle[k].real()) / m.se_re;
        const double zi = triple ? std::abs(m.mean.imag() - oracle[k].imag()) / m.se_im : 0.0;
        worst = std::max({worst, zr, zi});
        detail += names[k] + " " + num(m.mean.real(), 4) + " vs " + num(oracle[k].real(), 4) + " (" + num(zr, 2) + " SE)";
        if (triple) detail += ", im " + num(m.mean.imag(), 3) + " vs " + num(oracle[k].imag(), 3) + " (" + num(zi, 2) + " SE)";
        detail += "; ";
    }
    return {worst <= tol && st.n_discarded == 0, detail + "discarded " + std::to_string(st.n_discarded)};
}

// Phase diffusion of phi1 - phi2 in regime 2 at n1 = 50.
Outcome a8(const Context& ctx) {
    const double target = 50.0;
    SystemParams base;
    base.gamma = {10.0, 1.0, 1.0, 1.0, 1.0};
    base.chi1 = base.chi2 = 0.05;
    auto n1_at = [&](double e2) { return steady_state_branch(with_epsilon_sq(base, e2), Regime::FirstAbove).intensities[1]; };
    const Thresholds thr = thresholds(base);
    double lo = 1.0, hi = thr.second_sq / thr.first_sq;
    if (n1_at(hi) < target) return {false, "n1 = 50 is not reachable in regime 2"};
    for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
        const double mid = 0.5 * (lo + hi);
        (n1_at(mid) < target ? lo : hi) = mid;
    }
    const auto p = with_epsilon_sq(base, 0.5 * (lo + hi));
    const double n1 = steady_state(p).intensities[1];

    IntegratorConfig cfg;
    cfg.representation = Representation::Wigner;
    cfg.scheme = Scheme::Heun;
    cfg.dt = 0.005;
    cfg.t_end = 6.0;
    cfg.record_stride = 20;
    cfg.seed = 808;
    cfg.initial.kind = InitialKind::SteadyState;
    EnsembleSpec spec;
    spec.n_traj = ctx.opt.quick ? 500 : 2000;
    spec.threads = ctx.opt.threads;
    spec.observables = {parse_observable("phi1-phi2")};
    const auto st = run_ensemble(p, cfg, spec);
    const auto fit = estimate_diffusion_slope(st, 0, 0.5, cfg.t_end, 0.1);
    const double expect = p.gamma[1] / n1;
    const double rel = std::abs(fit.slope / expect - 1.0);
    const double tol = ctx.opt.quick ? 0.3 : 0.15;
    return {rel <= tol, "slope " + num(fit.slope, 4) + " +- " + num(fit.std_error, 2) + " vs gamma/n1 = " + num(expect, 4) + " (" +
                            num(100 * rel, 3) + "% off, " + std::to_string(fit.points) + " points)"};
}

double window_of(const Scenario& sc, const Trajectory& tr) {
    return sc.protocol.analysis_window > 0.0 ? sc.protocol.analysis_window : 0.5 * (tr.times.back() - tr.times.front());
}

double spiking_frequency(const Scenario& sc, const Trajectory& tr) {
    const double w = window_of(sc, tr);
    std::vector<double> n0;
    for (std::size_t r = 0; r < tr.times.size(); ++r) {
        if (tr.times[r] >= tr.times.back() - w) n0.push_back(std::norm(tr.states[r].alpha(0)));
    }
    return dominant_frequency(n0, sc.config.dt * sc.config.record_stride);
}

// Dynamics classes of the figure scenarios.
Outcome a9(const Context& ctx) {
    std::string detail;
    bool ok = true;

    const Scenario f3 = ctx.scenario("fig3");
    const auto t3 = simulate(f3.params, f3.config);
    const auto r3 = detect_dynamics_class(t3, window_of(f3, t3));
    const auto ph = phase_observables(t3);
    const double th = std::max(std::abs(ph.theta1.back()), std::abs(ph.theta2.back()));
    const bool ok3 = r3.cls == DynamicsClass::ConvergedFixedPoint && th < 1e-4;
    ok = ok && ok3;
    detail += "fig3 " + std::string(to_string(r3.cls)) + " (drift " + num(r3.terminal_drift_norm, 3) + ", |theta| " + num(th, 3) + ")";

    const Scenario f6 = ctx.scenario("fig6");
    const Scenario f6h = ctx.scenario("fig6-high");
    const auto t6 = simulate(f6.params, f6.config);
    const auto t6h = simulate(f6h.params, f6h.config);
    const auto r6 = detect_dynamics_class(t6, window_of(f6, t6));
    const double fa = spiking_frequency(f6, t6), fb = spiking_frequency(f6h, t6h);
    ok = ok && r6.cls == DynamicsClass::PersistentOscillation && fb > fa;
    detail += "; fig6 " + std::string(to_string(r6.cls)) + ", spiking frequency " + num(fa, 4) + " -> " + num(fb, 4);

    const Scenario f8 = ctx.scenario("fig8-bottom");
    const auto t8 = simulate(f8.params, f8.config);
    const auto r8 = detect_dynamics_class(t8, window_of(f8, t8));
    ok = ok && r8.cls == DynamicsClass::GrowingOscillation;
    detail += "; fig8-bottom " + std::string(to_string(r8.cls)) + " (envelope " + num(r8.envelope_ratio, 3) + ")";
    return {ok, detail};
}

// Recovery after kicks.
Outcome a10(const Context& ctx) {
    const auto both = run_perturbation(ctx.scenario("fig9"));
    const auto real = run_perturbation(ctx.scenario("fig11"));
    const auto& a = both.report;
    const auto& b = real.report;
    const bool ok = a.recovered && a.thetas_recovered && b.recovered && b.thetas_recovered &&
                    ctx.scenario("fig11").protocol.magnitude > 0.5 && b.max_phase_excursion[2] > 0.95 * std::numbers::pi;
    return {ok, "fig9 " + std::string(a.recovered ? "recovered" : "not recovered") + " at t+" + num(a.recovery_time, 4) + ", theta " +
                    num(a.theta1_final, 2) + "/" + num(a.theta2_final, 2) + "; fig11 phi2 excursion " +
                    num(b.max_phase_excursion[2], 4) + " rad, " + (b.recovered ? "recovered" : "not recovered")};
}

// Integrator orders.
Outcome a11(const Context& ctx) {
    const Scenario f3 = ctx.scenario("fig3");
    const double horizon = 100.0;
    auto final_state = [&](double dt) {
        IntegratorConfig c = f3.config;
        c.dt = dt;
        c.t_end = horizon;
        c.record_stride = static_cast<int>(std::llround(horizon / dt));
        return simulate(f3.params, c).states.back();
    };
    const double h = 4 * f3.config.dt;
    const auto coarse = final_state(h), fine = final_state(h / 2), ref = final_state(h / 16);
    double e1 = 0.0, e2 = 0.0;
    for (int i = 0; i < kModes; ++i) {
        e1 = std::max(e1, std::abs(coarse.alpha(i) - ref.alpha(i)));
        e2 = std::max(e2, std::abs(fine.alpha(i) - ref.alpha(i)));
    }
    const double rk = e1 / e2;
    const bool rk_ok = std::abs(rk / 16.0 - 1.0) <= 0.2;

    const Scenario w = ctx.scenario("weak-drive-pp");
    IntegratorConfig c = w.config;
    c.scheme = Scheme::EulerMaruyama;
    c.dt = 0.025;
    c.t_end = 25.0;
    const int n = ctx.opt.quick ? 2000 : 10000;
    const auto bias = em_weak_bias(w.params, c, 1, n, 2, 32, 5.0, ctx.opt.threads);
    const double em = bias[0].bias / bias[1].bias;
    const double em_se = em * std::hypot(bias[0].std_error / bias[0].bias, bias[1].std_error / bias[1].bias);
    const bool em_ok = std::abs(em / 2.0 - 1.0) <= (ctx.opt.quick ? 0.5 : 0.25);
    return {rk_ok && em_ok, "RK4 ratio " + num(rk, 4) + " (errors " + num(e1, 3) + ", " + num(e2, 3) + ", dt " + num(h) + " vs " + num(h / 2) + "); EM weak-bias ratio " + num(em, 4) +
                                " +- " + num(em_se, 2)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Byte-identical CSVs across reruns and thread counts.
Outcome a12(const Context& ctx) {
    fs::path work = ctx.opt.work_dir;
    if (work.empty()) work = fs::temp_directory_path() / ("opo-acceptance-" + std::to_string(std::random_device{}()));
    fs::create_directories(work);
    const fs::path ens = work / "determinism.scn";
    {
        std::ofstream f(ens);
        f << "[params]\ngamma = 2, 1, 1, 1, 1\nchi = 0.5\ndrive = 1.2\n"
             "[integrator]\nrepresentation = positive_p\nscheme = heun\ndt = 0.01\nt_end = 5\nrecord_stride = 10\nseed = 99\n"
             "[protocol]\nkind = ensemble\nn_traj = 1000\nobservables = n1, n3, a1*a3*a4, phi1-phi2\n";
    }
    std::ostringstream sink;
    std::vector<std::string> mismatched;
    int compared = 0;
    auto run = [&](auto cmd, const fs::path& scenario, int threads, const std::string& tag) {
        CommandOptions o;
        o.scenario = scenario;
        o.threads = threads;
        o.plot = false;
        o.out_dir = work / tag;
        return cmd(o, sink).outputs;
    };
    auto compare = [&](const std::vector<fs::path>& ref, const std::vector<fs::path>& other) {
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (ref[i].extension() != ".csv") continue;
            ++compared;
            if (i >= other.size() || slurp(ref[i]) != slurp(other[i])) mismatched.push_back(ref[i].filename().string());
        }
    };
    for (auto [cmd, scenario] : {std::pair{&cmd_simulate, ctx.scenarios / "fig6.scn"}, std::pair{&cmd_ensemble, ens}}) {
        const auto a = run(cmd, scenario, 1, "t1a");
        const auto b = run(cmd, scenario, 1, "t1b");
        const auto c = run(cmd, scenario, 8, "t8");
        compare(a, b);
        compare(a, c);
    }
    if (ctx.opt.work_dir.empty()) fs::remove_all(work);
    std::string detail = std::to_string(compared) + " CSV comparisons";
    for (const auto& m : mismatched) detail += ", differs: " + m;
    return {mismatched.empty() && compared == 6, detail};
}

struct Criterion {
    const char* id;
    const char* title;
    double budget;  // seconds; 0: none
    Outcome (*run)(const Context&);
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream& out) {
    static const Criterion all[] = {
        {"A1", "threshold structure", 10.0, a1},
        {"A2", "regime-3 conservation", 30.0, a2},
        {"A3", "below-threshold spectrum", 0.0, a3},
        {"A4", "second threshold by bisection", 5.0, a4},
        {"A5", "Routh-Hurwitz cross-check", 5.0, a5},
        {"A6", "Wigner vacuum moment", 60.0, a6},
        {"A7", "positive-P vs master equation", 600.0, a7},
        {"A8", "phase diffusion", 300.0, a8},
        {"A9", "dynamics classes", 60.0, a9},
        {"A10", "perturbation recovery", 30.0, a10},
        {"A11", "integrator orders", 0.0, a11},
        {"A12", "determinism", 0.0, a12},
    };
    Context ctx{opt, opt.scenario_dir.empty() ? fs::path(OPO_SCENARIO_DIR) : opt.scenario_dir};
    std::vector<CriterionResult> results;
    for (const auto& c : all) {
        if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), c.id) == opt.only.end()) continue;
        CriterionResult r;
        r.id = c.id;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Outcome o = c.run(ctx);
            r.passed = o.passed;
            r.detail = o.detail;
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget > 0.0 && r.seconds > c.budget) {
            r.passed = false;
            r.detail += "; over the " + num(c.budget) + " s budget";
        }
        out << (r.passed ? "PASS " : "FAIL ") << r.id << "  " << c.title << ": " << r.detail << "  [" << num(r.seconds, 3) << " s]"
            << std::endl;
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace opo
