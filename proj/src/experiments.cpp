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

#include "opo/experiments.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "opo/linalg.hpp"
#include "parallel.hpp"

namespace opo {

namespace {

namespace pt = boost::property_tree;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double to_double(const std::string& key, std::string_view text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto* first = t.data();
    const auto* last = t.data() + t.size();
    if (!t.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw Error(ErrorCode::ParseError, "key '" + key + "': not a number: '" + t + "'");
    return v;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t' || c == ';') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<double> to_doubles(const std::string& key, std::string_view text) {
    std::vector<double> v;
    for (const auto& tok : split_list(text)) v.push_back(to_double(key, tok));
    return v;
}

bool to_bool(const std::string& key, std::string_view text) {
    const std::string t = lower(trim(text));
    if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
    if (t == "false" || t == "no" || t == "0" || t == "off") return false;
    throw Error(ErrorCode::ParseError, "key '" + key + "': not a boolean: '" + t + "'");
}

// Reads one INI section, rejecting keys the caller did not consume.
class Section {
public:
    Section(const pt::ptree& root, const std::string& name) : name_(name) {
        if (const auto child = root.get_child_optional(name)) tree_ = *child;
    }

    std::optional<std::string> take(const std::string& key) {
        seen_.insert(key);
        if (const auto v = tree_.get_optional<std::string>(key)) return trim(*v);
        return std::nullopt;
    }
    std::optional<double> number(const std::string& key) {
        if (auto v = take(key)) return to_double(qualified(key), *v);
        return std::nullopt;
    }

    void finish() const {
        for (const auto& [k, v] : tree_) {
            if (!seen_.count(k)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + qualified(k) + "'");
        }
    }
    std::string qualified(const std::string& key) const { return name_ + "." + key; }

private:
    std::string name_;
    pt::ptree tree_;
    std::set<std::string> seen_;
};

double first_threshold_amplitude(const SystemParams& p) {
    if (!(p.chi1 > 0.0)) throw Error(ErrorCode::InvalidConfig, "threshold needs chi1 > 0");
    return p.gamma[0] * std::sqrt(p.gamma[1] * p.gamma[2]) / p.chi1;
}

}  // namespace

std::string_view to_string(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::Sweep: return "sweep";
        case ProtocolKind::Trace: return "trace";
        case ProtocolKind::Perturb: return "perturb";
        case ProtocolKind::EnsembleMoments: return "ensemble";
    }
    return "?";
}

std::string_view to_string(PerturbTarget t) {
    switch (t) {
        case PerturbTarget::RealParts: return "real";
        case PerturbTarget::ImagParts: return "imag";
        case PerturbTarget::Both: return "both";
    }
    return "?";
}

std::string_view to_string(DynamicsClass c) {
    switch (c) {
        case DynamicsClass::ConvergedFixedPoint: return "ConvergedFixedPoint";
        case DynamicsClass::PersistentOscillation: return "PersistentOscillation";
        case DynamicsClass::GrowingOscillation: return "GrowingOscillation";
        case DynamicsClass::DecayingOscillation: return "DecayingOscillation";
    }
    return "?";
}

// ---- scenarios -----------------------------------------------------------------

Scenario parse_scenario(const std::string& text, const std::string& name) {
    pt::ptree root;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorCode::ParseError, std::string("scenario syntax: ") + e.what());
    }
    for (const auto& [k, v] : root) {
        if (k != "params" && k != "integrator" && k != "protocol") {
            throw Error(ErrorCode::InvalidConfig, "unknown section or key '" + k + "'");
        }
    }

    Scenario sc;
    sc.name = name;
    SystemParams& p = sc.params;

    Section params(root, "params");
    if (auto t = params.take("topology")) {
        const auto v = lower(*t);
        if (v == "nondegenerate") p.topology = Topology::Nondegenerate;
        else if (v == "degenerate") p.topology = Topology::Degenerate;
        else throw Error(ErrorCode::ParseError, "params.topology: expected nondegenerate or degenerate");
    }
    const auto g = params.take("gamma");
    if (!g) throw Error(ErrorCode::InvalidConfig, "params.gamma is required");
    const auto gv = to_doubles("params.gamma", *g);
    if (gv.size() != static_cast<std::size_t>(p.mode_count()) && gv.size() != kModes) {
        throw Error(ErrorCode::ShapeMismatch, "params.gamma needs one rate per mode");
    }
    for (std::size_t i = 0; i < gv.size(); ++i) p.gamma[i] = gv[i];
    if (gv.size() < kModes) {
        for (std::size_t i = gv.size(); i < kModes; ++i) p.gamma[i] = gv[1];
    }
    if (auto c = params.number("chi")) p.chi1 = p.chi2 = *c;
    if (auto c = params.number("chi1")) p.chi1 = *c;
    if (auto c = params.number("chi2")) p.chi2 = *c;
    if (auto d = params.take("detuning")) {
        const auto dv = to_doubles("params.detuning", *d);
        if (dv.size() > kModes) throw Error(ErrorCode::ShapeMismatch, "params.detuning has too many entries");
        for (std::size_t i = 0; i < dv.size(); ++i) p.detuning[i] = dv[i];
    }
    const auto drive = params.take("drive");
    const auto eps2 = params.number("epsilon_sq");
    const auto ratio = params.number("drive_ratio");
    const double phase = params.number("drive_phase").value_or(0.0);
    if ((drive ? 1 : 0) + (eps2 ? 1 : 0) + (ratio ? 1 : 0) != 1) {
        throw Error(ErrorCode::InvalidConfig, "give exactly one of params.drive, params.epsilon_sq, params.drive_ratio");
    }
    if (drive) {
        const auto dv = to_doubles("params.drive", *drive);
        if (dv.empty() || dv.size() > 2) throw Error(ErrorCode::ParseError, "params.drive: expected 're' or 're, im'");
        p.drive = cplx(dv[0], dv.size() > 1 ? dv[1] : 0.0) * std::polar(1.0, phase);
    } else if (eps2) {
        if (*eps2 < 0.0) throw Error(ErrorCode::InvalidConfig, "params.epsilon_sq must be >= 0");
        p.drive = std::polar(std::sqrt(*eps2) * first_threshold_amplitude(p), phase);
    } else {
        p.drive = std::polar(*ratio * second_threshold_amplitude(p), phase);
    }
    params.finish();

    Section integ(root, "integrator");
    IntegratorConfig& c = sc.config;
    if (auto r = integ.take("representation")) {
        const auto v = lower(*r);
        if (v == "classical") c.representation = Representation::Classical;
        else if (v == "positive_p" || v == "positivep") c.representation = Representation::PositiveP;
        else if (v == "wigner") c.representation = Representation::Wigner;
        else throw Error(ErrorCode::ParseError, "integrator.representation: expected classical, positive_p or wigner");
    }
    c.scheme = c.representation == Representation::Classical ? Scheme::RK4 : Scheme::EulerMaruyama;
    if (auto s = integ.take("scheme")) {
        const auto v = lower(*s);
        if (v == "rk4") c.scheme = Scheme::RK4;
        else if (v == "em" || v == "euler_maruyama") c.scheme = Scheme::EulerMaruyama;
        else if (v == "heun") c.scheme = Scheme::Heun;
        else throw Error(ErrorCode::ParseError, "integrator.scheme: expected rk4, em or heun");
    }
    if (auto v = integ.number("dt")) c.dt = *v;
    if (auto v = integ.number("t_end")) c.t_end = *v;
    if (auto v = integ.number("record_stride")) c.record_stride = static_cast<int>(*v);
    if (auto v = integ.take("seed")) {
        std::uint64_t s = 0;
        const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), s);
        if (ec != std::errc() || ptr != v->data() + v->size()) throw Error(ErrorCode::ParseError, "integrator.seed: expected an unsigned integer");
        c.seed = s;
    }
    if (auto v = integ.take("initial")) {
        const auto k = lower(*v);
        if (k == "vacuum") c.initial.kind = InitialKind::Vacuum;
        else if (k == "vacuum_seed") c.initial.kind = InitialKind::VacuumSeed;
        else if (k == "steady_state") c.initial.kind = InitialKind::SteadyState;
        else if (k == "explicit") c.initial.kind = InitialKind::Explicit;
        else throw Error(ErrorCode::ParseError, "integrator.initial: expected vacuum, vacuum_seed, steady_state or explicit");
    }
    if (auto v = integ.number("seed_amplitude")) c.initial.seed_amplitude = *v;
    if (auto v = integ.take("randomize_phases")) c.initial.randomize_phases = to_bool("integrator.randomize_phases", *v);
    const auto re = integ.take("initial_re");
    const auto im = integ.take("initial_im");
    if (re || im) {
        const auto rv = re ? to_doubles("integrator.initial_re", *re) : std::vector<double>{};
        const auto iv = im ? to_doubles("integrator.initial_im", *im) : std::vector<double>{};
        const auto n = static_cast<std::size_t>(p.mode_count());
        if ((re && rv.size() != n) || (im && iv.size() != n)) {
            throw Error(ErrorCode::ShapeMismatch, "integrator.initial_re/initial_im need one value per mode");
        }
        std::vector<cplx> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = cplx(re ? rv[i] : 0.0, im ? iv[i] : 0.0);
        c.initial.state = PhaseSpaceState(Representation::Classical, p.topology, std::move(a));
        if (c.initial.kind != InitialKind::Explicit) throw Error(ErrorCode::InvalidConfig, "initial_re/initial_im need initial = explicit");
    }
    integ.finish();

    Section prot(root, "protocol");
    Protocol& pr = sc.protocol;
    if (auto v = prot.take("name")) sc.name = *v;
    if (auto v = prot.take("kind")) {
        const auto k = lower(*v);
        if (k == "sweep") pr.kind = ProtocolKind::Sweep;
        else if (k == "trace") pr.kind = ProtocolKind::Trace;
        else if (k == "perturb") pr.kind = ProtocolKind::Perturb;
        else if (k == "ensemble") pr.kind = ProtocolKind::EnsembleMoments;
        else throw Error(ErrorCode::ParseError, "protocol.kind: expected sweep, trace, perturb or ensemble");
    }
    if (auto v = prot.take("grid")) pr.grid = to_doubles("protocol.grid", *v);
    const auto g0 = prot.number("grid_start");
    const auto g1 = prot.number("grid_end");
    const auto gn = prot.number("grid_points");
    if (g0 || g1 || gn) {
        if (!(g0 && g1 && gn) || *gn < 2) throw Error(ErrorCode::InvalidConfig, "protocol.grid_start/grid_end/grid_points go together (points >= 2)");
        const int n = static_cast<int>(*gn);
        for (int i = 0; i < n; ++i) pr.grid.push_back(*g0 + (*g1 - *g0) * i / (n - 1));
    }
    if (auto v = prot.number("perturb_time")) pr.perturb_time = *v;
    if (auto v = prot.take("target")) {
        const auto t = lower(*v);
        if (t == "real") pr.target = PerturbTarget::RealParts;
        else if (t == "imag") pr.target = PerturbTarget::ImagParts;
        else if (t == "both") pr.target = PerturbTarget::Both;
        else throw Error(ErrorCode::ParseError, "protocol.target: expected real, imag or both");
    }
    if (auto v = prot.number("magnitude")) pr.magnitude = *v;
    if (auto v = prot.number("n_traj")) pr.n_traj = static_cast<int>(*v);
    if (auto v = prot.take("observables")) pr.observables = split_list(*v);
    if (auto v = prot.number("window_start")) pr.window_start = *v;
    if (auto v = prot.number("window_end")) pr.window_end = *v;
    if (auto v = prot.number("analysis_window")) pr.analysis_window = *v;
    prot.finish();

    validate_scenario(sc);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open scenario " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.stem().string());
}

void validate_scenario(const Scenario& s) {
    validate_params(s.params);
    if (s.protocol.kind != ProtocolKind::Sweep) validate_config(s.config, s.params);
    const auto& pr = s.protocol;
    switch (pr.kind) {
        case ProtocolKind::Sweep:
            if (pr.grid.empty()) throw Error(ErrorCode::InvalidConfig, "sweep protocol needs a grid");
            for (double e : pr.grid) {
                if (!(e >= 0.0)) throw Error(ErrorCode::InvalidConfig, "sweep grid values must be >= 0");
            }
            require_symmetric(s.params);
            break;
        case ProtocolKind::Perturb: {
            if (!(pr.perturb_time > 0.0) || !(pr.perturb_time < s.config.t_end)) {
                throw Error(ErrorCode::InvalidConfig, "perturb_time must lie inside (0, t_end)");
            }
            if (!std::isfinite(pr.magnitude)) throw Error(ErrorCode::InvalidConfig, "magnitude must be finite");
            const double rec = s.config.dt * s.config.record_stride;
            const double k = pr.perturb_time / rec;
            if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
                throw Error(ErrorCode::InvalidConfig, "perturb_time must be a multiple of dt * record_stride");
            }
            if (s.config.representation != Representation::Classical) {
                throw Error(ErrorCode::InvalidConfig, "perturbation runs use the classical equations");
            }
            break;
        }
        case ProtocolKind::EnsembleMoments:
            if (pr.n_traj < 1) throw Error(ErrorCode::InvalidConfig, "n_traj must be >= 1");
            if (pr.observables.empty()) throw Error(ErrorCode::InvalidConfig, "ensemble protocol needs observables");
            for (const auto& o : pr.observables) parse_observable(o);
            break;
        case ProtocolKind::Trace:
            if (pr.analysis_window < 0.0 || pr.analysis_window > s.config.t_end) {
                throw Error(ErrorCode::InvalidConfig, "analysis_window must lie within [0, t_end]");
            }
            break;
    }
}

// ---- phases --------------------------------------------------------------------

double wrap_phase(double x) {
    double y = std::remainder(x, kTwoPi);
    if (y <= -std::numbers::pi) y += kTwoPi;
    return y;
}

PhaseSeries phase_observables(const Trajectory& traj) {
    PhaseSeries ps;
    if (traj.states.empty()) return ps;
    if (traj.states.front().representation() == Representation::PositiveP) {
        throw Error(ErrorCode::InvalidConfig, "phase observables need a classical or Wigner trajectory");
    }
    const int n = traj.params.mode_count();
    const bool degenerate = traj.params.topology == Topology::Degenerate;
    const double phi_d = std::abs(traj.params.drive) > 0.0 ? std::arg(traj.params.drive) : 0.0;
    std::array<double, kModes> unwrapped{}, last{};
    std::array<bool, kModes> started{};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t r = 0; r < traj.states.size(); ++r) {
        const auto& s = traj.states[r];
        bool ok = true;
        for (int i = 0; i < n; ++i) {
            const cplx a = s.alpha(i);
            const auto ii = static_cast<std::size_t>(i);
            if (std::abs(a) <= kPhaseGuard) {
                ok = false;
                continue;
            }
            const double raw = std::arg(a);
            unwrapped[ii] = started[ii] ? unwrapped[ii] + std::remainder(raw - last[ii], kTwoPi) : raw;
            last[ii] = raw;
            started[ii] = true;
        }
        ps.times.push_back(traj.times[r]);
        ps.phases.push_back(unwrapped);
        ps.valid.push_back(ok);
        if (!ok) {
            ps.theta1.push_back(nan);
            ps.theta2.push_back(nan);
            continue;
        }
        const auto& u = unwrapped;
        ps.theta1.push_back(wrap_phase(u[1] + u[2] - phi_d));
        ps.theta2.push_back(wrap_phase(degenerate ? 2.0 * u[1] - u[2] : u[3] + u[4] - u[2]));
    }
    return ps;
}

// ---- fixed points and sweeps ---------------------------------------------------

FixedPointResult numeric_fixed_point(const SystemParams& p, double dt, double tol, double t_max, std::uint64_t seed) {
    validate_params(p);
    if (!(dt > 0.0) || !(t_max > dt)) throw Error(ErrorCode::InvalidConfig, "fixed-point search needs dt > 0 and t_max > dt");
    IntegratorConfig cfg;
    cfg.seed = seed;
    cfg.initial.kind = InitialKind::VacuumSeed;
    NoiseStream rng(seed, 0);
    FixedPointResult res;
    res.state = initial_state(p, cfg, rng);
    const auto steps = static_cast<std::int64_t>(std::llround(t_max / dt));
    const int dim = 2 * p.mode_count();
    const double growth_tol = 1e-8 * *std::max_element(p.gamma.begin(), p.gamma.end());
    auto jacobian_eigenvalues = [&] { return eigenvalues_dense(Matrix::from_real(dim, classical_jacobian(res.state, p))); };
    constexpr int check_every = 50;
    std::int64_t next_spectrum = 0;
    // A resting point with a growing direction (a saddle reached because some
    // amplitudes decayed to tiny values) is not accepted; integration goes on.
    for (std::int64_t k = 1; k <= steps; ++k) {
        res.state = step_rk4(res.state, p, dt);
        if (k % check_every != 0 && k != steps) continue;
        res.drift_norm = drift_norm(classical_drift(res.state, p));
        res.time = static_cast<double>(k) * dt;
        if (!(res.drift_norm < tol) || k < next_spectrum) continue;
        res.eigenvalues = jacobian_eigenvalues();
        double growth = -INFINITY;
        for (const auto& ev : res.eigenvalues) growth = std::max(growth, ev.real());
        if (growth <= growth_tol) {
            res.converged = true;
            return res;
        }
        next_spectrum = k + 20 * check_every;
    }
    res.eigenvalues = jacobian_eigenvalues();
    return res;
}

std::vector<SweepPoint> threshold_sweep(const SystemParams& tmpl, std::span<const double> eps_sq_grid, double dt, double t_max) {
    require_symmetric(tmpl);
    const auto rows = sweep_curve(tmpl, eps_sq_grid);
    const double n0cr = tmpl.gamma[1] * tmpl.gamma[1] / (tmpl.chi1 * tmpl.chi1);
    std::vector<SweepPoint> out;
    for (const auto& row : rows) {
        SweepPoint pt;
        pt.epsilon_sq = row.epsilon_sq;
        pt.regime = row.regime;
        pt.analytic = row.scaled;
        pt.marginal = row.regime == Regime::Marginal;
        const auto p = with_epsilon_sq(tmpl, row.epsilon_sq);
        const auto fp = numeric_fixed_point(p, dt, 1e-13, t_max);
        pt.converged = fp.converged;
        for (int i = 0; i < kModes; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            pt.numeric[ii] = std::norm(fp.state.alpha(i)) / n0cr;
            pt.max_gap = std::max(pt.max_gap, std::abs(pt.numeric[ii] - pt.analytic[ii]) / std::max(pt.analytic[ii], 1e-3));
        }
        out.push_back(pt);
    }
    return out;
}

// ---- dynamics classes ----------------------------------------------------------

DynamicsReport detect_dynamics_class(const Trajectory& traj, double window) {
    if (traj.states.size() < 4) throw Error(ErrorCode::InvalidConfig, "trajectory too short to classify");
    if (traj.states.front().representation() != Representation::Classical) {
        throw Error(ErrorCode::InvalidConfig, "dynamics classes are defined for classical trajectories");
    }
    const double t_end = traj.times.back();
    const double span = t_end - traj.times.front();
    if (window <= 0.0) window = 0.5 * span;
    if (window > span * (1.0 + 1e-12)) throw Error(ErrorCode::InvalidConfig, "window exceeds the trajectory span");
    const double t0 = t_end - window;
    std::size_t first = 0;
    while (first < traj.times.size() && traj.times[first] < t0 - 1e-9 * std::max(1.0, t_end)) ++first;
    const std::size_t count = traj.times.size() - first;
    if (count < 4) throw Error(ErrorCode::InvalidConfig, "window holds fewer than four records");
    const std::size_t mid = first + count / 2;
    const int n = traj.params.mode_count();

    DynamicsReport rep;
    rep.terminal_drift_norm = drift_norm(classical_drift(traj.states.back(), traj.params));
    double scale = 0.0;
    std::vector<double> lo(static_cast<std::size_t>(n), INFINITY), hi(static_cast<std::size_t>(n), -INFINITY);
    std::vector<double> lo_a = lo, hi_a = hi, lo_b = lo, hi_b = hi;
    for (std::size_t r = first; r < traj.times.size(); ++r) {
        for (int i = 0; i < n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const double v = std::norm(traj.states[r].alpha(i));
            lo[ii] = std::min(lo[ii], v);
            hi[ii] = std::max(hi[ii], v);
            auto& l = r < mid ? lo_a : lo_b;
            auto& h = r < mid ? hi_a : hi_b;
            l[ii] = std::min(l[ii], v);
            h[ii] = std::max(h[ii], v);
            scale = std::max(scale, v);
        }
    }
    double p2p_a = 0.0, p2p_b = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (hi[ii] > 1e-12 * scale) rep.variation = std::max(rep.variation, (hi[ii] - lo[ii]) / hi[ii]);
        p2p_a += hi_a[ii] - lo_a[ii];
        p2p_b += hi_b[ii] - lo_b[ii];
    }
    rep.envelope_ratio = p2p_a > 0.0 ? p2p_b / p2p_a : (p2p_b > 0.0 ? INFINITY : 1.0);
    if (rep.terminal_drift_norm < 1e-6 && rep.variation < 1e-6) {
        rep.cls = DynamicsClass::ConvergedFixedPoint;
    } else if (rep.envelope_ratio > 1.25) {
        rep.cls = DynamicsClass::GrowingOscillation;
    } else if (rep.envelope_ratio >= 0.8) {
        rep.cls = DynamicsClass::PersistentOscillation;
    } else {
        rep.cls = DynamicsClass::DecayingOscillation;
    }
    return rep;
}

double dominant_frequency(std::span<const double> values, double sample_dt) {
    const std::size_t n = values.size();
    if (n < 8 || !(sample_dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "need >= 8 samples and a positive sample spacing");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n - 1));
        in[i] = (values[i] - mean) * w;
    }
    fftw_execute(plan);
    std::vector<double> mag(n / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(out[k][0], out[k][1]);
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
    std::size_t best = 1;
    for (std::size_t k = 2; k < mag.size(); ++k) {
        if (mag[k] > mag[best]) best = k;
    }
    double shift = 0.0;
    if (best + 1 < mag.size()) {
        const double a = mag[best - 1], b = mag[best], c = mag[best + 1];
        const double den = a - 2.0 * b + c;
        if (den != 0.0) shift = 0.5 * (a - c) / den;
    }
    return (static_cast<double>(best) + shift) / (static_cast<double>(n) * sample_dt);
}

// ---- perturbations -------------------------------------------------------------

PhaseSpaceState apply_kick(const PhaseSpaceState& s, PerturbTarget target, double magnitude) {
    PhaseSpaceState out = s;
    for (auto& a : out.amplitudes()) {
        switch (target) {
            case PerturbTarget::Both: a += magnitude * a; break;
            case PerturbTarget::RealParts: a += magnitude * a.real(); break;
            case PerturbTarget::ImagParts: a += cplx(0.0, magnitude * a.imag()); break;
        }
    }
    return out;
}

PerturbationResult run_perturbation(const Scenario& sc) {
    validate_scenario(sc);
    if (sc.protocol.kind != ProtocolKind::Perturb) throw Error(ErrorCode::InvalidConfig, "not a perturbation scenario");
    const auto& p = sc.params;
    const auto& pr = sc.protocol;
    IntegratorConfig before = sc.config;
    before.t_end = pr.perturb_time;
    Trajectory a = simulate(p, before);
    const PhaseSpaceState pre = a.states.back();
    const double dn = drift_norm(classical_drift(pre, p));
    if (!(dn < 1e-6)) {
        throw Error(ErrorCode::NotAtSteadyState, "drift norm " + std::to_string(dn) + " at the perturbation time",
                    std::nullopt, pr.perturb_time);
    }
    IntegratorConfig after = sc.config;
    after.t_end = sc.config.t_end - pr.perturb_time;
    after.initial.kind = InitialKind::Explicit;
    after.initial.state = apply_kick(pre, pr.target, pr.magnitude);
    const Trajectory b = simulate(p, after);

    PerturbationResult res;
    Trajectory& tr = res.trajectory;
    tr = std::move(a);
    tr.config = sc.config;
    const double t_kick = tr.times.back();
    for (std::size_t r = 1; r < b.states.size(); ++r) {
        tr.times.push_back(t_kick + b.times[r]);
        tr.states.push_back(b.states[r]);
    }
    res.phases = phase_observables(tr);

    RecoveryReport& rep = res.report;
    const int n = p.mode_count();
    double amp_scale = 0.0;
    for (int i = 0; i < n; ++i) amp_scale = std::max(amp_scale, std::abs(pre.alpha(i)));
    auto within = [&](const PhaseSpaceState& s) {
        for (int i = 0; i < n; ++i) {
            const double ref = std::abs(pre.alpha(i));
            if (std::abs(std::abs(s.alpha(i)) - ref) > 1e-3 * std::max(ref, 1e-3 * amp_scale)) return false;
        }
        return true;
    };
    const std::size_t kick_index = tr.times.size() - (b.states.size() - 1) - 1;
    std::size_t settle = tr.states.size();
    for (std::size_t r = tr.states.size(); r-- > kick_index + 1;) {
        if (!within(tr.states[r])) break;
        settle = r;
    }
    rep.recovered = settle < tr.states.size();
    rep.recovery_time = rep.recovered ? tr.times[settle] - t_kick : -1.0;
    rep.theta1_final = res.phases.theta1.back();
    rep.theta2_final = res.phases.theta2.back();
    rep.thetas_recovered = std::abs(rep.theta1_final) < 1e-3 && std::abs(rep.theta2_final) < 1e-3;
    for (std::size_t r = kick_index + 1; r < tr.states.size(); ++r) {
        if (!res.phases.valid[r]) continue;
        rep.max_theta1_excursion = std::max(rep.max_theta1_excursion, std::abs(res.phases.theta1[r]));
        rep.max_theta2_excursion = std::max(rep.max_theta2_excursion, std::abs(res.phases.theta2[r]));
        for (int i = 0; i < n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const double d = std::abs(wrap_phase(res.phases.phases[r][ii] - res.phases.phases[kick_index][ii]));
            rep.max_phase_excursion[ii] = std::max(rep.max_phase_excursion[ii], d);
        }
    }
    for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        rep.phase_offsets[ii] = res.phases.phases.back()[ii] - res.phases.phases[kick_index][ii];
    }
    return res;
}

// ---- stochastic estimators -----------------------------------------------------

SlopeEstimate estimate_diffusion_slope(const EnsembleStats& st, std::size_t obs, double t0, double t1, double var_max) {
    const int alive = st.n_traj - st.n_discarded;
    if (alive < 100) {
        throw Error(ErrorCode::InsufficientEnsemble, "diffusion slope needs >= 100 trajectories, got " + std::to_string(alive));
    }
    if (st.series.empty() || obs >= st.names.size()) throw Error(ErrorCode::InvalidConfig, "ensemble has no such time series");
    std::vector<double> t, v;
    for (std::size_t r = 0; r < st.times.size(); ++r) {
        const double var = st.series[r][obs].var_re;
        if (st.times[r] < t0 || st.times[r] > t1 || !(var < var_max)) continue;
        t.push_back(st.times[r]);
        v.push_back(var);
    }
    SlopeEstimate e;
    e.points = static_cast<int>(t.size());
    if (t.size() < 3) throw Error(ErrorCode::InvalidConfig, "fewer than three points in the fit window");
    const double m = static_cast<double>(t.size());
    double tm = 0.0, vm = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        tm += t[i];
        vm += v[i];
    }
    tm /= m;
    vm /= m;
    double stt = 0.0, stv = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        stt += (t[i] - tm) * (t[i] - tm);
        stv += (t[i] - tm) * (v[i] - vm);
    }
    e.slope = stv / stt;
    e.intercept = vm - e.slope * tm;
    double ssr = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = v[i] - e.intercept - e.slope * t[i];
        ssr += d * d;
    }
    e.std_error = std::sqrt(ssr / (m - 2.0) / stt);
    return e;
}

std::vector<WeakBiasPoint> em_weak_bias(const SystemParams& p, const IntegratorConfig& cfg, int mode, int n_traj,
                                        int levels, int refine, double average_from, int threads) {
    validate_config(cfg, p);
    if (cfg.representation == Representation::Classical) throw Error(ErrorCode::InvalidConfig, "weak bias needs a stochastic representation");
    if (levels < 1 || levels > 16 || refine % (1 << levels) != 0) {
        throw Error(ErrorCode::InvalidConfig, "refine must be a multiple of 2^levels");
    }
    if (mode < 0 || mode >= p.mode_count()) throw Error(ErrorCode::InvalidConfig, "mode out of range", mode);
    if (n_traj < 2) throw Error(ErrorCode::InvalidConfig, "n_traj must be >= 2");
    if (average_from > cfg.t_end) throw Error(ErrorCode::InvalidConfig, "average_from lies beyond t_end");
    const Representation rep = cfg.representation;
    const std::int64_t coarse_steps = step_count(cfg);
    const double dt_f = cfg.dt / refine;
    const auto nlev = static_cast<std::size_t>(levels) + 1;  // the last batch is the reference
    std::vector<int> ratio(nlev, 1);
    for (int l = 0; l < levels; ++l) ratio[static_cast<std::size_t>(l)] = refine >> l;

    const int n = p.mode_count();
    const int nch = noise_channels(rep, p.topology);
    const double bound = divergence_bound(p);
    const int plus = rep == Representation::PositiveP ? n + mode : mode;
    std::int64_t first_avg = coarse_steps;
    if (average_from >= 0.0) first_avg = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(average_from / cfg.dt - 1e-9)));
    const double samples = static_cast<double>(coarse_steps - first_avg + 1);

    struct BlockSums {
        std::vector<double> sum, sum2;
        int used = 0;
    };
    const int blocks = (n_traj + simd::kLanes - 1) / simd::kLanes;
    std::vector<BlockSums> out_blocks(static_cast<std::size_t>(blocks));

    auto run_block = [&](int blk) {
        std::vector<LaneBatch> batches;
        batches.reserve(nlev);
        for (std::size_t l = 0; l < nlev; ++l) batches.emplace_back(p, rep);
        std::vector<NoiseStream> rng;
        std::array<bool, simd::kLanes> alive{};
        for (int lane = 0; lane < simd::kLanes; ++lane) {
            const int idx = blk * simd::kLanes + lane;
            rng.emplace_back(cfg.seed, static_cast<std::uint64_t>(idx));
            if (idx >= n_traj) continue;
            alive[static_cast<std::size_t>(lane)] = true;
            const auto s0 = initial_state(p, cfg, rng.back());
            for (auto& b : batches) b.set_state(lane, s0);
        }
        auto intensity = [&](const LaneBatch& b, int lane) {
            const cplx a = b.value(lane, mode);
            const cplx ap = rep == Representation::PositiveP ? b.value(lane, plus) : std::conj(a);
            return (a * ap).real();
        };
        std::vector<std::array<double, simd::kLanes>> avg(nlev);
        auto sample = [&]() {
            for (std::size_t l = 0; l < nlev; ++l) {
                for (int lane = 0; lane < simd::kLanes; ++lane) {
                    if (alive[static_cast<std::size_t>(lane)]) avg[l][static_cast<std::size_t>(lane)] += intensity(batches[l], lane);
                }
            }
        };
        if (first_avg == 0) sample();
        std::vector<simd::NoiseLanes> acc(nlev);
        std::vector<cplx> dw(static_cast<std::size_t>(nch));
        for (std::int64_t k = 0; k < coarse_steps * refine; ++k) {
            for (int lane = 0; lane < simd::kLanes; ++lane) {
                if (!alive[static_cast<std::size_t>(lane)]) continue;
                draw_increments(rng[static_cast<std::size_t>(lane)], rep, p.topology, dt_f, dw);
                for (auto& a : acc) {
                    for (int c = 0; c < nch; ++c) {
                        a.re[c * simd::kLanes + lane] += dw[static_cast<std::size_t>(c)].real();
                        a.im[c * simd::kLanes + lane] += dw[static_cast<std::size_t>(c)].imag();
                    }
                }
            }
            for (std::size_t l = 0; l < nlev; ++l) {
                if ((k + 1) % ratio[l] != 0) continue;
                batches[l].step(Scheme::EulerMaruyama, dt_f * ratio[l], acc[l]);
                acc[l] = simd::NoiseLanes{};
            }
            if ((k + 1) % refine == 0 && (k + 1) / refine >= first_avg) sample();
        }
        BlockSums& bs = out_blocks[static_cast<std::size_t>(blk)];
        bs.sum.assign(static_cast<std::size_t>(levels), 0.0);
        bs.sum2.assign(static_cast<std::size_t>(levels), 0.0);
        for (int lane = 0; lane < simd::kLanes; ++lane) {
            const auto ll = static_cast<std::size_t>(lane);
            if (!alive[ll]) continue;
            bool ok = true;
            for (const auto& b : batches) ok = ok && b.magnitude(lane) <= bound;
            for (const auto& a : avg) ok = ok && std::isfinite(a[ll]);
            if (!ok) continue;
            ++bs.used;
            for (int l = 0; l < levels; ++l) {
                const double d = (avg[static_cast<std::size_t>(l)][ll] - avg.back()[ll]) / samples;
                bs.sum[static_cast<std::size_t>(l)] += d;
                bs.sum2[static_cast<std::size_t>(l)] += d * d;
            }
        }
    };
    detail::parallel_chunks(blocks, threads, run_block);

    std::vector<double> sum(static_cast<std::size_t>(levels)), sum2(static_cast<std::size_t>(levels));
    int used = 0;
    for (const auto& bs : out_blocks) {
        used += bs.used;
        for (std::size_t l = 0; l < sum.size(); ++l) {
            sum[l] += bs.sum[l];
            sum2[l] += bs.sum2[l];
        }
    }
    if (used < 2) throw Error(ErrorCode::NonFinite, "every coupled trajectory diverged");
    std::vector<WeakBiasPoint> res;
    for (int l = 0; l < levels; ++l) {
        const auto ll = static_cast<std::size_t>(l);
        WeakBiasPoint w;
        w.dt = cfg.dt / (1 << l);
        w.bias = sum[ll] / used;
        const double var = std::max(0.0, (sum2[ll] - sum[ll] * sum[ll] / used) / (used - 1));
        w.std_error = std::sqrt(var / used);
        res.push_back(w);
    }
    return res;
}

}  // namespace opo
