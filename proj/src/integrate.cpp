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

#include "opo/integrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "opo/analytic.hpp"
#include "parallel.hpp"

namespace opo {

namespace {

constexpr int kChunkBlocks = 16;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

bool is_stochastic(Scheme s) { return s != Scheme::RK4; }

simd::LaneParams lane_params(const SystemParams& p) {
    simd::LaneParams lp;
    for (int i = 0; i < kModes; ++i) {
        lp.gamma[i] = p.gamma[static_cast<std::size_t>(i)];
        lp.detuning[i] = p.detuning[static_cast<std::size_t>(i)];
    }
    lp.chi1 = p.chi1;
    lp.chi2 = p.chi2;
    lp.drive_re = p.drive.real();
    lp.drive_im = p.drive.imag();
    lp.degenerate = p.topology == Topology::Degenerate;
    return lp;
}

// Neumaier-compensated accumulator.
struct Sum {
    double s = 0.0;
    double c = 0.0;
    void add(double x) {
        const double t = s + x;
        if (std::abs(s) >= std::abs(x)) {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    double value() const { return s + c; }
};

struct Moments {
    Sum re, im, re2, im2;
    void add(cplx v) {
        re.add(v.real());
        im.add(v.imag());
        re2.add(v.real() * v.real());
        im2.add(v.imag() * v.imag());
    }
    void merge(const Moments& o) {
        re.add(o.re.value());
        im.add(o.im.value());
        re2.add(o.re2.value());
        im2.add(o.im2.value());
    }
    MomentEstimate finish(int n) const {
        MomentEstimate m;
        if (n <= 0) return m;
        const double dn = n;
        m.mean = {re.value() / dn, im.value() / dn};
        if (n > 1) {
            const double vr = std::max(0.0, (re2.value() - re.value() * re.value() / dn) / (dn - 1.0));
            const double vi = std::max(0.0, (im2.value() - im.value() * im.value() / dn) / (dn - 1.0));
            m.var_re = vr;
            m.se_re = std::sqrt(vr / dn);
            m.se_im = std::sqrt(vi / dn);
        }
        return m;
    }
};

}  // namespace

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::RK4: return "rk4";
        case Scheme::EulerMaruyama: return "em";
        case Scheme::Heun: return "heun";
    }
    return "?";
}

void validate_config(const IntegratorConfig& cfg, const SystemParams& p) {
    validate_params(p);
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw Error(ErrorCode::InvalidConfig, "dt must be positive");
    if (!(cfg.t_end >= cfg.dt)) throw Error(ErrorCode::InvalidConfig, "t_end must be >= dt");
    if (cfg.record_stride < 1) throw Error(ErrorCode::InvalidConfig, "record_stride must be >= 1");
    const bool classical = cfg.representation == Representation::Classical;
    if (classical && is_stochastic(cfg.scheme)) {
        throw Error(ErrorCode::InvalidConfig, "stochastic schemes need a positive-P or Wigner representation");
    }
    if (!classical && !is_stochastic(cfg.scheme)) {
        throw Error(ErrorCode::InvalidConfig, "RK4 integrates the classical representation only");
    }
    if (cfg.initial.kind == InitialKind::Explicit && !cfg.initial.state) {
        throw Error(ErrorCode::InvalidConfig, "explicit initial condition without a state");
    }
}

std::int64_t step_count(const IntegratorConfig& cfg) {
    return static_cast<std::int64_t>(std::llround(cfg.t_end / cfg.dt));
}

// ---- noise ---------------------------------------------------------------------

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
}

int noise_channels(Representation rep, Topology topo) {
    const int n = topo == Topology::Nondegenerate ? kModes : kDegenerateModes;
    switch (rep) {
        case Representation::Classical: return 0;
        case Representation::Wigner: return n;
        case Representation::PositiveP: return topo == Topology::Nondegenerate ? 8 : 6;
    }
    return 0;
}

void draw_increments(NoiseStream& rng, Representation rep, Topology topo, double dt,
                     std::span<cplx> dw) {
    const int nch = noise_channels(rep, topo);
    if (static_cast<int>(dw.size()) != nch) throw Error(ErrorCode::ShapeMismatch, "increment buffer size");
    const double s = std::sqrt(0.5 * dt);
    if (rep == Representation::PositiveP) {
        const int pairs = topo == Topology::Nondegenerate ? 4 : 2;
        for (int k = 0; k < pairs; ++k) {
            const double u = rng.normal();
            const double v = rng.normal();
            dw[static_cast<std::size_t>(2 * k)] = {u * s, v * s};
            dw[static_cast<std::size_t>(2 * k + 1)] = {u * s, -v * s};
        }
        if (topo == Topology::Degenerate) {
            const double r = std::sqrt(dt);
            dw[4] = rng.normal() * r;
            dw[5] = rng.normal() * r;
        }
        return;
    }
    for (int k = 0; k < nch; ++k) {
        const double u = rng.normal();
        const double v = rng.normal();
        dw[static_cast<std::size_t>(k)] = {u * s, v * s};
    }
}

std::array<cplx, 8> correlated_noise_block(NoiseStream& rng, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt must be positive");
    std::array<cplx, 8> dw;
    draw_increments(rng, Representation::PositiveP, Topology::Nondegenerate, dt, dw);
    // Channel order (W1, W2, W1+, W2+, W3, W4, W3+, W4+) already matches.
    for (auto& z : dw) z /= dt;
    return dw;
}

// ---- single-state steps --------------------------------------------------------

PhaseSpaceState step_rk4(const PhaseSpaceState& s, const SystemParams& p, double dt) {
    const auto n = s.size();
    const auto k1 = classical_drift(s, p);
    PhaseSpaceState t = s;
    for (std::size_t i = 0; i < n; ++i) t[i] = s[i] + 0.5 * dt * k1[i];
    const auto k2 = classical_drift(t, p);
    for (std::size_t i = 0; i < n; ++i) t[i] = s[i] + 0.5 * dt * k2[i];
    const auto k3 = classical_drift(t, p);
    for (std::size_t i = 0; i < n; ++i) t[i] = s[i] + dt * k3[i];
    const auto k4 = classical_drift(t, p);
    PhaseSpaceState out = s;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!std::isfinite(out[i].real()) || !std::isfinite(out[i].imag())) {
            throw Error(ErrorCode::NonFinite, "RK4 step produced a non-finite amplitude",
                        static_cast<int>(i));
        }
    }
    return out;
}

namespace {

PhaseSpaceState single_lane_step(const PhaseSpaceState& s, const SystemParams& p, double dt,
                                 std::span<const cplx> dw, Scheme scheme) {
    if (s.representation() == Representation::Classical) {
        throw Error(ErrorCode::InvalidConfig, "stochastic steps need a positive-P or Wigner state");
    }
    LaneBatch b(p, s.representation());
    if (static_cast<int>(dw.size()) != b.channels()) {
        throw Error(ErrorCode::ShapeMismatch, "increment count does not match the noise channels");
    }
    b.set_state(0, s);
    simd::NoiseLanes w;
    for (int c = 0; c < b.channels(); ++c) {
        w.re[c * simd::kLanes] = dw[static_cast<std::size_t>(c)].real();
        w.im[c * simd::kLanes] = dw[static_cast<std::size_t>(c)].imag();
    }
    b.step(scheme, dt, w);
    auto out = b.state(0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(out[i].real()) || !std::isfinite(out[i].imag())) {
            throw Error(ErrorCode::NonFinite, "stochastic step produced a non-finite amplitude",
                        static_cast<int>(i));
        }
    }
    return out;
}

}  // namespace

PhaseSpaceState step_em(const PhaseSpaceState& s, const SystemParams& p, double dt,
                        std::span<const cplx> dw) {
    return single_lane_step(s, p, dt, dw, Scheme::EulerMaruyama);
}

PhaseSpaceState step_heun(const PhaseSpaceState& s, const SystemParams& p, double dt,
                          std::span<const cplx> dw) {
    return single_lane_step(s, p, dt, dw, Scheme::Heun);
}

// ---- LaneBatch -----------------------------------------------------------------

LaneBatch::LaneBatch(const SystemParams& p, Representation rep)
    : params_(validate_params(p)), rep_(rep), lp_(lane_params(p)) {
    const int n = p.mode_count();
    nvar_ = rep == Representation::PositiveP ? 2 * n : n;
    nch_ = noise_channels(rep, p.topology);
    if (rep == Representation::Wigner) wigner_amp_ = wigner_noise_coefficients(p);
}

void LaneBatch::set_state(int lane, const PhaseSpaceState& s) {
    if (s.representation() != rep_ || static_cast<int>(s.size()) != nvar_) {
        throw Error(ErrorCode::ShapeMismatch, "state does not match the batch representation");
    }
    for (int v = 0; v < nvar_; ++v) {
        x_.re[v * simd::kLanes + lane] = s[static_cast<std::size_t>(v)].real();
        x_.im[v * simd::kLanes + lane] = s[static_cast<std::size_t>(v)].imag();
    }
}

PhaseSpaceState LaneBatch::state(int lane) const {
    std::vector<cplx> a(static_cast<std::size_t>(nvar_));
    for (int v = 0; v < nvar_; ++v) a[static_cast<std::size_t>(v)] = value(lane, v);
    return PhaseSpaceState(rep_, params_.topology, std::move(a));
}

cplx LaneBatch::value(int lane, int var) const {
    return {x_.re[var * simd::kLanes + lane], x_.im[var * simd::kLanes + lane]};
}

double LaneBatch::magnitude(int lane) const {
    double m = 0.0;
    for (int v = 0; v < nvar_; ++v) {
        const double a = std::abs(x_.re[v * simd::kLanes + lane]) + std::abs(x_.im[v * simd::kLanes + lane]);
        if (!std::isfinite(a)) return std::numeric_limits<double>::infinity();
        m = std::max(m, a);
    }
    return m;
}

void LaneBatch::clear_lane(int lane) {
    for (int v = 0; v < nvar_; ++v) {
        x_.re[v * simd::kLanes + lane] = 0.0;
        x_.im[v * simd::kLanes + lane] = 0.0;
    }
}

void LaneBatch::drift(const simd::Lanes& x, simd::Lanes& out) const {
    if (rep_ == Representation::PositiveP) {
        simd::kernels().drift_positive_p(lp_, x, out);
    } else {
        simd::kernels().drift_conjugate(lp_, x, out);
    }
}

void LaneBatch::noise(const simd::Lanes& x, const simd::NoiseLanes& dw, simd::Lanes& out) const {
    switch (rep_) {
        case Representation::PositiveP:
            simd::kernels().noise_positive_p(lp_, x, dw, out);
            break;
        case Representation::Wigner:
            for (int v = 0; v < nvar_; ++v) {
                const double a = wigner_amp_[static_cast<std::size_t>(v)];
                for (int l = 0; l < simd::kLanes; ++l) {
                    out.re[v * simd::kLanes + l] = a * dw.re[v * simd::kLanes + l];
                    out.im[v * simd::kLanes + l] = a * dw.im[v * simd::kLanes + l];
                }
            }
            break;
        case Representation::Classical:
            for (int k = 0; k < nvar_ * simd::kLanes; ++k) out.re[k] = out.im[k] = 0.0;
            break;
    }
}

void LaneBatch::step(Scheme scheme, double dt, const simd::NoiseLanes& dw) {
    const int m = nvar_ * simd::kLanes;
    simd::Lanes k1, b1;
    drift(x_, k1);
    noise(x_, dw, b1);
    if (scheme == Scheme::EulerMaruyama) {
        for (int k = 0; k < m; ++k) {
            x_.re[k] = x_.re[k] + k1.re[k] * dt + b1.re[k];
            x_.im[k] = x_.im[k] + k1.im[k] * dt + b1.im[k];
        }
        return;
    }
    if (scheme != Scheme::Heun) throw Error(ErrorCode::InvalidConfig, "LaneBatch steps stochastic schemes only");
    simd::Lanes xp, k2, b2;
    for (int k = 0; k < m; ++k) {
        xp.re[k] = x_.re[k] + k1.re[k] * dt + b1.re[k];
        xp.im[k] = x_.im[k] + k1.im[k] * dt + b1.im[k];
    }
    drift(xp, k2);
    noise(xp, dw, b2);
    for (int k = 0; k < m; ++k) {
        x_.re[k] = x_.re[k] + 0.5 * (k1.re[k] + k2.re[k]) * dt + 0.5 * (b1.re[k] + b2.re[k]);
        x_.im[k] = x_.im[k] + 0.5 * (k1.im[k] + k2.im[k]) * dt + 0.5 * (b1.im[k] + b2.im[k]);
    }
}

// ---- trajectories --------------------------------------------------------------

double divergence_bound(const SystemParams& p) {
    double g = 0.0;
    for (int i = 0; i < p.mode_count(); ++i) g = std::max(g, p.gamma[static_cast<std::size_t>(i)]);
    const double chi = std::max(p.chi1, p.chi2);
    return chi > 0.0 ? 1e6 * g / chi : std::numeric_limits<double>::infinity();
}

PhaseSpaceState initial_state(const SystemParams& p, const IntegratorConfig& cfg, NoiseStream& rng) {
    const int n = p.mode_count();
    const auto& ic = cfg.initial;
    const Representation rep = cfg.representation;
    std::vector<cplx> a(static_cast<std::size_t>(n));
    switch (ic.kind) {
        case InitialKind::Vacuum:
            break;
        case InitialKind::VacuumSeed: {
            const double rho = ic.seed_amplitude > 0.0 ? ic.seed_amplitude
                               : p.chi1 > 0.0      ? 1e-6 * p.gamma[1] / p.chi1
                                                   : 1e-6;
            for (int i = 1; i < n; ++i) {
                const double ph = ic.randomize_phases ? 2.0 * std::numbers::pi * rng.uniform() : 0.0;
                a[static_cast<std::size_t>(i)] = std::polar(rho, ph);
            }
            break;
        }
        case InitialKind::Explicit: {
            const auto& s = *ic.state;
            if (s.topology() != p.topology) throw Error(ErrorCode::ShapeMismatch, "initial state topology");
            if (s.representation() == rep && rep == Representation::PositiveP) return s;
            for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = s.alpha(i);
            break;
        }
        case InitialKind::SteadyState: {
            const auto s = steady_state_vector(steady_state(p), p);
            for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = s.alpha(i);
            break;
        }
    }
    if (rep == Representation::Wigner && ic.kind != InitialKind::VacuumSeed) {
        for (auto& z : a) {
            const double u = rng.normal();
            const double v = rng.normal();
            z += cplx(0.5 * u, 0.5 * v);
        }
    }
    if (rep == Representation::PositiveP) {
        std::vector<cplx> full(a);
        for (const auto& z : a) full.push_back(std::conj(z));
        return PhaseSpaceState(rep, p.topology, std::move(full));
    }
    return PhaseSpaceState(rep, p.topology, std::move(a));
}

Trajectory simulate(const SystemParams& p, const IntegratorConfig& cfg) {
    validate_config(cfg, p);
    Trajectory tr;
    tr.params = p;
    tr.config = cfg;
    const std::int64_t steps = step_count(cfg);
    tr.times.reserve(static_cast<std::size_t>(steps / cfg.record_stride + 1));
    tr.states.reserve(tr.times.capacity());
    NoiseStream rng(cfg.seed, 0);
    PhaseSpaceState s = initial_state(p, cfg, rng);
    tr.times.push_back(0.0);
    tr.states.push_back(s);

    if (cfg.representation == Representation::Classical) {
        for (std::int64_t k = 1; k <= steps; ++k) {
            try {
                s = step_rk4(s, p, cfg.dt);
            } catch (const Error& e) {
                throw Error(ErrorCode::NonFinite, e.what(), e.index(), static_cast<double>(k) * cfg.dt);
            }
            if (k % cfg.record_stride == 0) {
                tr.times.push_back(static_cast<double>(k) * cfg.dt);
                tr.states.push_back(s);
            }
        }
        return tr;
    }

    LaneBatch batch(p, cfg.representation);
    batch.set_state(0, s);
    const double bound = divergence_bound(p);
    std::vector<cplx> dw(static_cast<std::size_t>(batch.channels()));
    simd::NoiseLanes w;
    for (std::int64_t k = 1; k <= steps; ++k) {
        draw_increments(rng, cfg.representation, p.topology, cfg.dt, dw);
        for (int c = 0; c < batch.channels(); ++c) {
            w.re[c * simd::kLanes] = dw[static_cast<std::size_t>(c)].real();
            w.im[c * simd::kLanes] = dw[static_cast<std::size_t>(c)].imag();
        }
        batch.step(cfg.scheme, cfg.dt, w);
        if (!(batch.magnitude(0) <= bound)) {
            throw Error(ErrorCode::NonFinite, "trajectory diverged", std::nullopt,
                        static_cast<double>(k) * cfg.dt);
        }
        if (k % cfg.record_stride == 0) {
            tr.times.push_back(static_cast<double>(k) * cfg.dt);
            tr.states.push_back(batch.state(0));
        }
    }
    return tr;
}

// ---- observables ---------------------------------------------------------------

Observable parse_observable(std::string_view text) {
    Observable o;
    o.name = std::string(text);
    auto bad = [&]() { return Error(ErrorCode::ParseError, "cannot parse observable '" + o.name + "'"); };
    auto mode_of = [&](std::string_view t) {
        if (t.size() != 1 || t[0] < '0' || t[0] > '4') throw bad();
        return t[0] - '0';
    };
    if (text.starts_with("phi")) {
        const auto dash = text.find('-');
        if (dash == std::string_view::npos || !text.substr(dash + 1).starts_with("phi")) throw bad();
        o.kind = Observable::Kind::PhaseDifference;
        o.mode_a = mode_of(text.substr(3, dash - 3));
        o.mode_b = mode_of(text.substr(dash + 4));
        return o;
    }
    if (text.size() == 2 && text[0] == 'n') {
        const int m = mode_of(text.substr(1));
        o.factors = {{m, true}, {m, false}};
        return o;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto star = text.find('*', pos);
        auto tok = text.substr(pos, star == std::string_view::npos ? std::string_view::npos : star - pos);
        if (tok.size() < 2 || tok[0] != 'a') throw bad();
        const bool plus = tok.back() == '+';
        if (plus) tok.remove_suffix(1);
        o.factors.emplace_back(mode_of(tok.substr(1)), plus);
        if (star == std::string_view::npos) break;
        pos = star + 1;
    }
    if (o.factors.empty()) throw bad();
    return o;
}

cplx evaluate_moment(const Observable& o, const PhaseSpaceState& s) {
    cplx v{1.0, 0.0};
    for (const auto& [m, plus] : o.factors) {
        if (m >= s.mode_count()) throw Error(ErrorCode::InvalidConfig, "observable mode out of range", m);
        v *= plus ? s.alpha_plus(m) : s.alpha(m);
    }
    return v;
}

// ---- ensembles -----------------------------------------------------------------

namespace {

struct ChunkResult {
    int alive = 0;
    std::vector<double> discard_times;
    std::vector<Moments> series;  // [record * n_obs + o]
    std::vector<Moments> window;
};

// Value of a phase-difference observable before unwrapping.
double raw_phase(const Observable& o, const LaneBatch& b, int lane, Representation rep, int n) {
    const cplx a = b.value(lane, o.mode_a);
    const cplx c = b.value(lane, o.mode_b);
    if (rep == Representation::PositiveP) {
        const cplx ap = b.value(lane, n + o.mode_a);
        const cplx cp = b.value(lane, n + o.mode_b);
        return std::arg(a * cp * std::conj(ap * c));
    }
    return std::arg(a * std::conj(c));
}

}  // namespace

EnsembleStats run_ensemble(const SystemParams& p, const IntegratorConfig& cfg, const EnsembleSpec& spec) {
    validate_config(cfg, p);
    if (!is_stochastic(cfg.scheme)) throw Error(ErrorCode::InvalidConfig, "ensembles need a stochastic scheme");
    if (spec.n_traj < 1) throw Error(ErrorCode::InvalidConfig, "n_traj must be >= 1");
    const int n = p.mode_count();
    for (const auto& o : spec.observables) {
        const bool ok = o.kind == Observable::Kind::PhaseDifference
                            ? o.mode_a < n && o.mode_b < n
                            : std::all_of(o.factors.begin(), o.factors.end(), [n](const auto& f) { return f.first < n; });
        if (!ok) throw Error(ErrorCode::InvalidConfig, "observable '" + o.name + "' refers to a missing mode");
    }

    const std::int64_t steps = step_count(cfg);
    const int records = static_cast<int>(steps / cfg.record_stride) + 1;
    const int n_obs = static_cast<int>(spec.observables.size());
    const double t_final = static_cast<double>((records - 1) * static_cast<std::int64_t>(cfg.record_stride)) * cfg.dt;
    const double ws = spec.window_start < 0.0 ? t_final : spec.window_start;
    const double we = spec.window_end < 0.0 ? t_final : spec.window_end;
    std::vector<double> times(static_cast<std::size_t>(records));
    std::vector<char> in_window(static_cast<std::size_t>(records));
    int window_count = 0;
    for (int r = 0; r < records; ++r) {
        const double t = static_cast<double>(static_cast<std::int64_t>(r) * cfg.record_stride) * cfg.dt;
        times[static_cast<std::size_t>(r)] = t;
        in_window[static_cast<std::size_t>(r)] = t >= ws - 1e-9 * cfg.dt && t <= we + 1e-9 * cfg.dt;
        window_count += in_window[static_cast<std::size_t>(r)];
    }
    if (window_count == 0) throw Error(ErrorCode::InvalidConfig, "averaging window contains no records");

    const int blocks = (spec.n_traj + simd::kLanes - 1) / simd::kLanes;
    const int chunks = (blocks + kChunkBlocks - 1) / kChunkBlocks;
    std::vector<ChunkResult> results(static_cast<std::size_t>(chunks));
    const double bound = divergence_bound(p);
    const Representation rep = cfg.representation;

    auto run_chunk = [&](int chunk) {
        ChunkResult& res = results[static_cast<std::size_t>(chunk)];
        res.series.resize(spec.time_series ? static_cast<std::size_t>(records * n_obs) : 0);
        res.window.resize(static_cast<std::size_t>(n_obs));
        LaneBatch batch(p, rep);
        const int nch = batch.channels();
        std::vector<cplx> dw(static_cast<std::size_t>(nch));
        std::vector<cplx> values(static_cast<std::size_t>(records * n_obs * simd::kLanes));
        const int b0 = chunk * kChunkBlocks;
        const int b1 = std::min(blocks, b0 + kChunkBlocks);
        for (int blk = b0; blk < b1; ++blk) {
            std::vector<NoiseStream> rng;
            bool alive[simd::kLanes] = {};
            double died[simd::kLanes] = {};
            std::vector<double> last_raw(static_cast<std::size_t>(simd::kLanes * n_obs));
            std::vector<double> unwrapped(last_raw.size());
            rng.reserve(simd::kLanes);
            for (int l = 0; l < simd::kLanes; ++l) {
                const int idx = blk * simd::kLanes + l;
                rng.emplace_back(cfg.seed, static_cast<std::uint64_t>(idx));
                if (idx < spec.n_traj) {
                    alive[l] = true;
                    batch.set_state(l, initial_state(p, cfg, rng.back()));
                } else {
                    batch.clear_lane(l);
                }
            }
            auto record = [&](int r) {
                for (int l = 0; l < simd::kLanes; ++l) {
                    if (!alive[l]) continue;
                    for (int o = 0; o < n_obs; ++o) {
                        const Observable& ob = spec.observables[static_cast<std::size_t>(o)];
                        cplx v;
                        if (ob.kind == Observable::Kind::PhaseDifference) {
                            const double raw = raw_phase(ob, batch, l, rep, n);
                            double& u = unwrapped[static_cast<std::size_t>(l * n_obs + o)];
                            double& last = last_raw[static_cast<std::size_t>(l * n_obs + o)];
                            if (r == 0) {
                                u = raw;
                            } else {
                                u += std::remainder(raw - last, 2.0 * std::numbers::pi);
                            }
                            last = raw;
                            v = rep == Representation::PositiveP ? 0.5 * u : u;
                        } else {
                            v = 1.0;
                            for (const auto& [m, plus] : ob.factors) {
                                if (rep == Representation::PositiveP) {
                                    v *= batch.value(l, plus ? n + m : m);
                                } else {
                                    const cplx a = batch.value(l, m);
                                    v *= plus ? std::conj(a) : a;
                                }
                            }
                        }
                        values[static_cast<std::size_t>((r * n_obs + o) * simd::kLanes + l)] = v;
                    }
                }
            };
            record(0);
            simd::NoiseLanes w;
            for (std::int64_t k = 1; k <= steps; ++k) {
                for (int l = 0; l < simd::kLanes; ++l) {
                    if (!alive[l]) continue;
                    draw_increments(rng[static_cast<std::size_t>(l)], rep, p.topology, cfg.dt, dw);
                    for (int c = 0; c < nch; ++c) {
                        w.re[c * simd::kLanes + l] = dw[static_cast<std::size_t>(c)].real();
                        w.im[c * simd::kLanes + l] = dw[static_cast<std::size_t>(c)].imag();
                    }
                }
                batch.step(cfg.scheme, cfg.dt, w);
                for (int l = 0; l < simd::kLanes; ++l) {
                    if (alive[l] && !(batch.magnitude(l) <= bound)) {
                        alive[l] = false;
                        died[l] = static_cast<double>(k) * cfg.dt;
                        batch.clear_lane(l);
                    }
                }
                if (k % cfg.record_stride == 0) record(static_cast<int>(k / cfg.record_stride));
            }
            for (int l = 0; l < simd::kLanes; ++l) {
                const int idx = blk * simd::kLanes + l;
                if (idx >= spec.n_traj) continue;
                if (!alive[l]) {
                    res.discard_times.push_back(died[l]);
                    continue;
                }
                ++res.alive;
                for (int o = 0; o < n_obs; ++o) {
                    Moments win;
                    cplx acc{};
                    for (int r = 0; r < records; ++r) {
                        const cplx v = values[static_cast<std::size_t>((r * n_obs + o) * simd::kLanes + l)];
                        if (spec.time_series) res.series[static_cast<std::size_t>(r * n_obs + o)].add(v);
                        if (in_window[static_cast<std::size_t>(r)]) acc += v;
                    }
                    res.window[static_cast<std::size_t>(o)].add(acc / static_cast<double>(window_count));
                }
            }
        }
    };

    detail::parallel_chunks(chunks, spec.threads, run_chunk);

    EnsembleStats st;
    st.n_traj = spec.n_traj;
    for (const auto& o : spec.observables) st.names.push_back(o.name);
    std::vector<Moments> series(spec.time_series ? static_cast<std::size_t>(records * n_obs) : 0);
    std::vector<Moments> window(static_cast<std::size_t>(n_obs));
    int alive = 0;
    for (const auto& r : results) {
        alive += r.alive;
        st.discard_times.insert(st.discard_times.end(), r.discard_times.begin(), r.discard_times.end());
        for (std::size_t k = 0; k < series.size(); ++k) series[k].merge(r.series[k]);
        for (std::size_t k = 0; k < window.size(); ++k) window[k].merge(r.window[k]);
    }
    st.n_discarded = spec.n_traj - alive;
    if (alive == 0) {
        throw Error(ErrorCode::NonFinite, "every trajectory diverged (" + std::to_string(st.n_discarded) + ")");
    }
    for (const auto& m : window) st.window.push_back(m.finish(alive));
    if (spec.time_series) {
        st.times = times;
        st.series.resize(static_cast<std::size_t>(records));
        for (int r = 0; r < records; ++r) {
            for (int o = 0; o < n_obs; ++o) {
                st.series[static_cast<std::size_t>(r)].push_back(series[static_cast<std::size_t>(r * n_obs + o)].finish(alive));
            }
        }
    }
    return st;
}

}  // namespace opo
