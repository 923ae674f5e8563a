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

#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "opo/analytic.hpp"
#include "opo/integrate.hpp"

using namespace opo;

namespace {

SystemParams symmetric(double g0, double g, double chi, cplx e) {
    SystemParams p;
    p.gamma = {g0, g, g, g, g};
    p.chi1 = p.chi2 = chi;
    p.drive = e;
    return p;
}

IntegratorConfig stochastic(Representation rep, Scheme scheme, double dt, double t_end) {
    IntegratorConfig c;
    c.representation = rep;
    c.scheme = scheme;
    c.dt = dt;
    c.t_end = t_end;
    return c;
}

PhaseSpaceState classical(std::vector<cplx> a) {
    return PhaseSpaceState(Representation::Classical, Topology::Nondegenerate, std::move(a));
}

}  // namespace

TEST_CASE("Wiener increments have the prescribed second moments") {
    const double dt = 0.01;
    const int n = 1000000;
    NoiseStream rng(5, 0);
    std::vector<cplx> dw(8);
    cplx pair{}, self{};
    double mod = 0.0;
    for (int k = 0; k < n; ++k) {
        draw_increments(rng, Representation::PositiveP, Topology::Nondegenerate, dt, dw);
        pair += dw[0] * dw[1];
        self += dw[0] * dw[0];
        mod += std::norm(dw[4]);
    }
    const double tol = 5.0 * dt / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(pair / double(n) - dt) < tol);
    CHECK(std::abs(self / double(n)) < tol);
    CHECK(std::abs(mod / n - dt) < tol);

    std::vector<cplx> dd(6);
    double xi2 = 0.0;
    cplx xi_pair{};
    for (int k = 0; k < n; ++k) {
        draw_increments(rng, Representation::PositiveP, Topology::Degenerate, dt, dd);
        CHECK(dd[4].imag() == 0.0);
        xi2 += dd[4].real() * dd[4].real();
        xi_pair += dd[2] * dd[3];
    }
    CHECK(std::abs(xi2 / n - dt) < 2.0 * tol);
    CHECK(std::abs(xi_pair / double(n) - dt) < tol);
}

TEST_CASE("correlated noise block pairs the conjugate partners") {
    NoiseStream rng(9, 3);
    const double dt = 0.5;
    cplx c12{}, c11{};
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const auto z = correlated_noise_block(rng, dt);
        c12 += z[0] * z[1];
        c11 += z[0] * z[2];
        CHECK(z[1] == std::conj(z[0]));
    }
    CHECK(std::abs(c12 / double(n) - 1.0 / dt) < 0.05);
    CHECK(std::abs(c11 / double(n)) < 0.05);
}

TEST_CASE("noise streams are reproducible and distinct per index") {
    NoiseStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != c.normal());
    CHECK(x != d.normal());
}

TEST_CASE("RK4 has fourth-order local error") {
    const auto p = symmetric(1.0, 0.3, 0.7, 1.1);
    const auto s0 = classical({{0.2, 0.1}, {0.4, -0.3}, {0.5, 0.2}, {-0.1, 0.3}, {0.2, 0.2}});
    auto err = [&](double h) {
        PhaseSpaceState fine = s0;
        for (int k = 0; k < 32; ++k) fine = step_rk4(fine, p, h / 32.0);
        const auto coarse = step_rk4(s0, p, h);
        double e = 0.0;
        for (std::size_t i = 0; i < s0.size(); ++i) e = std::max(e, std::abs(coarse[i] - fine[i]));
        return e;
    };
    const double ratio = err(0.2) / err(0.1);
    CHECK(ratio > 24.0);
    CHECK(ratio < 40.0);
}

TEST_CASE("classical RK4 settles at the closed-form steady state") {
    for (double eps2 : {0.5, 2.0}) {
        auto p = symmetric(2.0, 1.0, 1.0, 0.0);
        p = with_epsilon_sq(p, eps2);
        IntegratorConfig c;
        c.dt = 0.01;
        c.t_end = 200.0;
        c.record_stride = 20000;
        c.initial.seed_amplitude = 1e-3;
        const auto tr = simulate(p, c);
        const auto sol = steady_state(p);
        const auto& s = tr.states.back();
        for (int i = 0; i < kModes; ++i) {
            CHECK(std::norm(s.alpha(i)) == doctest::Approx(sol.intensities[static_cast<std::size_t>(i)]).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("equal loss rates keep n3 - n4 on an exponential") {
    const auto p = symmetric(1.0, 0.4, 1.0, 3.0);
    IntegratorConfig c;
    c.dt = 0.005;
    c.t_end = 5.0;
    c.record_stride = 100;
    c.initial.kind = InitialKind::Explicit;
    c.initial.state = classical({0.5, 0.3, {0.2, 0.1}, {0.6, 0.0}, {0.1, 0.4}});
    const auto tr = simulate(p, c);
    const double d0 = std::norm(tr.states[0].alpha(3)) - std::norm(tr.states[0].alpha(4));
    for (std::size_t r = 0; r < tr.times.size(); ++r) {
        const double d = std::norm(tr.states[r].alpha(3)) - std::norm(tr.states[r].alpha(4));
        CHECK(d == doctest::Approx(d0 * std::exp(-2.0 * 0.4 * tr.times[r])).epsilon(1e-8));
    }
}

TEST_CASE("rescaling rates and time leaves the classical trajectory invariant") {
    const auto p = symmetric(1.3, 0.2, 0.9, 0.7);
    auto q = p;
    const double k = 4.0;
    for (auto& g : q.gamma) g *= k;
    q.chi1 *= k;
    q.chi2 *= k;
    q.drive *= k;
    IntegratorConfig c;
    c.dt = 0.01;
    c.t_end = 10.0;
    c.record_stride = 1000;
    c.initial.kind = InitialKind::Explicit;
    c.initial.state = classical({0.1, 0.3, 0.2, {0.0, 0.1}, 0.05});
    auto cq = c;
    cq.dt /= k;
    cq.t_end /= k;
    const auto a = simulate(p, c).states.back();
    const auto b = simulate(q, cq).states.back();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("simulate records at the stride and reports non-finite states with a time") {
    const auto p = symmetric(1.0, 1.0, 1.0, 0.5);
    IntegratorConfig c;
    c.dt = 0.1;
    c.t_end = 1.0;
    c.record_stride = 3;
    const auto tr = simulate(p, c);
    REQUIRE(tr.times.size() == 4);
    CHECK(tr.times[3] == doctest::Approx(0.9));

    c.initial.kind = InitialKind::Explicit;
    c.initial.state = classical({1e200, 1e200, 1e200, 1e200, 1e200});
    try {
        simulate(p, c);
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFinite);
        CHECK(e.time().has_value());
    }
}

TEST_CASE("configurations that mix schemes and representations are rejected") {
    const auto p = symmetric(1.0, 1.0, 1.0, 0.5);
    auto c = stochastic(Representation::Classical, Scheme::Heun, 0.01, 1.0);
    CHECK_THROWS_AS(simulate(p, c), Error);
    c = stochastic(Representation::PositiveP, Scheme::RK4, 0.01, 1.0);
    CHECK_THROWS_AS(simulate(p, c), Error);
    c = stochastic(Representation::PositiveP, Scheme::Heun, -0.01, 1.0);
    CHECK_THROWS_AS(simulate(p, c), Error);
}

TEST_CASE("single-state stochastic steps keep the conjugate sector closed without noise") {
    const auto p = symmetric(1.0, 0.5, 0.8, {1.2, 0.4});
    std::vector<cplx> a = {{0.3, 0.1}, {0.2, -0.4}, {0.5, 0.1}, {0.1, 0.1}, {-0.2, 0.3}};
    std::vector<cplx> full = a;
    for (auto z : a) full.push_back(std::conj(z));
    PhaseSpaceState s(Representation::PositiveP, Topology::Nondegenerate, full);
    std::vector<cplx> zero(8);
    for (int k = 0; k < 100; ++k) s = step_heun(s, p, 0.01, zero);
    for (int i = 0; i < kModes; ++i) CHECK(std::abs(s.alpha_plus(i) - std::conj(s.alpha(i))) < 1e-14);

    // Without noise, EM is the explicit Euler step of the model drift.
    const auto em = step_em(s, p, 0.01, zero);
    const auto d = positive_p_drift(s, p);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(em[i] - (s[i] + 0.01 * d[i])) < 1e-14);
    CHECK_THROWS_AS(step_em(s, p, 0.01, std::vector<cplx>(3)), Error);
}

TEST_CASE("Wigner vacuum keeps half a quantum per mode") {
    const auto p = symmetric(1.0, 1.0, 1e-3, 0.0);
    auto c = stochastic(Representation::Wigner, Scheme::Heun, 0.01, 2.0);
    c.initial.kind = InitialKind::Vacuum;
    c.record_stride = 50;
    EnsembleSpec spec;
    spec.n_traj = 4000;
    for (const char* o : {"n0", "n1", "n4"}) spec.observables.push_back(parse_observable(o));
    const auto st = run_ensemble(p, c, spec);
    for (const auto& row : st.series) {
        for (const auto& m : row) CHECK(std::abs(m.mean.real() - 0.5) < 5.0 * m.se_re + 1e-12);
    }
}

TEST_CASE("an ensemble of one reproduces simulate") {
    const auto p = symmetric(2.0, 1.0, 1.0, 2.5);
    for (auto rep : {Representation::PositiveP, Representation::Wigner}) {
        auto c = stochastic(rep, Scheme::Heun, 0.01, 3.0);
        c.record_stride = 100;
        c.seed = 77;
        const auto tr = simulate(p, c);
        EnsembleSpec spec;
        spec.n_traj = 1;
        spec.observables = {parse_observable("a1"), parse_observable("n2")};
        const auto st = run_ensemble(p, c, spec);
        REQUIRE(st.series.size() == tr.states.size());
        for (std::size_t r = 0; r < tr.states.size(); ++r) {
            CHECK(st.series[r][0].mean == tr.states[r].alpha(1));
            CHECK(st.series[r][1].mean == tr.states[r].intensity(2));
        }
    }
}

TEST_CASE("ensembles are identical for any thread count") {
    const auto p = symmetric(2.0, 1.0, 1.0, 2.5);
    auto c = stochastic(Representation::PositiveP, Scheme::Heun, 0.01, 2.0);
    c.record_stride = 50;
    EnsembleSpec spec;
    spec.n_traj = 300;
    spec.observables = {parse_observable("n1"), parse_observable("phi1-phi2")};
    spec.threads = 1;
    const auto a = run_ensemble(p, c, spec);
    spec.threads = 3;
    const auto b = run_ensemble(p, c, spec);
    for (std::size_t r = 0; r < a.series.size(); ++r) {
        for (std::size_t o = 0; o < 2; ++o) {
            CHECK(a.series[r][o].mean == b.series[r][o].mean);
            CHECK(a.series[r][o].se_re == b.series[r][o].se_re);
        }
    }
}

TEST_CASE("standard errors shrink as one over the square root of the ensemble size") {
    const auto p = symmetric(2.0, 1.0, 1.0, 0.0);
    auto c = stochastic(Representation::Wigner, Scheme::EulerMaruyama, 0.05, 0.5);
    c.initial.kind = InitialKind::Vacuum;
    EnsembleSpec spec;
    spec.observables = {parse_observable("n1")};
    spec.n_traj = 2000;
    const auto a = run_ensemble(p, c, spec);
    spec.n_traj = 8000;
    const auto b = run_ensemble(p, c, spec);
    CHECK(a.window[0].se_re / b.window[0].se_re == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("unwrapped phase differences follow detuned rotation") {
    SystemParams p = symmetric(1.0, 1e-10, 1e-10, 0.0);
    p.detuning = {0.0, 1.0, -1.0, 0.0, 0.0};
    for (auto rep : {Representation::PositiveP, Representation::Wigner}) {
        auto c = stochastic(rep, Scheme::Heun, 0.01, 10.0);
        c.record_stride = 10;
        c.initial.kind = InitialKind::Explicit;
        c.initial.state = classical({0.0, 10.0, 10.0, 0.0, 0.0});
        EnsembleSpec spec;
        spec.n_traj = 4;
        spec.observables = {parse_observable("phi1-phi2")};
        const auto st = run_ensemble(p, c, spec);
        const double offset = st.series[0][0].mean.real();
        CHECK(std::abs(offset) < 0.2);
        for (std::size_t r = 0; r < st.times.size(); ++r) {
            CHECK(st.series[r][0].mean.real() - offset == doctest::Approx(-2.0 * st.times[r]).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("window averages are per-trajectory time averages") {
    SystemParams p = symmetric(1.0, 0.5, 1e-12, 0.0);
    auto c = stochastic(Representation::PositiveP, Scheme::Heun, 0.01, 2.0);
    c.record_stride = 10;
    c.initial.kind = InitialKind::Explicit;
    c.initial.state = classical({0.0, 1.0, 0.0, 0.0, 0.0});
    EnsembleSpec spec;
    spec.n_traj = 2;
    spec.observables = {parse_observable("n1")};
    spec.window_start = 1.0;
    spec.window_end = 2.0;
    const auto st = run_ensemble(p, c, spec);
    double avg = 0.0;
    int count = 0;
    for (std::size_t r = 0; r < st.times.size(); ++r) {
        if (st.times[r] >= 1.0 - 1e-12) {
            avg += st.series[r][0].mean.real();
            ++count;
        }
    }
    CHECK(count == 11);
    CHECK(st.window[0].mean.real() == doctest::Approx(avg / count).epsilon(1e-12));
    CHECK(st.window[0].mean.real() == doctest::Approx(0.0).epsilon(1.0).scale(0.2));
}

TEST_CASE("divergent trajectories are counted, and a fully divergent ensemble fails") {
    const auto p = symmetric(1.0, 1.0, 1.0, 0.0);
    auto c = stochastic(Representation::PositiveP, Scheme::EulerMaruyama, 0.01, 0.1);
    c.initial.kind = InitialKind::Explicit;
    c.initial.state = classical({1e9, 0.0, 0.0, 0.0, 0.0});
    EnsembleSpec spec;
    spec.n_traj = 5;
    spec.observables = {parse_observable("n0")};
    try {
        run_ensemble(p, c, spec);
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFinite);
    }
}

TEST_CASE("observable parsing") {
    auto o = parse_observable("n3");
    CHECK(o.factors == std::vector<std::pair<int, bool>>{{3, true}, {3, false}});
    o = parse_observable("a1*a3*a4");
    CHECK(o.factors == std::vector<std::pair<int, bool>>{{1, false}, {3, false}, {4, false}});
    o = parse_observable("a2+*a2");
    CHECK(o.factors == std::vector<std::pair<int, bool>>{{2, true}, {2, false}});
    o = parse_observable("phi3-phi4");
    CHECK(o.kind == Observable::Kind::PhaseDifference);
    CHECK(o.mode_a == 3);
    CHECK(o.mode_b == 4);
    for (const char* bad : {"", "n", "n7", "a", "b1", "a1**a2", "phi1+phi2", "phi1-"}) {
        CHECK_THROWS_AS(parse_observable(bad), Error);
    }

    SystemParams d = symmetric(1.0, 1.0, 1.0, 0.0);
    d.topology = Topology::Degenerate;
    auto c = stochastic(Representation::PositiveP, Scheme::Heun, 0.01, 0.1);
    EnsembleSpec spec;
    spec.observables = {parse_observable("n3")};
    CHECK_THROWS_AS(run_ensemble(d, c, spec), Error);
}

TEST_CASE("vacuum seeds are minute with random phases") {
    const auto p = symmetric(1.0, 0.5, 2.0, 1.0);
    IntegratorConfig c;
    NoiseStream rng(1, 0);
    const auto s = initial_state(p, c, rng);
    CHECK(s.alpha(0) == cplx{});
    for (int i = 1; i < kModes; ++i) CHECK(std::abs(s.alpha(i)) == doctest::Approx(1e-6 * 0.5 / 2.0));
    CHECK(std::arg(s.alpha(1)) != std::arg(s.alpha(2)));
}

TEST_CASE("pure decay matches the exponential with fifth-order local error") {
    SystemParams p = symmetric(1.0, 0.7, 0.0, 0.0);
    const auto s0 = classical({{1.0, 0.5}, 0.3, 0.2, 0.1, {0.0, 0.4}});
    auto err = [&](double h) {
        const auto s = step_rk4(s0, p, h);
        double e = 0.0;
        for (int i = 0; i < kModes; ++i) {
            const double g = p.gamma[static_cast<std::size_t>(i)];
            e = std::max(e, std::abs(s.alpha(i) - std::exp(-g * h) * s0.alpha(i)));
        }
        return e;
    };
    CHECK(err(0.2) / err(0.1) == doctest::Approx(32.0).epsilon(0.1));
}

TEST_CASE("steady-state input with zero noise is unchanged") {
    auto p = symmetric(2.0, 1.0, 1.0, 0.0);
    p = with_epsilon_sq(p, 1.5);
    const auto ss = steady_state_vector(steady_state(p), p);
    CHECK(drift_norm(classical_drift(ss, p)) < 1e-14);
    const auto r = step_rk4(ss, p, 0.01);
    for (std::size_t i = 0; i < ss.size(); ++i) CHECK(std::abs(r[i] - ss[i]) < 1e-15);

    std::vector<cplx> w(5);
    PhaseSpaceState ws(Representation::Wigner, Topology::Nondegenerate,
                       std::vector<cplx>(ss.amplitudes().begin(), ss.amplitudes().end()));
    const auto h = step_heun(ws, p, 0.01, w);
    for (std::size_t i = 0; i < ss.size(); ++i) CHECK(std::abs(h[i] - ws[i]) < 1e-15);
}

TEST_CASE("conjugated Wigner noise and initial state give the conjugate trajectory") {
    const auto p = symmetric(1.0, 0.5, 0.8, 1.7);
    NoiseStream rng(3, 1);
    PhaseSpaceState a(Representation::Wigner, Topology::Nondegenerate,
                      {{0.3, 0.1}, {0.2, -0.4}, {0.5, 0.1}, {0.1, 0.1}, {-0.2, 0.3}});
    PhaseSpaceState b = a;
    for (auto& z : b.amplitudes()) z = std::conj(z);
    std::vector<cplx> dw(5), dwc(5);
    for (int k = 0; k < 500; ++k) {
        draw_increments(rng, Representation::Wigner, Topology::Nondegenerate, 0.01, dw);
        for (std::size_t i = 0; i < 5; ++i) dwc[i] = std::conj(dw[i]);
        a = step_heun(a, p, 0.01, dw);
        b = step_heun(b, p, 0.01, dwc);
    }
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(b[i] - std::conj(a[i])) < 1e-12);
}

TEST_CASE("chi terms cancel in the n1 - n2 - n3 flux balance") {
    auto p = symmetric(1.0, 0.1, 1.0, 0.0);
    p = with_epsilon_sq(p, 3.0);
    REQUIRE(steady_state(p).regime == Regime::SecondAbove);
    IntegratorConfig c;
    c.dt = 0.01;
    c.t_end = 600.0;
    c.record_stride = 60000;
    c.initial.kind = InitialKind::SteadyState;
    c.initial.state.reset();
    auto s = simulate(p, c).states.back();
    auto flux = [&](const PhaseSpaceState& x) {
        const auto d = classical_drift(x, p);
        double r = 0.0;
        for (int i : {1, 2, 3}) {
            const double sign = i == 1 ? 1.0 : -1.0;
            r += sign * 2.0 * (std::conj(x.alpha(i)) * d[static_cast<std::size_t>(i)]).real();
        }
        return r;
    };
    CHECK(std::abs(flux(s)) < 1e-10);

    // Away from the fixed point only the loss terms remain.
    const auto x = classical({{0.4, 0.2}, {0.3, -0.1}, {0.2, 0.5}, {-0.3, 0.1}, {0.6, 0.2}});
    const double loss = -2.0 * 0.1 * (std::norm(x.alpha(1)) - std::norm(x.alpha(2)) - std::norm(x.alpha(3)));
    CHECK(flux(x) == doctest::Approx(loss).epsilon(1e-12));
}
