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
#include <random>

#include "doctest.h"
#include "opo/analytic.hpp"
#include "opo/model.hpp"

using namespace opo;

namespace {

SystemParams fig3_params() {
    SystemParams p;
    p.gamma = {2.0, 0.14, 0.08, 0.14, 0.14};
    p.chi1 = p.chi2 = 1.0;
    p.drive = 0.8;
    return p;
}

SystemParams symmetric(double g0, double g, double chi, cplx e) {
    SystemParams p;
    p.gamma = {g0, g, g, g, g};
    p.chi1 = p.chi2 = chi;
    p.drive = e;
    return p;
}

PhaseSpaceState random_state(Representation rep, Topology topo, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    PhaseSpaceState s(rep, topo);
    for (auto& a : s.amplitudes()) a = {n(rng), n(rng)};
    return s;
}

}  // namespace

TEST_CASE("validate_params accepts physical parameters and names the offender") {
    CHECK_NOTHROW(validate_params(fig3_params()));

    auto p = fig3_params();
    p.gamma[0] = 0.0;
    try {
        validate_params(p);
        FAIL("expected NonPositiveLossRate");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPositiveLossRate);
        CHECK(e.index() == 0);
    }

    p = fig3_params();
    p.chi1 = -1.0;
    try {
        validate_params(p);
        FAIL("expected NegativeCoupling");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NegativeCoupling);
        CHECK(e.index() == 1);
    }

    p = fig3_params();
    p.topology = Topology::Degenerate;
    p.gamma[4] = -1.0;  // unused mode in the degenerate cascade
    CHECK_NOTHROW(validate_params(p));
}

TEST_CASE("to_dimensionless") {
    const auto d = to_dimensionless(symmetric(10.0, 1.0, 1.0, 10.0));
    CHECK(d.g == doctest::Approx(1.0));
    CHECK(d.gamma_r == doctest::Approx(10.0));
    CHECK(d.epsilon == doctest::Approx(1.0));
    CHECK(d.tau_scale == doctest::Approx(1.0));

    const auto q = symmetric(3.0, 0.5, 0.2, cplx(1.0, 2.0));
    const auto dq = to_dimensionless(q);
    const double thr1 = q.gamma[0] * q.gamma[1] / q.chi1;
    CHECK(dq.epsilon * dq.epsilon == doctest::Approx(std::norm(q.drive) / (thr1 * thr1)).epsilon(1e-14));

    auto bad = symmetric(10.0, 1.0, 1.0, 1.0);
    bad.gamma[2] = 2.0;
    try {
        to_dimensionless(bad);
        FAIL("expected AsymmetricParams");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AsymmetricParams);
    }
}

TEST_CASE("state shapes") {
    CHECK(PhaseSpaceState::expected_size(Representation::Classical, Topology::Nondegenerate) == 5);
    CHECK(PhaseSpaceState::expected_size(Representation::Wigner, Topology::Degenerate) == 3);
    CHECK(PhaseSpaceState::expected_size(Representation::PositiveP, Topology::Nondegenerate) == 10);
    CHECK(PhaseSpaceState::expected_size(Representation::PositiveP, Topology::Degenerate) == 6);
    CHECK_THROWS_AS(PhaseSpaceState(Representation::Classical, Topology::Nondegenerate,
                                    std::vector<cplx>(4)),
                    Error);

    PhaseSpaceState pp(Representation::PositiveP, Topology::Nondegenerate);
    CHECK_THROWS_AS(classical_drift(pp, fig3_params()), Error);
    PhaseSpaceState deg(Representation::Classical, Topology::Degenerate);
    CHECK_THROWS_AS(classical_drift(deg, fig3_params()), Error);
}

TEST_CASE("classical drift hand evaluations") {
    auto p = fig3_params();
    p.drive = 5.0;
    PhaseSpaceState s(Representation::Classical, Topology::Nondegenerate);
    auto d = classical_drift(s, p);
    CHECK(d[0] == cplx(5.0, 0.0));
    for (int i = 1; i < 5; ++i) CHECK(d[static_cast<std::size_t>(i)] == cplx(0.0, 0.0));

    const double e0 = 123.0;
    auto q = symmetric(10.0, 1.0, 0.1, e0);
    PhaseSpaceState t(Representation::Classical, Topology::Nondegenerate, {10.0, 1.0, 1.0, 0.0, 0.0});
    d = classical_drift(t, q);
    CHECK(d[0].real() == doctest::Approx(-100.0 + e0 - 0.1));
    CHECK(std::abs(d[1]) < 1e-15);
    CHECK(std::abs(d[2]) < 1e-15);
    CHECK(std::abs(d[3]) == 0.0);
    CHECK(std::abs(d[4]) == 0.0);
}

TEST_CASE("detuning adds -i Delta alpha") {
    auto p = fig3_params();
    p.chi1 = p.chi2 = 0.0;
    p.drive = 0.0;
    p.detuning = {0.0, 0.3, 0.0, 0.0, -0.2};
    PhaseSpaceState s(Representation::Classical, Topology::Nondegenerate, {1.0, 1.0, 1.0, 1.0, 1.0});
    const auto d = classical_drift(s, p);
    CHECK(d[1] == cplx(-0.14, -0.3));
    CHECK(d[4] == cplx(-0.14, 0.2));
}

TEST_CASE("positive-P drift is conjugate-symmetric on the classical subspace") {
    std::mt19937_64 rng(7);
    for (auto topo : {Topology::Nondegenerate, Topology::Degenerate}) {
        auto p = fig3_params();
        p.topology = topo;
        p.drive = cplx(0.7, -0.4);
        p.detuning = {0.1, -0.2, 0.3, 0.05, 0.0};
        for (int rep = 0; rep < 20; ++rep) {
            auto c = random_state(Representation::Classical, topo, rng);
            const int n = c.mode_count();
            std::vector<cplx> v(static_cast<std::size_t>(2 * n));
            for (int i = 0; i < n; ++i) {
                v[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)];
                v[static_cast<std::size_t>(n + i)] = std::conj(c[static_cast<std::size_t>(i)]);
            }
            PhaseSpaceState s(Representation::PositiveP, topo, v);
            const auto d = positive_p_drift(s, p);
            const auto dc = classical_drift(c, p);
            for (int i = 0; i < n; ++i) {
                CHECK(d[static_cast<std::size_t>(n + i)] == std::conj(d[static_cast<std::size_t>(i)]));
                CHECK(d[static_cast<std::size_t>(i)] == dc[static_cast<std::size_t>(i)]);
            }
        }
    }

    auto p = fig3_params();
    p.drive = 3.0;
    PhaseSpaceState z(Representation::PositiveP, Topology::Nondegenerate);
    const auto d = positive_p_drift(z, p);
    CHECK(d[0] == cplx(3.0, 0.0));
    CHECK(d[5] == cplx(3.0, 0.0));
    for (std::size_t i : {1u, 2u, 3u, 4u, 6u, 7u, 8u, 9u}) CHECK(d[i] == cplx(0.0, 0.0));
}

TEST_CASE("positive-P noise amplitudes") {
    auto p = fig3_params();
    PhaseSpaceState z(Representation::PositiveP, Topology::Nondegenerate);
    for (const auto& c : positive_p_noise_coefficients(z, p)) CHECK(c.amplitude == cplx(0.0, 0.0));

    PhaseSpaceState s(Representation::PositiveP, Topology::Nondegenerate);
    s[0] = 4.0;
    s[2] = -1.0;
    s[5] = 4.0;
    s[7] = -1.0;
    const auto c = positive_p_noise_coefficients(s, p);
    REQUIRE(c.size() == 4);
    CHECK(c[0].target_a == 1);
    CHECK(c[0].target_b == 2);
    CHECK(c[0].amplitude == cplx(2.0, 0.0));
    CHECK(c[1].target_a == 3);
    CHECK(c[1].amplitude == cplx(0.0, 1.0));
    CHECK(c[2].target_a == 6);
    CHECK(c[3].target_b == 9);

    p.topology = Topology::Degenerate;
    PhaseSpaceState dg(Representation::PositiveP, Topology::Degenerate);
    const auto cd = positive_p_noise_coefficients(dg, p);
    REQUIRE(cd.size() == 4);
    CHECK(cd[1].kind == NoiseKind::Self);
    CHECK(cd[3].target_a == 4);
}

TEST_CASE("principal square root agrees with std::sqrt") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (int k = 0; k < 1000; ++k) {
        const cplx z{n(rng), n(rng)};
        const cplx r = principal_sqrt(z);
        CHECK(std::abs(r - std::sqrt(z)) < 1e-14 * (1.0 + std::abs(r)));
        CHECK(r.real() >= 0.0);
    }
    CHECK(principal_sqrt(-1.0) == cplx(0.0, 1.0));
    CHECK(principal_sqrt(0.0) == cplx(0.0, 0.0));
}

TEST_CASE("Wigner evaluators") {
    auto p = fig3_params();
    p.drive = 3.0;
    PhaseSpaceState s(Representation::Wigner, Topology::Nondegenerate);
    const auto d = wigner_drift(s, p);
    CHECK(d[0] == cplx(3.0, 0.0));
    const auto w = wigner_noise_coefficients(p);
    REQUIRE(w.size() == 5);
    CHECK(w[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(w[2] == doctest::Approx(std::sqrt(0.08)));
    CHECK(w[4] == doctest::Approx(std::sqrt(0.14)));
}

TEST_CASE("drift vanishes at the closed-form fixed points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int k = 0; k < 300; ++k) {
        const double g = 0.1 + u(rng);
        const double g0 = g * (2.0 + 20.0 * u(rng));
        const double chi = 0.05 + 0.5 * u(rng);
        const double thr1 = g0 * g / chi;
        const double ratio = 3.0 * u(rng);
        const auto p = symmetric(g0, g, chi, std::polar(ratio * thr1, 6.28 * u(rng)));
        if (classify_regime(p) == Regime::Marginal) continue;
        const auto sol = steady_state(p);
        const auto s = steady_state_vector(sol, p);
        const auto d = classical_drift(s, p);
        double scale = std::abs(p.drive);
        CHECK(drift_norm(d) < 1e-10 * std::max(1.0, scale));
        ++checked;
    }
    CHECK(checked > 250);
}

TEST_CASE("degenerate chi2 terms cancel in the two-for-one photon balance") {
    std::mt19937_64 rng(5);
    SystemParams p;
    p.topology = Topology::Degenerate;
    p.gamma = {1.0, 0.3, 0.2, 1.0, 1.0};
    p.chi1 = 0.0;
    p.chi2 = 0.7;
    for (int k = 0; k < 50; ++k) {
        const auto s = random_state(Representation::Classical, Topology::Degenerate, rng);
        const auto d = classical_drift(s, p);
        const double dn1 = 2.0 * (std::conj(s[1]) * d[1]).real();
        const double dn2 = 2.0 * (std::conj(s[2]) * d[2]).real();
        const double loss = -2.0 * p.gamma[1] * std::norm(s[1]) / 2.0 - 2.0 * p.gamma[2] * std::norm(s[2]);
        CHECK(dn2 + 0.5 * dn1 == doctest::Approx(loss).epsilon(1e-12));
    }
}

TEST_CASE("classical Jacobian matches central differences") {
    std::mt19937_64 rng(13);
    for (auto topo : {Topology::Nondegenerate, Topology::Degenerate}) {
        auto p = fig3_params();
        p.topology = topo;
        p.detuning = {0.1, 0.2, -0.3, 0.4, 0.0};
        const auto s = random_state(Representation::Classical, topo, rng);
        const auto jac = classical_jacobian(s, p);
        const int n = s.mode_count();
        const double h = 1e-6;
        for (int j = 0; j < 2 * n; ++j) {
            auto sp = s, sm = s;
            const cplx step = j < n ? cplx(h, 0.0) : cplx(0.0, h);
            sp[static_cast<std::size_t>(j % n)] += step;
            sm[static_cast<std::size_t>(j % n)] -= step;
            const auto dp = classical_drift(sp, p);
            const auto dm = classical_drift(sm, p);
            for (int i = 0; i < n; ++i) {
                const cplx fd = (dp[static_cast<std::size_t>(i)] - dm[static_cast<std::size_t>(i)]) / (2.0 * h);
                CHECK(jac[static_cast<std::size_t>(i * 2 * n + j)] == doctest::Approx(fd.real()).epsilon(1e-6));
                CHECK(jac[static_cast<std::size_t>((n + i) * 2 * n + j)] == doctest::Approx(fd.imag()).epsilon(1e-6));
            }
        }
    }
}
