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
#include "opo/stability.hpp"

using namespace opo;

namespace {

SystemParams symmetric(double g0, double g, double chi, cplx e) {
    SystemParams p;
    p.gamma = {g0, g, g, g, g};
    p.chi1 = p.chi2 = chi;
    p.drive = e;
    return p;
}

const LinearSubsystem& named(const std::vector<LinearSubsystem>& v, std::string_view name) {
    for (const auto& s : v)
        if (s.name == name) return s;
    FAIL("missing subsystem");
    return v.front();
}

}  // namespace

TEST_CASE("below-threshold spectrum is -1 +- eps, doubled") {
    for (double eps = 0.0; eps <= 2.0 + 1e-12; eps += 0.05) {
        const auto s = below_threshold_matrix(eps);
        CHECK(s.matrix.size() == 4);
        const auto eig = eigenvalues_dense(s.matrix);
        std::vector<double> re;
        for (auto z : eig) {
            CHECK(std::abs(z.imag()) < 1e-10);
            re.push_back(z.real());
        }
        std::sort(re.begin(), re.end());
        CHECK(std::abs(re[0] - (-1.0 - eps)) < 1e-10);
        CHECK(std::abs(re[1] - (-1.0 - eps)) < 1e-10);
        CHECK(std::abs(re[2] - (-1.0 + eps)) < 1e-10);
        CHECK(std::abs(re[3] - (-1.0 + eps)) < 1e-10);
    }
    CHECK(verdict_of(eigenvalues_dense(below_threshold_matrix(0.99).matrix)) == Verdict::Stable);
    CHECK(verdict_of(eigenvalues_dense(below_threshold_matrix(1.0).matrix)) == Verdict::Marginal);
    CHECK(verdict_of(eigenvalues_dense(below_threshold_matrix(1.01).matrix)) == Verdict::Unstable);
}

TEST_CASE("regime-2 subsystems") {
    const auto p = symmetric(10.0, 1.0, 0.1, 105.0);
    const auto sol = steady_state(p);
    const auto subs = regime2_subsystems(sol, p);
    REQUIRE(subs.size() == 4);
    const auto& dm = named(subs, "regime-2 intensity-difference");
    CHECK(dm.matrix(0, 0) == cplx(-2.0));

    const auto eig = eigenvalues_dense(named(subs, "regime-2 tilde-alpha").matrix);
    const double k = 0.1 * std::sqrt(50.0);
    int hi = 0, lo = 0;
    for (auto z : eig) {
        if (std::abs(z - cplx(-1.0 + k)) < 1e-10) ++hi;
        if (std::abs(z - cplx(-1.0 - k)) < 1e-10) ++lo;
    }
    CHECK(hi == 2);
    CHECK(lo == 2);
    CHECK(-1.0 + k == doctest::Approx(-0.2929).epsilon(1e-3));

    for (const auto& s : subs) {
        const auto e = eigenvalues_dense(s.matrix);
        CHECK(verdict_of(e) == Verdict::Stable);
        cplx sum{};
        for (auto z : e) sum += z;
        CHECK(std::abs(sum - s.matrix.trace()) <= 1e-8 * std::max(1.0, std::abs(s.matrix.trace())));
    }

    CHECK_THROWS_AS(regime2_subsystems(steady_state(symmetric(10.0, 1.0, 0.1, 50.0)), p), Error);
}

TEST_CASE("regime-2 tilde-alpha block has a zero eigenvalue at the second threshold") {
    const auto tmpl = symmetric(10.0, 1.0, 0.1, 1.0);
    const auto p = with_epsilon_sq(tmpl, 1.21);
    const auto sol = steady_state_branch(p, Regime::FirstAbove);
    const auto eig = eigenvalues_dense(named(regime2_subsystems(sol, p), "regime-2 tilde-alpha").matrix);
    CHECK(std::abs(max_real_part(eig)) < 1e-12);
}

TEST_CASE("regime-3 subsystems") {
    const auto p = symmetric(10.0, 1.0, 0.1, 220.0);
    const auto sol = steady_state(p);
    std::vector<std::string> warn;
    const auto subs = regime3_subsystems(sol, p, {}, &warn);
    CHECK(warn.empty());
    REQUIRE(subs.size() == 3);
    CHECK(named(subs, "regime-3 intensity-difference").matrix(0, 0) == cplx(-2.0));

    const auto& th = named(subs, "regime-3 theta");
    const double tr = th.matrix.trace().real();
    const double det = (th.matrix(0, 0) * th.matrix(1, 1) - th.matrix(0, 1) * th.matrix(1, 0)).real();
    CHECK(tr == doctest::Approx(-4.5));
    CHECK(det == doctest::Approx(7.7));
    CHECK(verdict_of(eigenvalues_dense(th.matrix)) == Verdict::Stable);

    const auto& in = named(subs, "regime-3 intensity");
    CHECK(routh_hurwitz_cubic(characteristic_cubic(in.matrix)));
    CHECK(verdict_of(eigenvalues_dense(in.matrix)) == Verdict::Stable);

    // Small gamma0/gamma warns, or throws when strict.
    const auto q = with_epsilon_sq(symmetric(2.0, 1.0, 0.1, 1.0), 3.0);
    const auto sq = steady_state(q);
    warn.clear();
    regime3_subsystems(sq, q, {}, &warn);
    CHECK(warn.size() == 1);
    CHECK_THROWS_AS(regime3_subsystems(sq, q, {5.0, true}), Error);
}

TEST_CASE("theta block is stable whenever n1 = n2") {
    const auto p = with_epsilon_sq(symmetric(10.0, 1.0, 0.1, 1.0), 1.21 * (1.0 + 1e-6));
    auto sol = steady_state(p);
    sol.intensities[1] = sol.intensities[2];
    sol.intensities[3] = sol.intensities[4] = 0.0;
    const auto subs = regime3_subsystems(sol, p);
    CHECK(max_real_part(eigenvalues_dense(named(subs, "regime-3 theta").matrix)) < 0.0);
}

TEST_CASE("Routh-Hurwitz examples") {
    CHECK(routh_hurwitz_cubic({1.0, 3.0, 3.0, 1.0}));
    CHECK_FALSE(routh_hurwitz_cubic({1.0, 2.0, -1.0, -2.0}));
    CHECK_FALSE(routh_hurwitz_cubic({1.0, 1.0, 1.0, 2.0}));
    CHECK(routh_hurwitz_cubic({2.0, 6.0, 6.0, 2.0}));
}

TEST_CASE("Routh-Hurwitz agrees with companion roots on random cubics") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    int compared = 0;
    for (int k = 0; k < 1000; ++k) {
        const std::array<double, 4> c{1.0, u(rng), u(rng), u(rng)};
        const double coeffs[] = {c[1], c[2], c[3]};
        const double m = max_real_part(eigenvalues_dense(companion_matrix(coeffs)));
        if (std::abs(m) < 1e-9) continue;
        CHECK(routh_hurwitz_cubic(c) == (m < 0.0));
        ++compared;
    }
    CHECK(compared > 990);
}

TEST_CASE("characteristic cubic matches the eigenvalues") {
    std::mt19937_64 rng(37);
    std::normal_distribution<double> n;
    for (int k = 0; k < 50; ++k) {
        Matrix m(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = n(rng);
        const auto c = characteristic_cubic(m);
        for (auto z : eigenvalues_dense(m)) {
            const cplx v = ((z + c[1]) * z + c[2]) * z + c[3];
            CHECK(std::abs(v) < 1e-9 * (1.0 + std::pow(std::abs(z), 3)));
        }
    }
}

TEST_CASE("phase diffusion rates") {
    const auto p2 = symmetric(10.0, 1.0, 0.1, 105.0);
    const auto r2 = phase_diffusion_rates(steady_state(p2), p2);
    REQUIRE(r2.size() == 1);
    CHECK(r2[0].rate == doctest::Approx(0.02));

    const auto p3 = symmetric(10.0, 1.0, 0.1, 220.0);
    const auto r3 = phase_diffusion_rates(steady_state(p3), p3);
    REQUIRE(r3.size() == 2);
    CHECK(r3[0].rate == doctest::Approx(0.01));
    CHECK(r3[1].rate == doctest::Approx(1.0 / 300.0));

    double prev = 1e300;
    for (double e = 110.0; e < 1e4; e *= 1.5) {
        const auto p = symmetric(10.0, 1.0, 0.1, e);
        if (classify_regime(p) != Regime::FirstAbove) break;
        const double r = phase_diffusion_rates(steady_state(p), p)[0].rate;
        CHECK(r < prev);
        prev = r;
    }
    const auto p1 = symmetric(10.0, 1.0, 0.1, 50.0);
    CHECK_THROWS_AS(phase_diffusion_rates(steady_state(p1), p1), Error);
}

TEST_CASE("linearizing the full classical equations exposes the phase-diffusion zero mode") {
    const auto p = symmetric(10.0, 1.0, 0.1, 105.0);
    const auto s = steady_state_vector(steady_state(p), p);
    const auto jac = classical_jacobian(s, p);
    const auto eig = eigenvalues_dense(Matrix::from_real(10, jac));
    double smallest = 1e300;
    for (auto z : eig) smallest = std::min(smallest, std::abs(z.real()));
    CHECK(smallest < 1e-8);
}

TEST_CASE("analyze_stability dispatches on the regime") {
    const auto tmpl = symmetric(10.0, 1.0, 0.1, 1.0);
    const auto below = analyze_stability(with_epsilon_sq(tmpl, 0.25));
    CHECK(below.regime == Regime::BelowThreshold);
    CHECK(below.overall_stable);
    CHECK(max_real_part(below.subsystems[0].eigenvalues) == doctest::Approx(-0.5));

    const auto r3 = analyze_stability(with_epsilon_sq(tmpl, 1.5));
    CHECK(r3.regime == Regime::SecondAbove);
    CHECK(r3.overall_stable);
    CHECK(r3.diffusing_phases.size() == 2);
}
