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
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "opo/model.hpp"
#include "opo/simd/kernels.hpp"

using namespace opo;
using simd::kLanes;

namespace {

SystemParams random_params(std::mt19937_64& rng, Topology topo) {
    std::uniform_real_distribution<double> u(0.05, 2.0);
    SystemParams p;
    p.topology = topo;
    for (auto& g : p.gamma) g = u(rng);
    for (auto& d : p.detuning) d = u(rng) - 1.0;
    p.chi1 = u(rng);
    p.chi2 = u(rng);
    p.drive = cplx(u(rng), u(rng) - 1.0);
    return p;
}

simd::LaneParams to_lanes(const SystemParams& p) {
    simd::LaneParams lp;
    for (int i = 0; i < 5; ++i) {
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

template <class T>
void fill(T& x, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> n(0.0, scale);
    for (auto& v : x.re) v = n(rng);
    for (auto& v : x.im) v = n(rng);
}

bool bitwise_equal(const simd::Lanes& a, const simd::Lanes& b, int nvar) {
    const auto bytes = sizeof(double) * static_cast<std::size_t>(nvar * kLanes);
    return std::memcmp(a.re, b.re, bytes) == 0 && std::memcmp(a.im, b.im, bytes) == 0;
}

PhaseSpaceState lane_state(const simd::Lanes& x, int lane, Representation rep, Topology topo) {
    PhaseSpaceState s(rep, topo);
    for (std::size_t v = 0; v < s.size(); ++v) {
        s[v] = {x.re[v * kLanes + static_cast<std::size_t>(lane)], x.im[v * kLanes + static_cast<std::size_t>(lane)]};
    }
    return s;
}

void check_close(cplx a, cplx b) {
    const double tol = 1e-13 * (1.0 + std::abs(b));
    CHECK(std::abs(a - b) <= tol);
}

}  // namespace

TEST_CASE("scalar drift kernels agree with the model evaluators") {
    std::mt19937_64 rng(11);
    const auto& k = simd::scalar_kernels();
    for (auto topo : {Topology::Nondegenerate, Topology::Degenerate}) {
        for (int trial = 0; trial < 200; ++trial) {
            const auto p = random_params(rng, topo);
            const auto lp = to_lanes(p);
            simd::Lanes x, out;
            fill(x, rng, 1.5);
            k.drift_positive_p(lp, x, out);
            for (int l = 0; l < kLanes; ++l) {
                const auto s = lane_state(x, l, Representation::PositiveP, topo);
                const auto ref = positive_p_drift(s, p);
                const auto got = lane_state(out, l, Representation::PositiveP, topo);
                for (std::size_t v = 0; v < ref.size(); ++v) check_close(got[v], ref[v]);
            }
            k.drift_conjugate(lp, x, out);
            for (int l = 0; l < kLanes; ++l) {
                const auto s = lane_state(x, l, Representation::Classical, topo);
                const auto ref = classical_drift(s, p);
                const auto got = lane_state(out, l, Representation::Classical, topo);
                for (std::size_t v = 0; v < ref.size(); ++v) check_close(got[v], ref[v]);
            }
        }
    }
}

TEST_CASE("scalar noise kernel applies the model noise coefficients to the channel layout") {
    std::mt19937_64 rng(12);
    const auto& k = simd::scalar_kernels();
    for (auto topo : {Topology::Nondegenerate, Topology::Degenerate}) {
        // Channel index of the first member of each model entry, in model order.
        const std::vector<int> channel = topo == Topology::Nondegenerate ? std::vector<int>{0, 4, 2, 6}
                                                                         : std::vector<int>{0, 4, 2, 5};
        for (int trial = 0; trial < 200; ++trial) {
            const auto p = random_params(rng, topo);
            simd::Lanes x, out;
            simd::NoiseLanes w;
            fill(x, rng, 1.5);
            fill(w, rng, 0.1);
            k.noise_positive_p(to_lanes(p), x, w, out);
            for (int l = 0; l < kLanes; ++l) {
                const auto s = lane_state(x, l, Representation::PositiveP, topo);
                std::vector<cplx> ref(s.size());
                const auto coeffs = positive_p_noise_coefficients(s, p);
                REQUIRE(coeffs.size() == channel.size());
                for (std::size_t e = 0; e < coeffs.size(); ++e) {
                    const int c = channel[e];
                    const cplx w0(w.re[c * kLanes + l], w.im[c * kLanes + l]);
                    if (coeffs[e].kind == NoiseKind::Pair) {
                        const cplx w1(w.re[(c + 1) * kLanes + l], w.im[(c + 1) * kLanes + l]);
                        ref[static_cast<std::size_t>(coeffs[e].target_a)] += coeffs[e].amplitude * w0;
                        ref[static_cast<std::size_t>(coeffs[e].target_b)] += coeffs[e].amplitude * w1;
                    } else {
                        ref[static_cast<std::size_t>(coeffs[e].target_a)] += coeffs[e].amplitude * w0;
                    }
                }
                const auto got = lane_state(out, l, Representation::PositiveP, topo);
                for (std::size_t v = 0; v < ref.size(); ++v) check_close(got[v], ref[v]);
            }
        }
    }
}

TEST_CASE("AVX2 kernels reproduce the scalar reference bit for bit") {
    const simd::Kernels* avx = simd::avx2_kernels();
    if (avx == nullptr) {
        MESSAGE("AVX2 kernels unavailable on this build or CPU");
        return;
    }
    const auto& ref = simd::scalar_kernels();
    std::mt19937_64 rng(13);
    for (auto topo : {Topology::Nondegenerate, Topology::Degenerate}) {
        const int nvar = topo == Topology::Nondegenerate ? 10 : 6;
        for (int trial = 0; trial < 2000; ++trial) {
            auto p = random_params(rng, topo);
            if (trial % 3 == 0) p.detuning = {};
            const auto lp = to_lanes(p);
            simd::Lanes x, a, b;
            simd::NoiseLanes w;
            fill(x, rng, trial % 2 ? 1e-3 : 3.0);
            fill(w, rng, 0.05);
            if (trial % 7 == 0) {
                // Exercise the branch cut of the complex square root.
                x.im[0] = 0.0;
                x.re[0] = -std::abs(x.re[0]);
                x.im[kLanes] = -0.0;
            }
            ref.drift_positive_p(lp, x, a);
            avx->drift_positive_p(lp, x, b);
            CHECK(bitwise_equal(a, b, nvar));
            ref.drift_conjugate(lp, x, a);
            avx->drift_conjugate(lp, x, b);
            CHECK(bitwise_equal(a, b, nvar / 2));
            ref.noise_positive_p(lp, x, w, a);
            avx->noise_positive_p(lp, x, w, b);
            CHECK(bitwise_equal(a, b, nvar));
        }
    }
    for (std::size_t n : {0u, 1u, 2u, 3u, 5u, 64u, 323u}) {
        std::normal_distribution<double> g;
        std::vector<cplx> x(n), y1(n), y2;
        for (auto& v : x) v = {g(rng), g(rng)};
        for (auto& v : y1) v = {g(rng), g(rng)};
        y2 = y1;
        const cplx a(g(rng), g(rng));
        ref.caxpy(n, a, x.data(), y1.data());
        avx->caxpy(n, a, x.data(), y2.data());
        CHECK(std::memcmp(y1.data(), y2.data(), n * sizeof(cplx)) == 0);
    }
}

TEST_CASE("caxpy matches std::complex arithmetic") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> g;
    std::vector<cplx> x(37), y(37);
    for (auto& v : x) v = {g(rng), g(rng)};
    for (auto& v : y) v = {g(rng), g(rng)};
    auto expect = y;
    const cplx a(0.3, -1.7);
    for (std::size_t i = 0; i < x.size(); ++i) expect[i] += a * x[i];
    simd::kernels().caxpy(x.size(), a, x.data(), y.data());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - expect[i]) < 1e-14);
}

TEST_CASE("kernel selection can be overridden") {
    const auto& active = simd::kernels();
    simd::set_kernels(simd::scalar_kernels());
    CHECK(simd::kernels().name == simd::scalar_kernels().name);
    simd::set_kernels(active);
    CHECK(simd::kernels().name == active.name);
}
