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

#include "kernel_body.hpp"

namespace opo::simd {

namespace {

struct SV {
    double v;

    static SV zero() { return {0.0}; }
    static SV broadcast(double x) { return {x}; }
    static SV load(const double* p) { return {*p}; }
    void store(double* p) const { *p = v; }
};

inline SV operator+(SV a, SV b) { return {a.v + b.v}; }
inline SV operator-(SV a, SV b) { return {a.v - b.v}; }
inline SV operator*(SV a, SV b) { return {a.v * b.v}; }
inline SV operator/(SV a, SV b) { return {a.v / b.v}; }
inline bool operator>=(SV a, SV b) { return a.v >= b.v; }
inline bool operator==(SV a, SV b) { return a.v == b.v; }
inline SV sqrt(SV a) { return {std::sqrt(a.v)}; }
inline SV copysign(SV a, SV b) { return {std::copysign(a.v, b.v)}; }
inline SV select(bool m, SV a, SV b) { return m ? a : b; }

void drift_pp(const LaneParams& p, const Lanes& x, Lanes& out) {
    for (int l = 0; l < kLanes; ++l) {
        detail::drift_positive_p<SV>(p, x.re + l, x.im + l, out.re + l, out.im + l);
    }
}

void drift_conj(const LaneParams& p, const Lanes& x, Lanes& out) {
    for (int l = 0; l < kLanes; ++l) {
        detail::drift_conjugate<SV>(p, x.re + l, x.im + l, out.re + l, out.im + l);
    }
}

void noise_pp(const LaneParams& p, const Lanes& x, const NoiseLanes& dw, Lanes& out) {
    for (int l = 0; l < kLanes; ++l) {
        detail::noise_positive_p<SV>(p, x.re + l, x.im + l, dw.re + l, dw.im + l, out.re + l,
                                     out.im + l);
    }
}

void caxpy(std::size_t n, std::complex<double> a, const std::complex<double>* x,
           std::complex<double>* y) {
    const double ar = a.real();
    const double ai = a.imag();
    const auto* xs = reinterpret_cast<const double*>(x);
    auto* ys = reinterpret_cast<double*>(y);
    for (std::size_t k = 0; k < n; ++k) {
        const double xr = xs[2 * k];
        const double xi = xs[2 * k + 1];
        ys[2 * k] += ar * xr - ai * xi;
        ys[2 * k + 1] += ar * xi + ai * xr;
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k{"scalar", drift_pp, drift_conj, noise_pp, caxpy};
    return k;
}

}  // namespace opo::simd
