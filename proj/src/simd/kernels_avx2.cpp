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

#include <immintrin.h>

#include "kernel_body.hpp"

namespace opo::simd {

namespace {

struct V4 {
    __m256d v;

    static V4 zero() { return {_mm256_setzero_pd()}; }
    static V4 broadcast(double x) { return {_mm256_set1_pd(x)}; }
    static V4 load(const double* p) { return {_mm256_load_pd(p)}; }
    void store(double* p) const { _mm256_store_pd(p, v); }
};

struct M4 {
    __m256d m;
};

inline V4 operator+(V4 a, V4 b) { return {_mm256_add_pd(a.v, b.v)}; }
inline V4 operator-(V4 a, V4 b) { return {_mm256_sub_pd(a.v, b.v)}; }
inline V4 operator*(V4 a, V4 b) { return {_mm256_mul_pd(a.v, b.v)}; }
inline V4 operator/(V4 a, V4 b) { return {_mm256_div_pd(a.v, b.v)}; }
inline M4 operator>=(V4 a, V4 b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_GE_OQ)}; }
inline M4 operator==(V4 a, V4 b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_EQ_OQ)}; }
inline V4 sqrt(V4 a) { return {_mm256_sqrt_pd(a.v)}; }
inline V4 copysign(V4 a, V4 b) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    return {_mm256_or_pd(_mm256_andnot_pd(sign, a.v), _mm256_and_pd(sign, b.v))};
}
inline V4 select(M4 m, V4 a, V4 b) { return {_mm256_blendv_pd(b.v, a.v, m.m)}; }

void drift_pp(const LaneParams& p, const Lanes& x, Lanes& out) {
    detail::drift_positive_p<V4>(p, x.re, x.im, out.re, out.im);
}

void drift_conj(const LaneParams& p, const Lanes& x, Lanes& out) {
    detail::drift_conjugate<V4>(p, x.re, x.im, out.re, out.im);
}

void noise_pp(const LaneParams& p, const Lanes& x, const NoiseLanes& dw, Lanes& out) {
    detail::noise_positive_p<V4>(p, x.re, x.im, dw.re, dw.im, out.re, out.im);
}

void caxpy(std::size_t n, std::complex<double> a, const std::complex<double>* x,
           std::complex<double>* y) {
    const __m256d ar = _mm256_set1_pd(a.real());
    const __m256d ai = _mm256_set1_pd(a.imag());
    const auto* xs = reinterpret_cast<const double*>(x);
    auto* ys = reinterpret_cast<double*>(y);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const __m256d xv = _mm256_loadu_pd(xs + 2 * k);
        const __m256d sw = _mm256_permute_pd(xv, 0b0101);
        // even slots: ar*xr - ai*xi, odd slots: ar*xi + ai*xr
        const __m256d prod = _mm256_addsub_pd(_mm256_mul_pd(ar, xv), _mm256_mul_pd(ai, sw));
        _mm256_storeu_pd(ys + 2 * k, _mm256_add_pd(_mm256_loadu_pd(ys + 2 * k), prod));
    }
    for (; k < n; ++k) {
        const double xr = xs[2 * k];
        const double xi = xs[2 * k + 1];
        ys[2 * k] += a.real() * xr - a.imag() * xi;
        ys[2 * k + 1] += a.real() * xi + a.imag() * xr;
    }
}

}  // namespace

const Kernels* avx2_kernels_impl() {
    static const Kernels k{"avx2", drift_pp, drift_conj, noise_pp, caxpy};
    return &k;
}

}  // namespace opo::simd
