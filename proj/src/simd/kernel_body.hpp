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

#pragma once

// Kernel bodies shared by the scalar and AVX2 translation units. `V` is a
// lane vector type providing +, -, *, /, sqrt, copysign, comparisons
// returning a mask type, select(mask, a, b), load/store and broadcast. The
// scalar instantiation runs one lane at a time with V = double.

#include "opo/simd/kernels.hpp"

namespace opo::simd::detail {

template <class V>
struct C {
    V re;
    V im;
};

template <class V>
inline C<V> operator+(C<V> a, C<V> b) {
    return {a.re + b.re, a.im + b.im};
}
template <class V>
inline C<V> operator-(C<V> a, C<V> b) {
    return {a.re - b.re, a.im - b.im};
}
template <class V>
inline C<V> operator*(C<V> a, C<V> b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
template <class V>
inline C<V> scale(V s, C<V> a) {
    return {s * a.re, s * a.im};
}
template <class V>
inline C<V> conj(C<V> a) {
    return {a.re, V::zero() - a.im};
}

// Principal square root; same operation sequence as opo::principal_sqrt.
template <class V>
inline C<V> csqrt(C<V> z) {
    const V half = V::broadcast(0.5);
    const V two = V::broadcast(2.0);
    const V r = sqrt(z.re * z.re + z.im * z.im);
    const V pre = sqrt(half * (r + z.re));
    const V pim = z.im / (two * pre);
    const V t = sqrt(half * (r - z.re));
    const V nim = copysign(t, z.im);
    const V nre = z.im / (two * nim);
    const auto pos = z.re >= V::zero();
    const auto zero = r == V::zero();
    V re = select(pos, pre, nre);
    V im = select(pos, pim, nim);
    re = select(zero, V::zero(), re);
    im = select(zero, V::zero(), im);
    return {re, im};
}

template <class V>
struct View {
    const double* re;
    const double* im;
    C<V> operator[](int v) const {
        return {V::load(re + v * kLanes), V::load(im + v * kLanes)};
    }
};

template <class V>
inline void put(double* re, double* im, int v, C<V> c) {
    c.re.store(re + v * kLanes);
    c.im.store(im + v * kLanes);
}

// Drift of one sector; `ap` is the partner sector (alpha+ or alpha*).
template <class V, class A, class P>
inline void sector(const LaneParams& p, const A& a, const P& ap, double e_re, double e_im,
                   double det_sign, double* ore, double* oim, int base) {
    const V g0 = V::broadcast(-p.gamma[0]);
    const V g1 = V::broadcast(-p.gamma[1]);
    const V g2 = V::broadcast(-p.gamma[2]);
    const V c1 = V::broadcast(p.chi1);
    const V c2 = V::broadcast(p.chi2);
    const C<V> drive{V::broadcast(e_re), V::broadcast(e_im)};
    const int n = p.degenerate ? 3 : 5;
    C<V> out[5];
    if (!p.degenerate) {
        const V g3 = V::broadcast(-p.gamma[3]);
        const V g4 = V::broadcast(-p.gamma[4]);
        out[0] = scale(g0, a(0)) + drive - scale(c1, a(1) * a(2));
        out[1] = scale(g1, a(1)) + scale(c1, a(0) * ap(2));
        out[2] = scale(g2, a(2)) + scale(c1, a(0) * ap(1)) - scale(c2, a(3) * a(4));
        out[3] = scale(g3, a(3)) + scale(c2, a(2) * ap(4));
        out[4] = scale(g4, a(4)) + scale(c2, a(2) * ap(3));
    } else {
        const V hc2 = V::broadcast(0.5 * p.chi2);
        out[0] = scale(g0, a(0)) + drive - scale(c1, a(1) * a(2));
        out[1] = scale(g1, a(1)) + scale(c1, a(0) * ap(2)) + scale(c2, a(2) * ap(1));
        out[2] = scale(g2, a(2)) + scale(c1, a(0) * ap(1)) - scale(hc2, a(1) * a(1));
    }
    for (int i = 0; i < n; ++i) {
        if (p.detuning[i] != 0.0) {
            const V d = V::broadcast(det_sign * p.detuning[i]);
            const C<V> ai = a(i);
            out[i] = {out[i].re + d * ai.im, out[i].im - d * ai.re};
        }
        put(ore, oim, base + i, out[i]);
    }
}

template <class V>
inline void drift_positive_p(const LaneParams& p, const double* xr, const double* xi, double* ore,
                             double* oim) {
    const View<V> x{xr, xi};
    const int n = p.degenerate ? 3 : 5;
    auto a = [&](int i) { return x[i]; };
    auto ap = [&](int i) { return x[n + i]; };
    sector<V>(p, a, ap, p.drive_re, p.drive_im, 1.0, ore, oim, 0);
    sector<V>(p, ap, a, p.drive_re, -p.drive_im, -1.0, ore, oim, n);
}

template <class V>
inline void drift_conjugate(const LaneParams& p, const double* xr, const double* xi, double* ore,
                            double* oim) {
    const View<V> x{xr, xi};
    auto a = [&](int i) { return x[i]; };
    auto ac = [&](int i) { return conj(x[i]); };
    sector<V>(p, a, ac, p.drive_re, p.drive_im, 1.0, ore, oim, 0);
}

template <class V>
inline void noise_positive_p(const LaneParams& p, const double* xr, const double* xi,
                             const double* wr, const double* wi, double* ore, double* oim) {
    const View<V> x{xr, xi};
    const View<V> w{wr, wi};
    const V c1 = V::broadcast(p.chi1);
    const V c2 = V::broadcast(p.chi2);
    const C<V> zero{V::zero(), V::zero()};
    if (!p.degenerate) {
        const C<V> b12 = csqrt(scale(c1, x[0]));
        const C<V> b34 = csqrt(scale(c2, x[2]));
        const C<V> b12p = csqrt(scale(c1, x[5]));
        const C<V> b34p = csqrt(scale(c2, x[7]));
        put(ore, oim, 0, zero);
        put(ore, oim, 1, b12 * w[0]);
        put(ore, oim, 2, b12 * w[1]);
        put(ore, oim, 3, b34 * w[4]);
        put(ore, oim, 4, b34 * w[5]);
        put(ore, oim, 5, zero);
        put(ore, oim, 6, b12p * w[2]);
        put(ore, oim, 7, b12p * w[3]);
        put(ore, oim, 8, b34p * w[6]);
        put(ore, oim, 9, b34p * w[7]);
    } else {
        const C<V> b12 = csqrt(scale(c1, x[0]));
        const C<V> s = csqrt(scale(c2, x[2]));
        const C<V> b12p = csqrt(scale(c1, x[3]));
        const C<V> sp = csqrt(scale(c2, x[5]));
        put(ore, oim, 0, zero);
        put(ore, oim, 1, b12 * w[0] + s * w[4]);
        put(ore, oim, 2, b12 * w[1]);
        put(ore, oim, 3, zero);
        put(ore, oim, 4, b12p * w[2] + sp * w[5]);
        put(ore, oim, 5, b12p * w[3]);
    }
}

}  // namespace opo::simd::detail
