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

// Batched kernels behind the ensemble integrator and the master-equation
// oracle. Every kernel has a scalar reference implementation and, when the
// build and the CPU allow it, an AVX2 implementation that produces
// bit-identical results (both are compiled without FMA contraction and
// evaluate the same operation sequence).
//
// Lane layout is structure-of-arrays: variable v of lane l lives at
// index v * kLanes + l.

#include <complex>
#include <cstddef>
#include <string_view>

namespace opo::simd {

inline constexpr int kLanes = 4;
inline constexpr int kMaxVars = 10;
inline constexpr int kMaxNoise = 10;

struct LaneParams {
    double gamma[5] = {};
    double detuning[5] = {};
    double chi1 = 0.0;
    double chi2 = 0.0;
    double drive_re = 0.0;
    double drive_im = 0.0;
    bool degenerate = false;
};

struct Lanes {
    alignas(32) double re[kMaxVars * kLanes] = {};
    alignas(32) double im[kMaxVars * kLanes] = {};
};

struct NoiseLanes {
    alignas(32) double re[kMaxNoise * kLanes] = {};
    alignas(32) double im[kMaxNoise * kLanes] = {};
};

struct Kernels {
    std::string_view name;
    /// Positive-P drift of (alpha, alpha+).
    void (*drift_positive_p)(const LaneParams& p, const Lanes& x, Lanes& out);
    /// Classical / Wigner drift of alpha (alpha+ = alpha*).
    void (*drift_conjugate)(const LaneParams& p, const Lanes& x, Lanes& out);
    /// Positive-P noise increment out = B(x) dW. Channel order: nondegenerate
    /// (W1, W2, W1+, W2+, W3, W4, W3+, W4+); degenerate (W1, W2, W1+, W2+, X, X+)
    /// with X, X+ real.
    void (*noise_positive_p)(const LaneParams& p, const Lanes& x, const NoiseLanes& dw, Lanes& out);
    /// y += a x over n interleaved complex values.
    void (*caxpy)(std::size_t n, std::complex<double> a, const std::complex<double>* x,
                  std::complex<double>* y);
};

const Kernels& scalar_kernels();

/// AVX2 variant, or nullptr when it was not built or the CPU lacks AVX2.
const Kernels* avx2_kernels();

/// Active kernels: AVX2 when available unless the environment variable
/// OPO_SIMD=scalar asks for the reference path.
const Kernels& kernels();

/// Overrides the active kernels (tests and benchmarks).
void set_kernels(const Kernels& k);

}  // namespace opo::simd
