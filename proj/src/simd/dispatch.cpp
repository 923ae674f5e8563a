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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "opo/simd/kernels.hpp"

namespace opo::simd {

#if defined(OPO_HAVE_AVX2)
const Kernels* avx2_kernels_impl();
#endif

namespace {

const Kernels* detect() {
    if (const char* env = std::getenv("OPO_SIMD"); env && std::string_view(env) == "scalar") {
        return &scalar_kernels();
    }
    if (const Kernels* k = avx2_kernels()) return k;
    return &scalar_kernels();
}

std::atomic<const Kernels*>& active() {
    static std::atomic<const Kernels*> a{detect()};
    return a;
}

}  // namespace

const Kernels* avx2_kernels() {
#if defined(OPO_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    if (__builtin_cpu_supports("avx2")) return avx2_kernels_impl();
#endif
    return nullptr;
}

const Kernels& kernels() { return *active().load(std::memory_order_acquire); }

void set_kernels(const Kernels& k) { active().store(&k, std::memory_order_release); }

}  // namespace opo::simd
