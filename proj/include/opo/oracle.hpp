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

// Lindblad master equation on a truncated Fock space. Small enough cutoffs
// make this a brute-force reference for the phase-space moments.

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "opo/model.hpp"

namespace opo {

struct FockConfig {
    std::vector<int> cutoffs;            // maximum photon number per mode, mode 0 first
    std::size_t dimension_cap = 4096;
    double saturation_threshold = 1e-4;  // largest tolerated top-level population

    std::size_t dimension() const;
};

/// Throws InvalidConfig for bad cutoffs and DimensionCap beyond the cap.
void validate_fock(const FockConfig& cfg, Topology topo);

/// Compressed sparse row matrix.
struct SparseMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col;
    std::vector<cplx> val;

    cplx at(std::size_t r, std::size_t c) const;
};

/// Annihilation operator of every mode on the product basis (mode 0 slowest).
std::vector<SparseMatrix> build_ladder_operators(const FockConfig& cfg);

/// Dense row-major density matrix.
class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {}

    /// |0><0| of the truncated space.
    static DensityMatrix vacuum(std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }
    cplx* row(std::size_t r) { return data_.data() + r * dim_; }
    const cplx* row(std::size_t r) const { return data_.data() + r * dim_; }
    std::span<cplx> data() noexcept { return data_; }
    std::span<const cplx> data() const noexcept { return data_; }

    cplx trace() const;
    /// max |rho - rho^dagger|.
    double hermiticity_error() const;
    /// Smallest eigenvalue of the Hermitian part.
    double min_eigenvalue() const;

private:
    std::size_t dim_ = 0;
    std::vector<cplx> data_;
};

/// Precomputed generator: d rho/dt = K rho + (K rho)^dagger + 2 sum_i gamma_i a_i rho a_i^dagger,
/// with K = -i H / hbar - sum_i gamma_i a_i^dagger a_i.
class Liouvillian {
public:
    Liouvillian(const SystemParams& p, const FockConfig& cfg);

    void apply(const DensityMatrix& rho, DensityMatrix& out) const;
    std::size_t dimension() const noexcept { return k_.n; }

private:
    struct Jump {
        double rate = 0.0;
        std::vector<std::size_t> rows;    // rows not annihilated by a^dagger truncation
        std::vector<std::size_t> target;  // a^dagger |row>, up to normalization
        std::vector<double> amp;
    };
    SparseMatrix k_;
    std::vector<Jump> jumps_;
};

DensityMatrix liouvillian_apply(const DensityMatrix& rho, const SystemParams& p, const FockConfig& cfg);

/// Largest population of any mode's top Fock level.
double top_population(const DensityMatrix& rho, const FockConfig& cfg);

/// RK4 evolution. Throws CutoffSaturation (with the time) once the top-level
/// population exceeds cfg.saturation_threshold.
DensityMatrix evolve_master(const DensityMatrix& rho0, const SystemParams& p, const FockConfig& cfg,
                            double t_end, double dt);

/// tr(rho O) for a product O of ladder operators written left to right as
/// (mode, dagger?) factors.
cplx expect(const DensityMatrix& rho, const FockConfig& cfg, std::span<const std::pair<int, bool>> factors);

/// Same, with the observable syntax of the ensemble runner ("n1", "a1*a3*a4", "a1+*a2+*a1*a2").
cplx expect(const DensityMatrix& rho, const FockConfig& cfg, std::string_view text);

}  // namespace opo
