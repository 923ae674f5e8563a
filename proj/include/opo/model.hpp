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

// Cascaded five-mode OPO: parameters, phase-space states and the drift /
// diffusion evaluators of the classical, positive-P and truncated Wigner
// descriptions.
//
// Mode layout (nondegenerate): 0 pump, 1 signal, 2 intermediate pump,
// 3 and 4 second-stage signal/idler. In the degenerate cascade modes 1, 3
// and 4 are one field and the state collapses to modes 0, 1, 2.
//
// All rates are amplitude decay rates: an undriven, uncoupled mode decays
// as exp(-gamma t) and its photon number as exp(-2 gamma t).

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "opo/error.hpp"

namespace opo {

using cplx = std::complex<double>;

inline constexpr int kModes = 5;
inline constexpr int kDegenerateModes = 3;

enum class Topology { Nondegenerate, Degenerate };
enum class Representation { Classical, PositiveP, Wigner };

std::string_view to_string(Topology t);
std::string_view to_string(Representation r);

struct SystemParams {
    std::array<double, kModes> gamma{1.0, 1.0, 1.0, 1.0, 1.0};
    double chi1 = 0.0;
    double chi2 = 0.0;
    cplx drive{0.0, 0.0};
    std::array<double, kModes> detuning{};
    Topology topology = Topology::Nondegenerate;

    /// 5 for the nondegenerate cascade, 3 for the degenerate one.
    int mode_count() const noexcept {
        return topology == Topology::Nondegenerate ? kModes : kDegenerateModes;
    }
};

/// Scaled parameters of the symmetric system (gamma_1..4 = gamma, chi_1 = chi_2 = chi).
struct DimensionlessParams {
    double g = 0.0;          // chi / gamma
    double gamma_r = 0.0;    // gamma_0 / gamma
    double epsilon = 0.0;    // |E0| / |E_thr,1|
    double tau_scale = 0.0;  // gamma; tau = gamma * t
};

/// Mode amplitudes. Classical and Wigner states store alpha only (alpha+ is
/// alpha*); positive-P states store alpha followed by the independent alpha+.
class PhaseSpaceState {
public:
    PhaseSpaceState() = default;
    PhaseSpaceState(Representation rep, Topology topo);
    PhaseSpaceState(Representation rep, Topology topo, std::vector<cplx> amplitudes);

    static std::size_t expected_size(Representation rep, Topology topo) noexcept;

    Representation representation() const noexcept { return rep_; }
    Topology topology() const noexcept { return topo_; }
    int mode_count() const noexcept {
        return topo_ == Topology::Nondegenerate ? kModes : kDegenerateModes;
    }

    std::span<cplx> amplitudes() noexcept { return amps_; }
    std::span<const cplx> amplitudes() const noexcept { return amps_; }
    std::size_t size() const noexcept { return amps_.size(); }

    cplx& operator[](std::size_t i) { return amps_[i]; }
    const cplx& operator[](std::size_t i) const { return amps_[i]; }

    /// alpha_i in every representation.
    cplx alpha(int mode) const { return amps_[static_cast<std::size_t>(mode)]; }
    /// alpha_i^+: the stored conjugate-sector value for positive-P, alpha_i^* otherwise.
    cplx alpha_plus(int mode) const;

    /// alpha_i alpha_i^+ (complex in general for positive-P).
    cplx intensity(int mode) const { return alpha(mode) * alpha_plus(mode); }

    bool operator==(const PhaseSpaceState&) const = default;

private:
    Representation rep_ = Representation::Classical;
    Topology topo_ = Topology::Nondegenerate;
    std::vector<cplx> amps_;
};

// ---- parameters --------------------------------------------------------------

SystemParams validate_params(const SystemParams& p);

/// True when gamma_1..4 agree and chi_1 = chi_2 to relative `tol`.
bool is_symmetric(const SystemParams& p, double tol = 1e-12);

/// Throws AsymmetricParams unless is_symmetric(p).
void require_symmetric(const SystemParams& p);

DimensionlessParams to_dimensionless(const SystemParams& p);

// ---- evaluators --------------------------------------------------------------

std::vector<cplx> classical_drift(const PhaseSpaceState& s, const SystemParams& p);
std::vector<cplx> positive_p_drift(const PhaseSpaceState& s, const SystemParams& p);
std::vector<cplx> wigner_drift(const PhaseSpaceState& s, const SystemParams& p);

/// Kind of a positive-P noise entry. A pair entry feeds two state components
/// through a noise pair with <zeta_a zeta_b> = delta and vanishing self
/// moments; a self entry feeds one component through a real-variance noise
/// with <xi xi> = delta (degenerate cascade only).
enum class NoiseKind { Pair, Self };

struct NoiseCoefficient {
    NoiseKind kind = NoiseKind::Pair;
    int target_a = 0;  // index into the positive-P state vector
    int target_b = 0;  // equal to target_a for NoiseKind::Self
    cplx amplitude{};
};

/// Nondegenerate: four pair entries, in order (1,2), (3,4), (1+,2+), (3+,4+).
/// Degenerate: pair (1,2), self (1), pair (1+,2+), self (1+).
std::vector<NoiseCoefficient> positive_p_noise_coefficients(const PhaseSpaceState& s,
                                                            const SystemParams& p);

/// sqrt(gamma_i) per mode; each mode has one independent complex noise.
std::vector<double> wigner_noise_coefficients(const SystemParams& p);

/// Principal square root, evaluated with the same operation sequence as the
/// batched SIMD kernels so that both paths agree bit for bit.
cplx principal_sqrt(cplx z) noexcept;

/// Real Jacobian of the classical drift with respect to
/// (Re alpha_0.., Im alpha_0..), row-major, dimension 2 * mode_count.
std::vector<double> classical_jacobian(const PhaseSpaceState& s, const SystemParams& p);

/// Euclidean norm of a derivative vector.
double drift_norm(std::span<const cplx> d) noexcept;

}  // namespace opo
