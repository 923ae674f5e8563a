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

// Linearized fluctuation analysis around the closed-form steady states.

#include <array>
#include <string>
#include <vector>

#include "opo/analytic.hpp"
#include "opo/linalg.hpp"
#include "opo/model.hpp"

namespace opo {

/// Real parts within this distance of zero are reported Marginal.
inline constexpr double kMarginalEigenvalue = 1e-12;

enum class Verdict { Stable, Unstable, Marginal };

std::string_view to_string(Verdict v);

struct LinearSubsystem {
    std::string name;
    Matrix matrix;
    std::vector<std::string> variables;
    /// Steady-state noise second moments <F_i F_j> (signed; positive-P
    /// moments can be negative). Empty when the subsystem is noise-free.
    Matrix noise_correlations;
};

struct SubsystemResult {
    LinearSubsystem subsystem;
    std::vector<cplx> eigenvalues;
    Verdict verdict = Verdict::Stable;
};

struct DiffusingPhase {
    std::string phase;
    double rate = 0.0;  // Var grows as rate * t
};

struct StabilityReport {
    Regime regime = Regime::BelowThreshold;
    std::vector<SubsystemResult> subsystems;
    std::vector<DiffusingPhase> diffusing_phases;
    std::vector<std::string> warnings;
    bool overall_stable = false;
};

Verdict verdict_of(std::span<const cplx> eigenvalues);

/// Below-threshold drift matrix over (alpha1, alpha2, alpha1+, alpha2+) in
/// units of gamma.
LinearSubsystem below_threshold_matrix(double eps);

/// (dn0, dn+), dn-, (dphi0, dphi+) and the tilde-alpha block.
std::vector<LinearSubsystem> regime2_subsystems(const RegimeSolution& sol, const SystemParams& p);

struct Regime3Options {
    double min_gamma_ratio = 5.0;  // required gamma_0 / gamma
    bool strict = false;           // throw instead of warning below the ratio
};

/// dn-, the (dn1, dn2, dn+) block and the (dtheta1, dtheta2) block. The
/// matrices rest on adiabatic elimination of the pump; below
/// `min_gamma_ratio` a warning is appended to `warnings` (or WrongRegime is
/// thrown when strict).
std::vector<LinearSubsystem> regime3_subsystems(const RegimeSolution& sol, const SystemParams& p,
                                                const Regime3Options& opt = {},
                                                std::vector<std::string>* warnings = nullptr);

/// c = (1, a2, a1, a0) for x^3 + a2 x^2 + a1 x + a0. A leading coefficient
/// other than 1 is divided out (it must be positive).
bool routh_hurwitz_cubic(const std::array<double, 4>& c);

/// Monic characteristic polynomial (1, a2, a1, a0) of a real 3 x 3 matrix.
std::array<double, 4> characteristic_cubic(const Matrix& m);

std::vector<DiffusingPhase> phase_diffusion_rates(const RegimeSolution& sol, const SystemParams& p);

/// Full linearized analysis of the symmetric steady state.
StabilityReport analyze_stability(const SystemParams& p, const Regime3Options& opt = {});

}  // namespace opo
