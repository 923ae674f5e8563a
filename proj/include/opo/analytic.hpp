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

// Closed-form steady states and thresholds of the symmetric cascade
// (gamma_1..4 = gamma, chi_1 = chi_2 = chi).

#include <array>
#include <span>
#include <string>
#include <vector>

#include "opo/model.hpp"

namespace opo {

enum class Regime { BelowThreshold, FirstAbove, SecondAbove, Marginal };

std::string_view to_string(Regime r);

struct Thresholds {
    double first_sq = 0.0;   // |E_thr,1|^2
    double second_sq = 0.0;  // |E_thr,2|^2
};

/// Linear relation sum_k coeff[k] * phi_k = target over (phi_0..phi_4, phi_drive).
struct PhaseConstraint {
    std::array<double, 6> coeff{};
    double target = 0.0;
    std::string label;
};

struct RegimeSolution {
    Regime regime = Regime::BelowThreshold;
    std::array<double, kModes> intensities{};
    std::vector<PhaseConstraint> phase_constraints;
    std::vector<std::string> free_phases;
    Thresholds thresholds;
};

Thresholds thresholds(const SystemParams& p);

/// Second-threshold drive modulus for arbitrary loss rates and couplings.
/// Reduces to sqrt(thresholds(p).second_sq) in the symmetric case. The
/// degenerate topology is treated as the nondegenerate cascade with
/// gamma_3 = gamma_4 = gamma_1.
double second_threshold_amplitude(const SystemParams& p);

Regime classify_regime(const SystemParams& p);

RegimeSolution steady_state(const SystemParams& p);

/// Closed form of the requested branch evaluated regardless of where the
/// drive lies. Used to continue the first-above solution past the second
/// threshold when probing its stability. Throws WrongRegime if the branch
/// has negative intensities at this drive.
RegimeSolution steady_state_branch(const SystemParams& p, Regime branch);

/// Concrete classical state with the free phases set to zero.
PhaseSpaceState steady_state_vector(const RegimeSolution& sol, const SystemParams& p);

/// Copy of `tmpl` with the drive rescaled to |E0|^2 = eps_sq |E_thr,1|^2,
/// keeping the drive phase (zero phase if the template drive vanishes).
SystemParams with_epsilon_sq(const SystemParams& tmpl, double eps_sq);

struct SweepRow {
    double epsilon_sq = 0.0;
    Regime regime = Regime::BelowThreshold;
    std::array<double, kModes> scaled{};  // n_i / n_0,cr with n_0,cr = gamma^2 / chi^2
};

std::vector<SweepRow> sweep_curve(const SystemParams& tmpl, std::span<const double> eps_sq_grid);

}  // namespace opo
