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

#include "opo/analytic.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace opo {

namespace {

constexpr double kMarginalBand = 1e-9;

// Symmetric loss rate and coupling, after require_symmetric.
struct Sym {
    double g0;
    double g;
    double chi;
};

Sym symmetric_of(const SystemParams& p) {
    validate_params(p);
    require_symmetric(p);
    return {p.gamma[0], p.gamma[1], p.chi1};
}

PhaseConstraint constraint(std::array<double, 6> coeff, std::string label) {
    return {coeff, 0.0, std::move(label)};
}

}  // namespace

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::BelowThreshold: return "BelowThreshold";
        case Regime::FirstAbove: return "FirstAbove";
        case Regime::SecondAbove: return "SecondAbove";
        case Regime::Marginal: return "Marginal";
    }
    return "?";
}

Thresholds thresholds(const SystemParams& p) {
    const Sym s = symmetric_of(p);
    const double first = s.g0 * s.g0 * s.g * s.g / (s.chi * s.chi);
    const double r = 1.0 + s.g / s.g0;
    return {first, first * r * r};
}

double second_threshold_amplitude(const SystemParams& p) {
    validate_params(p);
    const auto& g = p.gamma;
    if (p.chi1 <= 0.0 || p.chi2 <= 0.0) {
        throw Error(ErrorCode::InvalidConfig, "second threshold needs chi1, chi2 > 0");
    }
    const double g1 = g[1];
    const double g2 = g[2];
    const double g3 = p.topology == Topology::Nondegenerate ? g[3] : g[1];
    const double g4 = p.topology == Topology::Nondegenerate ? g[4] : g[1];
    return g[0] * std::sqrt(g1 * g2) / p.chi1 +
           p.chi1 * std::sqrt(g2 / g1) * g3 * g4 / (p.chi2 * p.chi2);
}

Regime classify_regime(const SystemParams& p) {
    const Thresholds t = thresholds(p);
    const double e2 = std::norm(p.drive);
    auto near = [](double x, double thr) { return std::abs(x - thr) <= kMarginalBand * thr; };
    if (near(e2, t.first_sq) || near(e2, t.second_sq)) return Regime::Marginal;
    if (e2 < t.first_sq) return Regime::BelowThreshold;
    if (e2 < t.second_sq) return Regime::FirstAbove;
    return Regime::SecondAbove;
}

RegimeSolution steady_state_branch(const SystemParams& p, Regime branch) {
    const Sym s = symmetric_of(p);
    RegimeSolution sol;
    sol.regime = branch;
    sol.thresholds = thresholds(p);
    const double e = std::abs(p.drive);
    auto& n = sol.intensities;
    switch (branch) {
        case Regime::BelowThreshold:
            n[0] = e * e / (s.g0 * s.g0);
            break;
        case Regime::FirstAbove:
            n[0] = s.g * s.g / (s.chi * s.chi);
            n[1] = n[2] = e / s.chi - s.g0 * s.g / (s.chi * s.chi);
            break;
        case Regime::SecondAbove:
            n[0] = n[1] = e * e / ((s.g0 + s.g) * (s.g0 + s.g));
            n[2] = s.g * s.g / (s.chi * s.chi);
            n[3] = n[4] = n[1] - n[2];
            break;
        case Regime::Marginal:
            throw Error(ErrorCode::MarginalDrive, "no closed form on a threshold");
    }
    for (int i = 0; i < kModes; ++i) {
        if (n[static_cast<std::size_t>(i)] < 0.0) {
            throw Error(ErrorCode::WrongRegime,
                        std::string(to_string(branch)) + " branch has negative intensity", i);
        }
    }
    sol.phase_constraints.push_back(constraint({1, 0, 0, 0, 0, -1}, "phi0 = phi_drive"));
    if (branch != Regime::BelowThreshold) {
        sol.phase_constraints.push_back(constraint({-1, 1, 1, 0, 0, 0}, "phi1 + phi2 = phi0"));
        sol.free_phases.emplace_back("phi1 - phi2");
    }
    if (branch == Regime::SecondAbove) {
        sol.phase_constraints.push_back(
            constraint({0, 0, -1, 1, 1, 0}, "phi3 + phi4 - phi2 = 0"));
        sol.free_phases.emplace_back("phi3 - phi4");
    }
    return sol;
}

RegimeSolution steady_state(const SystemParams& p) {
    const Regime r = classify_regime(p);
    if (r == Regime::Marginal) {
        throw Error(ErrorCode::MarginalDrive,
                    "drive lies within the marginal band of a threshold");
    }
    return steady_state_branch(p, r);
}

PhaseSpaceState steady_state_vector(const RegimeSolution& sol, const SystemParams& p) {
    if (p.topology != Topology::Nondegenerate) {
        throw Error(ErrorCode::InvalidConfig, "closed forms cover the nondegenerate cascade");
    }
    const double ph = std::abs(p.drive) > 0.0 ? std::arg(p.drive) : 0.0;
    const auto& n = sol.intensities;
    PhaseSpaceState s(Representation::Classical, Topology::Nondegenerate);
    s[0] = std::polar(std::sqrt(n[0]), ph);
    switch (sol.regime) {
        case Regime::FirstAbove:
            s[1] = std::polar(std::sqrt(n[1]), 0.5 * ph);
            s[2] = std::polar(std::sqrt(n[2]), 0.5 * ph);
            break;
        case Regime::SecondAbove:
            s[1] = std::polar(std::sqrt(n[1]), ph);
            s[2] = std::sqrt(n[2]);
            s[3] = std::sqrt(n[3]);
            s[4] = std::sqrt(n[4]);
            break;
        default:
            break;
    }
    return s;
}

SystemParams with_epsilon_sq(const SystemParams& tmpl, double eps_sq) {
    if (!(eps_sq >= 0.0)) throw Error(ErrorCode::InvalidConfig, "epsilon^2 must be >= 0");
    const Thresholds t = thresholds(tmpl);
    SystemParams p = tmpl;
    const double ph = std::abs(tmpl.drive) > 0.0 ? std::arg(tmpl.drive) : 0.0;
    p.drive = std::polar(std::sqrt(eps_sq * t.first_sq), ph);
    return p;
}

std::vector<SweepRow> sweep_curve(const SystemParams& tmpl, std::span<const double> eps_sq_grid) {
    const Sym s = symmetric_of(tmpl);
    const double n0cr = s.g * s.g / (s.chi * s.chi);
    const Thresholds t = thresholds(tmpl);
    const double eps2_second = t.second_sq / t.first_sq;
    std::vector<SweepRow> rows;
    rows.reserve(eps_sq_grid.size());
    for (double e2 : eps_sq_grid) {
        if (!(e2 >= 0.0)) throw Error(ErrorCode::InvalidConfig, "grid values must be >= 0");
        SweepRow row;
        row.epsilon_sq = e2;
        const SystemParams p = with_epsilon_sq(tmpl, e2);
        row.regime = classify_regime(p);
        // On a threshold both adjacent branches coincide; take the lower one.
        Regime branch = row.regime;
        if (branch == Regime::Marginal) {
            branch = std::abs(e2 - 1.0) < std::abs(e2 - eps2_second) ? Regime::BelowThreshold
                                                                       : Regime::FirstAbove;
        }
        const RegimeSolution sol = steady_state_branch(p, branch);
        for (int i = 0; i < kModes; ++i) {
            row.scaled[static_cast<std::size_t>(i)] = sol.intensities[static_cast<std::size_t>(i)] / n0cr;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace opo
