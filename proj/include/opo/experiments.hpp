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

// Scenario files and the analyses built on top of the integrators: drive
// sweeps, dynamics classification, perturbation recovery, phase diffusion
// and integrator-order studies.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "opo/analytic.hpp"
#include "opo/integrate.hpp"

namespace opo {

// ---- scenarios -----------------------------------------------------------------

enum class ProtocolKind { Sweep, Trace, Perturb, EnsembleMoments };
enum class PerturbTarget { RealParts, ImagParts, Both };

std::string_view to_string(ProtocolKind k);
std::string_view to_string(PerturbTarget t);

struct Protocol {
    ProtocolKind kind = ProtocolKind::Trace;
    std::vector<double> grid;          // Sweep: epsilon^2 values
    double perturb_time = 0.0;         // Perturb
    PerturbTarget target = PerturbTarget::Both;
    double magnitude = 1.0;            // fraction of the current amplitude
    int n_traj = 1000;                 // EnsembleMoments
    std::vector<std::string> observables;
    double window_start = -1.0;        // EnsembleMoments averaging window
    double window_end = -1.0;
    double analysis_window = 0.0;      // Trace: classification window (0: last half)
};

struct Scenario {
    std::string name;
    SystemParams params;
    IntegratorConfig config;
    Protocol protocol;
};

/// Parses the INI text of a scenario: sections [params], [integrator] and
/// [protocol]. The drive is given by exactly one of `drive` (complex "re, im"),
/// `epsilon_sq` (|E0|^2 / |E_thr,1|^2) or `drive_ratio` (|E0| / |E_thr,2|).
Scenario parse_scenario(const std::string& text, const std::string& name = "scenario");
Scenario load_scenario(const std::filesystem::path& path);
void validate_scenario(const Scenario& s);

// ---- phases --------------------------------------------------------------------

inline constexpr double kPhaseGuard = 1e-12;

struct PhaseSeries {
    std::vector<double> times;
    std::vector<double> theta1;  // phi1 + phi2 - phi_drive, wrapped to [-pi, pi]
    std::vector<double> theta2;  // phi3 + phi4 - phi2 (degenerate: 2 phi1 - phi2), wrapped
    std::vector<std::array<double, kModes>> phases;  // unwrapped phi_i (unused modes 0)
    std::vector<char> valid;     // every amplitude above kPhaseGuard
};

double wrap_phase(double x);

/// Phase observables of a classical or Wigner trajectory.
PhaseSeries phase_observables(const Trajectory& traj);

// ---- fixed points and sweeps ---------------------------------------------------

struct FixedPointResult {
    PhaseSpaceState state;
    bool converged = false;
    double drift_norm = 0.0;
    double time = 0.0;
    std::vector<cplx> eigenvalues;  // of the real Jacobian at the final state
};

/// Integrates the classical equations (RK4, step `dt`) from a vacuum seed
/// until the drift norm falls below `tol` or `t_max` elapses.
FixedPointResult numeric_fixed_point(const SystemParams& p, double dt = 0.01, double tol = 1e-12,
                                     double t_max = 2e4, std::uint64_t seed = 1);

struct SweepPoint {
    double epsilon_sq = 0.0;
    Regime regime = Regime::BelowThreshold;
    std::array<double, kModes> analytic{};  // n_i / n_0,cr
    std::array<double, kModes> numeric{};
    double max_gap = 0.0;      // max_i |numeric - analytic| / max(analytic, 1e-3)
    bool converged = false;
    bool marginal = false;
};

std::vector<SweepPoint> threshold_sweep(const SystemParams& tmpl, std::span<const double> eps_sq_grid,
                                        double dt = 0.01, double t_max = 2e4);

// ---- dynamics classes ----------------------------------------------------------

enum class DynamicsClass { ConvergedFixedPoint, PersistentOscillation, GrowingOscillation, DecayingOscillation };

std::string_view to_string(DynamicsClass c);

struct DynamicsReport {
    DynamicsClass cls = DynamicsClass::PersistentOscillation;
    double terminal_drift_norm = 0.0;
    double variation = 0.0;       // relative peak-to-peak of the intensities over the window
    double envelope_ratio = 1.0;  // late-half over early-half peak-to-peak
};

/// Classifies the last `window` time units of a classical trajectory.
DynamicsReport detect_dynamics_class(const Trajectory& traj, double window);

/// Frequency (cycles per time unit) of the largest non-zero FFT bin of a
/// uniformly sampled real series, refined by parabolic interpolation.
double dominant_frequency(std::span<const double> values, double sample_dt);

// ---- perturbations -------------------------------------------------------------

struct RecoveryReport {
    bool recovered = false;
    double recovery_time = -1.0;      // after the kick; -1 if never within tolerance
    double theta1_final = 0.0;
    double theta2_final = 0.0;
    bool thetas_recovered = false;    // |theta| < 1e-3 at the end
    double max_theta1_excursion = 0.0;
    double max_theta2_excursion = 0.0;
    std::array<double, kModes> phase_offsets{};  // permanent change of each phi_i
    std::array<double, kModes> max_phase_excursion{};  // largest wrapped |phi_i(t) - phi_i(kick)|
};

struct PerturbationResult {
    Trajectory trajectory;
    PhaseSeries phases;
    RecoveryReport report;
};

/// alpha -> alpha + magnitude * mask(alpha).
PhaseSpaceState apply_kick(const PhaseSpaceState& s, PerturbTarget target, double magnitude);

/// Runs a Perturb scenario. Throws NotAtSteadyState when the drift norm at
/// the kick exceeds 1e-6.
PerturbationResult run_perturbation(const Scenario& sc);

// ---- stochastic estimators -----------------------------------------------------

struct SlopeEstimate {
    double slope = 0.0;
    double std_error = 0.0;
    double intercept = 0.0;
    int points = 0;
};

/// Least-squares line through the across-ensemble variance of observable
/// `obs` over records with t in [t0, t1] and variance below `var_max`.
/// Throws InsufficientEnsemble below 100 trajectories.
SlopeEstimate estimate_diffusion_slope(const EnsembleStats& st, std::size_t obs, double t0, double t1,
                                       double var_max = 0.1);

struct WeakBiasPoint {
    double dt = 0.0;
    double bias = 0.0;  // <n1>(dt) - <n1>(reference), from coupled paths
    double std_error = 0.0;
};

/// Euler-Maruyama weak bias of <n_mode> at time t_end for steps
/// dt_coarse / 2^k (k = 0..levels-1), each measured against a run with
/// step dt_coarse / refine on the same Brownian paths.
// Coupled Euler-Maruyama paths at dt, dt/2, ... (levels of them) against a reference at dt/refine,
// all driven by the same fine Brownian increments. With average_from >= 0 each path contributes
// its intensity averaged over the coarse steps in [average_from, t_end].
std::vector<WeakBiasPoint> em_weak_bias(const SystemParams& p, const IntegratorConfig& cfg, int mode,
                                        int n_traj, int levels, int refine, double average_from = -1.0,
                                        int threads = 0);

}  // namespace opo
