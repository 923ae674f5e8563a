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

// Fixed-step integrators for the classical, positive-P and truncated Wigner
// equations, and a parallel ensemble runner with reproducible seeding.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "opo/model.hpp"
#include "opo/simd/kernels.hpp"

namespace opo {

enum class Scheme { RK4, EulerMaruyama, Heun };

std::string_view to_string(Scheme s);

enum class InitialKind {
    Vacuum,       // all amplitudes zero (Wigner: vacuum noise added)
    VacuumSeed,   // minute amplitudes with random phases on the down-converted modes
    Explicit,     // `state` below (Wigner: coherent-state noise added)
    SteadyState,  // closed-form steady state of symmetric parameters, free phases 0
};

struct InitialCondition {
    InitialKind kind = InitialKind::VacuumSeed;
    double seed_amplitude = 0.0;  // 0 selects 1e-6 * gamma_1 / chi_1
    bool randomize_phases = true;
    std::optional<PhaseSpaceState> state;  // classical-shaped or matching the representation
};

struct IntegratorConfig {
    Representation representation = Representation::Classical;
    Scheme scheme = Scheme::RK4;
    double dt = 1e-3;
    double t_end = 1.0;
    int record_stride = 1;
    std::uint64_t seed = 1;
    InitialCondition initial;
};

void validate_config(const IntegratorConfig& cfg, const SystemParams& p);

/// Number of integration steps, round(t_end / dt).
std::int64_t step_count(const IntegratorConfig& cfg);

struct Trajectory {
    std::vector<double> times;
    std::vector<PhaseSpaceState> states;
    SystemParams params;
    IntegratorConfig config;
};

// ---- noise ---------------------------------------------------------------------

/// Per-trajectory random stream: mt19937_64 seeded from (seed, index).
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t index);
    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Number of complex noise channels of a representation/topology.
int noise_channels(Representation rep, Topology topo);

/// Draws one step of Wiener increments into `dw` (size noise_channels).
/// Positive-P pairs get dW_a = (u + i v) sqrt(dt/2), dW_b = (u - i v) sqrt(dt/2);
/// degenerate self channels get a real xi sqrt(dt); Wigner channels get
/// (u + i v) sqrt(dt/2).
void draw_increments(NoiseStream& rng, Representation rep, Topology topo, double dt,
                     std::span<cplx> dw);

/// The eight positive-P noises (zeta1, zeta2, zeta1+, zeta2+, zeta3, zeta4,
/// zeta3+, zeta4+) of one step, zeta = dW / dt.
std::array<cplx, 8> correlated_noise_block(NoiseStream& rng, double dt);

// ---- single-state steps --------------------------------------------------------

PhaseSpaceState step_rk4(const PhaseSpaceState& s, const SystemParams& p, double dt);

/// x + a(x) dt + b(x) dW with dW from draw_increments.
PhaseSpaceState step_em(const PhaseSpaceState& s, const SystemParams& p, double dt,
                        std::span<const cplx> dw);

/// Stochastic Heun: predictor-corrector averaging both drift and noise
/// coefficients with the same increment.
PhaseSpaceState step_heun(const PhaseSpaceState& s, const SystemParams& p, double dt,
                          std::span<const cplx> dw);

// ---- batched stepping ----------------------------------------------------------

/// Four trajectories advanced together through the SIMD kernels.
class LaneBatch {
public:
    LaneBatch(const SystemParams& p, Representation rep);

    void set_state(int lane, const PhaseSpaceState& s);
    PhaseSpaceState state(int lane) const;
    cplx value(int lane, int var) const;
    int variables() const noexcept { return nvar_; }
    int channels() const noexcept { return nch_; }

    /// One step; `dw` holds channel c of lane l at c * kLanes + l.
    void step(Scheme scheme, double dt, const simd::NoiseLanes& dw);

    /// Largest |Re| + |Im| over the lane's variables (infinite if non-finite).
    double magnitude(int lane) const;
    void clear_lane(int lane);

private:
    void drift(const simd::Lanes& x, simd::Lanes& out) const;
    void noise(const simd::Lanes& x, const simd::NoiseLanes& dw, simd::Lanes& out) const;

    SystemParams params_;
    Representation rep_;
    simd::LaneParams lp_;
    int nvar_ = 0;
    int nch_ = 0;
    std::vector<double> wigner_amp_;
    simd::Lanes x_;
};

// ---- trajectories and ensembles ----------------------------------------------

/// Magnitude beyond which a stochastic trajectory is treated as divergent.
double divergence_bound(const SystemParams& p);

/// Initial state of trajectory `index` (consumes draws from `rng`).
PhaseSpaceState initial_state(const SystemParams& p, const IntegratorConfig& cfg, NoiseStream& rng);

Trajectory simulate(const SystemParams& p, const IntegratorConfig& cfg);

struct Observable {
    enum class Kind { Moment, PhaseDifference };
    std::string name;
    Kind kind = Kind::Moment;
    /// Moment factors (mode, conjugate-sector?) multiplied in order.
    std::vector<std::pair<int, bool>> factors;
    int mode_a = 0;  // PhaseDifference: phi_a - phi_b, unwrapped along the path
    int mode_b = 0;
};

/// "n1" (alpha1+ alpha1), products such as "a1*a3*a4" or "a2+*a2", and
/// phase differences "phi1-phi2".
Observable parse_observable(std::string_view text);

/// Evaluates a moment observable on one state.
cplx evaluate_moment(const Observable& o, const PhaseSpaceState& s);

struct MomentEstimate {
    cplx mean{};
    double se_re = 0.0;
    double se_im = 0.0;
    double var_re = 0.0;  // across-trajectory variance of the real part
};

struct EnsembleSpec {
    int n_traj = 100;
    std::vector<Observable> observables;
    double window_start = -1.0;  // negative: use the final record only
    double window_end = -1.0;    // negative: t_end
    int threads = 0;             // 0: hardware concurrency
    bool time_series = true;
};

struct EnsembleStats {
    int n_traj = 0;
    int n_discarded = 0;
    std::vector<double> discard_times;
    std::vector<std::string> names;
    std::vector<MomentEstimate> window;  // per observable, time-averaged over the window
    std::vector<double> times;
    std::vector<std::vector<MomentEstimate>> series;  // [record][observable]
};

EnsembleStats run_ensemble(const SystemParams& p, const IntegratorConfig& cfg, const EnsembleSpec& spec);

}  // namespace opo
