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

#include "opo/model.hpp"

#include <cmath>
#include <string>

namespace opo {

namespace {

constexpr cplx kI{0.0, 1.0};

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

void require_size(const PhaseSpaceState& s, const SystemParams& p, Representation rep) {
    if (s.representation() != rep) {
        throw Error(ErrorCode::ShapeMismatch,
                    "state representation is " + std::string(to_string(s.representation())) +
                        ", expected " + std::string(to_string(rep)));
    }
    if (s.topology() != p.topology) {
        throw Error(ErrorCode::ShapeMismatch, "state topology does not match parameters");
    }
    if (s.size() != PhaseSpaceState::expected_size(rep, p.topology)) {
        throw Error(ErrorCode::ShapeMismatch, "state has " + std::to_string(s.size()) +
                                                  " amplitudes, expected " +
                                                  std::to_string(PhaseSpaceState::expected_size(
                                                      rep, p.topology)));
    }
}

// Drift of the alpha sector given alpha and its partner sector `ap`
// (alpha+ for positive-P, alpha* otherwise). The alpha+ sector is obtained by
// swapping the arguments, conjugating the drive and flipping the detuning.
void sector_drift(std::span<const cplx> a, std::span<const cplx> ap, const SystemParams& p,
                  cplx drive, double detuning_sign, std::span<cplx> out) {
    const auto& g = p.gamma;
    const auto& det = p.detuning;
    const double c1 = p.chi1;
    const double c2 = p.chi2;
    if (p.topology == Topology::Nondegenerate) {
        out[0] = -g[0] * a[0] + drive - c1 * a[1] * a[2];
        out[1] = -g[1] * a[1] + c1 * a[0] * ap[2];
        out[2] = -g[2] * a[2] + c1 * a[0] * ap[1] - c2 * a[3] * a[4];
        out[3] = -g[3] * a[3] + c2 * a[2] * ap[4];
        out[4] = -g[4] * a[4] + c2 * a[2] * ap[3];
    } else {
        out[0] = -g[0] * a[0] + drive - c1 * a[1] * a[2];
        out[1] = -g[1] * a[1] + c1 * a[0] * ap[2] + c2 * a[2] * ap[1];
        out[2] = -g[2] * a[2] + c1 * a[0] * ap[1] - 0.5 * c2 * a[1] * a[1];
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (det[i] != 0.0) out[i] -= detuning_sign * kI * det[i] * a[i];
    }
}

std::vector<cplx> conj_of(std::span<const cplx> a) {
    std::vector<cplx> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = std::conj(a[i]);
    return r;
}

}  // namespace

std::string_view to_string(Topology t) {
    return t == Topology::Nondegenerate ? "nondegenerate" : "degenerate";
}

std::string_view to_string(Representation r) {
    switch (r) {
        case Representation::Classical: return "classical";
        case Representation::PositiveP: return "positive-p";
        case Representation::Wigner: return "wigner";
    }
    return "?";
}

// ---- PhaseSpaceState ---------------------------------------------------------

PhaseSpaceState::PhaseSpaceState(Representation rep, Topology topo)
    : rep_(rep), topo_(topo), amps_(expected_size(rep, topo)) {}

PhaseSpaceState::PhaseSpaceState(Representation rep, Topology topo, std::vector<cplx> amplitudes)
    : rep_(rep), topo_(topo), amps_(std::move(amplitudes)) {
    if (amps_.size() != expected_size(rep, topo)) {
        throw Error(ErrorCode::ShapeMismatch,
                    "state needs " + std::to_string(expected_size(rep, topo)) +
                        " amplitudes, got " + std::to_string(amps_.size()));
    }
}

std::size_t PhaseSpaceState::expected_size(Representation rep, Topology topo) noexcept {
    const std::size_t modes = topo == Topology::Nondegenerate ? kModes : kDegenerateModes;
    return rep == Representation::PositiveP ? 2 * modes : modes;
}

cplx PhaseSpaceState::alpha_plus(int mode) const {
    const auto m = static_cast<std::size_t>(mode);
    if (rep_ == Representation::PositiveP) return amps_[m + static_cast<std::size_t>(mode_count())];
    return std::conj(amps_[m]);
}

// ---- parameters ------------------------------------------------------------

SystemParams validate_params(const SystemParams& p) {
    for (int i = 0; i < p.mode_count(); ++i) {
        const double g = p.gamma[static_cast<std::size_t>(i)];
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw Error(ErrorCode::NonPositiveLossRate,
                        "loss rate gamma_" + std::to_string(i) + " must be positive", i);
        }
    }
    if (!(p.chi1 >= 0.0) || !std::isfinite(p.chi1)) {
        throw Error(ErrorCode::NegativeCoupling, "chi1 must be non-negative", 1);
    }
    if (!(p.chi2 >= 0.0) || !std::isfinite(p.chi2)) {
        throw Error(ErrorCode::NegativeCoupling, "chi2 must be non-negative", 2);
    }
    if (!std::isfinite(p.drive.real()) || !std::isfinite(p.drive.imag())) {
        throw Error(ErrorCode::InvalidConfig, "drive must be finite");
    }
    return p;
}

bool is_symmetric(const SystemParams& p, double tol) {
    if (p.topology != Topology::Nondegenerate) return false;
    const double g = p.gamma[1];
    for (int i = 2; i < kModes; ++i) {
        if (!close_rel(p.gamma[static_cast<std::size_t>(i)], g, tol)) return false;
    }
    return close_rel(p.chi1, p.chi2, tol) && p.chi1 > 0.0;
}

void require_symmetric(const SystemParams& p) {
    if (!is_symmetric(p)) {
        throw Error(ErrorCode::AsymmetricParams,
                    "closed forms need gamma_1..4 equal, chi1 = chi2 > 0 and the nondegenerate "
                    "topology");
    }
}

DimensionlessParams to_dimensionless(const SystemParams& p) {
    validate_params(p);
    require_symmetric(p);
    const double gamma = p.gamma[1];
    const double chi = p.chi1;
    const double e_thr1 = p.gamma[0] * gamma / chi;
    return DimensionlessParams{chi / gamma, p.gamma[0] / gamma, std::abs(p.drive) / e_thr1, gamma};
}

// ---- evaluators ------------------------------------------------------------

std::vector<cplx> classical_drift(const PhaseSpaceState& s, const SystemParams& p) {
    require_size(s, p, Representation::Classical);
    const auto a = s.amplitudes();
    const auto ac = conj_of(a);
    std::vector<cplx> out(a.size());
    sector_drift(a, ac, p, p.drive, 1.0, out);
    return out;
}

std::vector<cplx> wigner_drift(const PhaseSpaceState& s, const SystemParams& p) {
    require_size(s, p, Representation::Wigner);
    const auto a = s.amplitudes();
    const auto ac = conj_of(a);
    std::vector<cplx> out(a.size());
    sector_drift(a, ac, p, p.drive, 1.0, out);
    return out;
}

std::vector<cplx> positive_p_drift(const PhaseSpaceState& s, const SystemParams& p) {
    require_size(s, p, Representation::PositiveP);
    const auto n = static_cast<std::size_t>(p.mode_count());
    const auto all = s.amplitudes();
    const auto a = all.subspan(0, n);
    const auto ap = all.subspan(n, n);
    std::vector<cplx> out(2 * n);
    sector_drift(a, ap, p, p.drive, 1.0, std::span<cplx>(out).subspan(0, n));
    sector_drift(ap, a, p, std::conj(p.drive), -1.0, std::span<cplx>(out).subspan(n, n));
    return out;
}

cplx principal_sqrt(cplx z) noexcept {
    const double x = z.real();
    const double y = z.imag();
    const double r = std::sqrt(x * x + y * y);
    if (r == 0.0) return {0.0, 0.0};
    if (x >= 0.0) {
        const double re = std::sqrt(0.5 * (r + x));
        return {re, y / (2.0 * re)};
    }
    const double t = std::sqrt(0.5 * (r - x));
    const double im = std::copysign(t, y);
    return {y / (2.0 * im), im};
}

std::vector<NoiseCoefficient> positive_p_noise_coefficients(const PhaseSpaceState& s,
                                                            const SystemParams& p) {
    require_size(s, p, Representation::PositiveP);
    const int n = p.mode_count();
    const cplx a0 = s.alpha(0), a2 = s.alpha(2);
    const cplx a0p = s.alpha_plus(0), a2p = s.alpha_plus(2);
    if (p.topology == Topology::Nondegenerate) {
        return {
            {NoiseKind::Pair, 1, 2, principal_sqrt(p.chi1 * a0)},
            {NoiseKind::Pair, 3, 4, principal_sqrt(p.chi2 * a2)},
            {NoiseKind::Pair, n + 1, n + 2, principal_sqrt(p.chi1 * a0p)},
            {NoiseKind::Pair, n + 3, n + 4, principal_sqrt(p.chi2 * a2p)},
        };
    }
    return {
        {NoiseKind::Pair, 1, 2, principal_sqrt(p.chi1 * a0)},
        {NoiseKind::Self, 1, 1, principal_sqrt(p.chi2 * a2)},
        {NoiseKind::Pair, n + 1, n + 2, principal_sqrt(p.chi1 * a0p)},
        {NoiseKind::Self, n + 1, n + 1, principal_sqrt(p.chi2 * a2p)},
    };
}

std::vector<double> wigner_noise_coefficients(const SystemParams& p) {
    std::vector<double> out(static_cast<std::size_t>(p.mode_count()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(p.gamma[i]);
    return out;
}

std::vector<double> classical_jacobian(const PhaseSpaceState& s, const SystemParams& p) {
    require_size(s, p, Representation::Classical);
    const int n = p.mode_count();
    const auto dim = static_cast<std::size_t>(2 * n);
    std::vector<double> jac(dim * dim, 0.0);

    // d(alpha_dot_i) = sum_j A_ij d alpha_j + B_ij d alpha_j^*; then split into
    // real and imaginary parts.
    std::vector<cplx> A(static_cast<std::size_t>(n * n)), B(static_cast<std::size_t>(n * n));
    auto at = [n](std::vector<cplx>& m, int i, int j) -> cplx& {
        return m[static_cast<std::size_t>(i * n + j)];
    };
    const auto& g = p.gamma;
    const double c1 = p.chi1, c2 = p.chi2;
    auto a = [&](int i) { return s.alpha(i); };
    auto ac = [&](int i) { return std::conj(s.alpha(i)); };
    for (int i = 0; i < n; ++i) {
        at(A, i, i) = -g[static_cast<std::size_t>(i)] - kI * p.detuning[static_cast<std::size_t>(i)];
    }
    if (p.topology == Topology::Nondegenerate) {
        at(A, 0, 1) += -c1 * a(2);
        at(A, 0, 2) += -c1 * a(1);
        at(A, 1, 0) += c1 * ac(2);
        at(B, 1, 2) += c1 * a(0);
        at(A, 2, 0) += c1 * ac(1);
        at(B, 2, 1) += c1 * a(0);
        at(A, 2, 3) += -c2 * a(4);
        at(A, 2, 4) += -c2 * a(3);
        at(A, 3, 2) += c2 * ac(4);
        at(B, 3, 4) += c2 * a(2);
        at(A, 4, 2) += c2 * ac(3);
        at(B, 4, 3) += c2 * a(2);
    } else {
        at(A, 0, 1) += -c1 * a(2);
        at(A, 0, 2) += -c1 * a(1);
        at(A, 1, 0) += c1 * ac(2);
        at(B, 1, 2) += c1 * a(0);
        at(A, 1, 2) += c2 * ac(1);
        at(B, 1, 1) += c2 * a(2);
        at(A, 2, 0) += c1 * ac(1);
        at(B, 2, 1) += c1 * a(0);
        at(A, 2, 1) += -c2 * a(1);
    }
    // alpha = x + i y: d alpha_dot = (A + B) dx + i (A - B) dy.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const cplx dx = at(A, i, j) + at(B, i, j);
            const cplx dy = kI * (at(A, i, j) - at(B, i, j));
            const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
            const auto un = static_cast<std::size_t>(n);
            jac[ui * dim + uj] = dx.real();
            jac[ui * dim + un + uj] = dy.real();
            jac[(un + ui) * dim + uj] = dx.imag();
            jac[(un + ui) * dim + un + uj] = dy.imag();
        }
    }
    return jac;
}

double drift_norm(std::span<const cplx> d) noexcept {
    double s = 0.0;
    for (const auto& v : d) s += std::norm(v);
    return std::sqrt(s);
}

}  // namespace opo
