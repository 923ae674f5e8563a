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

#include "opo/stability.hpp"

#include <cmath>
#include <string>

namespace opo {

namespace {

struct Sym {
    double g0;
    double g;
    double chi;
    double e;
};

Sym symmetric_of(const SystemParams& p) {
    validate_params(p);
    require_symmetric(p);
    return {p.gamma[0], p.gamma[1], p.chi1, std::abs(p.drive)};
}

void require_regime(const RegimeSolution& sol, Regime want) {
    if (sol.regime != want) {
        throw Error(ErrorCode::WrongRegime, "expected " + std::string(to_string(want)) +
                                                " solution, got " +
                                                std::string(to_string(sol.regime)));
    }
}

double positive(double x, const char* what) {
    if (!(x > 0.0)) {
        throw Error(ErrorCode::WrongRegime, std::string(what) + " must be positive for this linearization");
    }
    return x;
}

}  // namespace

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Unstable: return "unstable";
        case Verdict::Marginal: return "marginal";
    }
    return "?";
}

Verdict verdict_of(std::span<const cplx> eigenvalues) {
    const double m = max_real_part(eigenvalues);
    if (m > kMarginalEigenvalue) return Verdict::Unstable;
    if (m < -kMarginalEigenvalue) return Verdict::Stable;
    return Verdict::Marginal;
}

LinearSubsystem below_threshold_matrix(double eps) {
    if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidConfig, "eps must be >= 0");
    LinearSubsystem s;
    s.name = "below-threshold signal/idler";
    s.variables = {"alpha1", "alpha2", "alpha1+", "alpha2+"};
    s.matrix = Matrix(4, {-1, 0, 0, eps,
                          0, -1, eps, 0,
                          0, eps, -1, 0,
                          eps, 0, 0, -1});
    return s;
}

std::vector<LinearSubsystem> regime2_subsystems(const RegimeSolution& sol, const SystemParams& p) {
    require_regime(sol, Regime::FirstAbove);
    const Sym s = symmetric_of(p);
    const double n1 = sol.intensities[1];
    std::vector<LinearSubsystem> out;

    LinearSubsystem a;
    a.name = "regime-2 pump/intensity-sum";
    a.variables = {"dn0", "dn+"};
    a.matrix = Matrix(2, {-s.g0, -s.g,
                          2.0 * s.chi * n1 / s.g, 0.0});
    a.noise_correlations = Matrix(2, {0, 0, 0, 4.0 * s.g * n1});
    out.push_back(std::move(a));

    LinearSubsystem b;
    b.name = "regime-2 intensity-difference";
    b.variables = {"dn-"};
    b.matrix = Matrix(1, {-2.0 * s.g});
    b.noise_correlations = Matrix(1, {-4.0 * s.g * n1});
    out.push_back(std::move(b));

    LinearSubsystem c;
    c.name = "regime-2 phase";
    c.variables = {"dphi0", "dphi+"};
    c.matrix = Matrix(2, {-s.g0, -s.chi * s.chi * n1 / s.g,
                          2.0 * s.g, -2.0 * s.chi});
    c.noise_correlations = Matrix(2, {0, 0, 0, n1 > 0.0 ? -s.g / n1 : 0.0});
    out.push_back(std::move(c));

    LinearSubsystem d;
    d.name = "regime-2 tilde-alpha";
    d.variables = {"da3", "da4", "da3+", "da4+"};
    const double k = s.chi * std::sqrt(n1);
    d.matrix = Matrix(4, {-s.g, 0, 0, k,
                          0, -s.g, k, 0,
                          0, k, -s.g, 0,
                          k, 0, 0, -s.g});
    Matrix f(4);
    f(0, 1) = f(1, 0) = k;
    f(2, 3) = f(3, 2) = k;
    d.noise_correlations = f;
    out.push_back(std::move(d));
    return out;
}

std::vector<LinearSubsystem> regime3_subsystems(const RegimeSolution& sol, const SystemParams& p,
                                                const Regime3Options& opt,
                                                std::vector<std::string>* warnings) {
    require_regime(sol, Regime::SecondAbove);
    const Sym s = symmetric_of(p);
    if (s.g0 / s.g < opt.min_gamma_ratio) {
        const std::string msg = "gamma0/gamma = " + std::to_string(s.g0 / s.g) +
                                " is below " + std::to_string(opt.min_gamma_ratio) +
                                "; pump elimination is not justified";
        if (opt.strict) throw Error(ErrorCode::WrongRegime, msg);
        if (warnings) warnings->push_back(msg);
    }
    const double n1 = sol.intensities[1];
    const double n2 = positive(sol.intensities[2], "n2");
    const double n3 = sol.intensities[3];
    const double g = s.g;
    const double g0 = s.g0;
    const double chi = s.chi;
    std::vector<LinearSubsystem> out;

    LinearSubsystem a;
    a.name = "regime-3 intensity-difference";
    a.variables = {"dn-"};
    a.matrix = Matrix(1, {-2.0 * g});
    a.noise_correlations = Matrix(1, {-4.0 * g * n3});
    out.push_back(std::move(a));

    LinearSubsystem b;
    b.name = "regime-3 intensity";
    b.variables = {"dn1", "dn2", "dn+"};
    b.matrix = Matrix(3, {-g * (1.0 + g / g0), chi * chi * n1 / g * (1.0 - g / g0), 0.0,
                          g * (1.0 - g / g0), -g * (1.0 + chi * chi / (g0 * g)), -g,
                          0.0, 2.0 * chi * chi * n3 / g, 0.0});
    Matrix fb(3);
    fb(0, 1) = fb(1, 0) = 2.0 * g * n1;
    fb(2, 2) = 4.0 * g * n3;
    b.noise_correlations = fb;
    out.push_back(std::move(b));

    LinearSubsystem c;
    c.name = "regime-3 theta";
    c.variables = {"dtheta1", "dtheta2"};
    const double r12 = std::sqrt(n1 / n2);
    const double kE = chi * s.e / g0;
    c.matrix = Matrix(2, {-kE * (r12 + 1.0 / r12), -chi * n3 / std::sqrt(n2),
                          kE * r12, -chi * (2.0 * std::sqrt(n2) - n3 / std::sqrt(n2))});
    const double ft1 = -chi * chi / g;
    const double ft2 = n3 > 0.0 ? -g / n3 : 0.0;
    c.noise_correlations = Matrix(2, {ft1, -0.5 * ft1, -0.5 * ft1, ft2});
    out.push_back(std::move(c));
    return out;
}

bool routh_hurwitz_cubic(const std::array<double, 4>& c) {
    if (!(c[0] > 0.0)) throw Error(ErrorCode::InvalidConfig, "leading coefficient must be positive");
    const double a2 = c[1] / c[0];
    const double a1 = c[2] / c[0];
    const double a0 = c[3] / c[0];
    return a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0;
}

std::array<double, 4> characteristic_cubic(const Matrix& m) {
    if (m.size() != 3 || !m.is_real()) {
        throw Error(ErrorCode::ShapeMismatch, "characteristic_cubic needs a real 3x3 matrix");
    }
    auto r = [&](int i, int j) { return m(i, j).real(); };
    const double tr = r(0, 0) + r(1, 1) + r(2, 2);
    const double minors = (r(0, 0) * r(1, 1) - r(0, 1) * r(1, 0)) +
                          (r(0, 0) * r(2, 2) - r(0, 2) * r(2, 0)) +
                          (r(1, 1) * r(2, 2) - r(1, 2) * r(2, 1));
    const double det = r(0, 0) * (r(1, 1) * r(2, 2) - r(1, 2) * r(2, 1)) -
                       r(0, 1) * (r(1, 0) * r(2, 2) - r(1, 2) * r(2, 0)) +
                       r(0, 2) * (r(1, 0) * r(2, 1) - r(1, 1) * r(2, 0));
    return {1.0, -tr, minors, -det};
}

std::vector<DiffusingPhase> phase_diffusion_rates(const RegimeSolution& sol, const SystemParams& p) {
    const Sym s = symmetric_of(p);
    switch (sol.regime) {
        case Regime::FirstAbove:
            return {{"phi1 - phi2", s.g / positive(sol.intensities[1], "n1")}};
        case Regime::SecondAbove: {
            // In the second regime the (1,2) pair noise is fixed by n2 = gamma^2/chi^2.
            const double n2 = positive(sol.intensities[2], "n2");
            const double n3 = positive(sol.intensities[3], "n3");
            return {{"phi1 - phi2", s.g / n2}, {"phi3 - phi4", s.g / n3}};
        }
        default:
            throw Error(ErrorCode::WrongRegime, "no diffusing phase below threshold");
    }
}

StabilityReport analyze_stability(const SystemParams& p, const Regime3Options& opt) {
    StabilityReport rep;
    const RegimeSolution sol = steady_state(p);
    rep.regime = sol.regime;
    std::vector<LinearSubsystem> subs;
    switch (sol.regime) {
        case Regime::BelowThreshold: {
            const Sym s = symmetric_of(p);
            const double eps = s.e * s.chi / (s.g0 * s.g);
            subs.push_back(below_threshold_matrix(eps));
            break;
        }
        case Regime::FirstAbove:
            subs = regime2_subsystems(sol, p);
            break;
        case Regime::SecondAbove:
            subs = regime3_subsystems(sol, p, opt, &rep.warnings);
            break;
        case Regime::Marginal:
            break;
    }
    rep.overall_stable = true;
    for (auto& sub : subs) {
        SubsystemResult r;
        r.eigenvalues = eigenvalues_dense(sub.matrix);
        r.verdict = verdict_of(r.eigenvalues);
        rep.overall_stable = rep.overall_stable && r.verdict == Verdict::Stable;
        r.subsystem = std::move(sub);
        rep.subsystems.push_back(std::move(r));
    }
    if (sol.regime != Regime::BelowThreshold) rep.diffusing_phases = phase_diffusion_rates(sol, p);
    return rep;
}

}  // namespace opo
