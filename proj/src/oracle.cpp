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

#include "opo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "opo/integrate.hpp"
#include "opo/linalg.hpp"
#include "opo/simd/kernels.hpp"

namespace opo {

namespace {

using Factors = std::vector<std::pair<int, bool>>;

struct Basis {
    std::vector<int> cutoffs;
    std::vector<std::size_t> stride;
    std::size_t dim = 1;

    explicit Basis(const FockConfig& cfg) : cutoffs(cfg.cutoffs), stride(cfg.cutoffs.size()) {
        for (std::size_t i = cutoffs.size(); i-- > 0;) {
            stride[i] = dim;
            dim *= static_cast<std::size_t>(cutoffs[i] + 1);
        }
    }

    int digit(std::size_t k, int mode) const {
        const auto m = static_cast<std::size_t>(mode);
        return static_cast<int>((k / stride[m]) % static_cast<std::size_t>(cutoffs[m] + 1));
    }

    // Applies the factors right to left to |k>. Returns false when the result vanishes
    // or leaves the truncated space.
    bool apply(const Factors& f, std::size_t& k, double& coeff) const {
        coeff = 1.0;
        for (auto it = f.rbegin(); it != f.rend(); ++it) {
            const auto [mode, dagger] = *it;
            const int n = digit(k, mode);
            const auto s = stride[static_cast<std::size_t>(mode)];
            if (dagger) {
                if (n == cutoffs[static_cast<std::size_t>(mode)]) return false;
                coeff *= std::sqrt(static_cast<double>(n + 1));
                k += s;
            } else {
                if (n == 0) return false;
                coeff *= std::sqrt(static_cast<double>(n));
                k -= s;
            }
        }
        return true;
    }
};

struct Triplet {
    std::size_t row, col;
    cplx val;
};

SparseMatrix from_triplets(std::size_t n, std::vector<Triplet> t) {
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m;
    m.n = n;
    m.row_ptr.assign(n + 1, 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!m.col.empty() && i > 0 && t[i].row == t[i - 1].row && t[i].col == t[i - 1].col) {
            m.val.back() += t[i].val;
            continue;
        }
        m.col.push_back(t[i].col);
        m.val.push_back(t[i].val);
        ++m.row_ptr[t[i].row + 1];
    }
    for (std::size_t r = 0; r < n; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
}

}  // namespace

std::size_t FockConfig::dimension() const {
    std::size_t d = 1;
    for (int c : cutoffs) {
        d *= static_cast<std::size_t>(std::max(c, 0) + 1);
        if (d > (std::size_t{1} << 40)) break;
    }
    return d;
}

void validate_fock(const FockConfig& cfg, Topology topo) {
    const std::size_t modes = topo == Topology::Nondegenerate ? kModes : kDegenerateModes;
    if (cfg.cutoffs.size() != modes) {
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(modes) + " cutoffs");
    }
    for (std::size_t i = 0; i < modes; ++i) {
        if (cfg.cutoffs[i] < 1) throw Error(ErrorCode::InvalidConfig, "cutoffs must be >= 1", static_cast<int>(i));
    }
    if (cfg.dimension() > cfg.dimension_cap) {
        throw Error(ErrorCode::DimensionCap, "Fock dimension " + std::to_string(cfg.dimension()) +
                                                 " exceeds the cap " + std::to_string(cfg.dimension_cap));
    }
    if (!(cfg.saturation_threshold > 0.0)) throw Error(ErrorCode::InvalidConfig, "saturation threshold must be positive");
}

cplx SparseMatrix::at(std::size_t r, std::size_t c) const {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
        if (col[k] == c) return val[k];
    }
    return {};
}

std::vector<SparseMatrix> build_ladder_operators(const FockConfig& cfg) {
    if (cfg.cutoffs.empty()) throw Error(ErrorCode::InvalidConfig, "no cutoffs");
    for (int c : cfg.cutoffs) {
        if (c < 1) throw Error(ErrorCode::InvalidConfig, "cutoffs must be >= 1");
    }
    if (cfg.dimension() > cfg.dimension_cap) throw Error(ErrorCode::DimensionCap, "Fock dimension exceeds the cap");
    const Basis b(cfg);
    std::vector<SparseMatrix> ops;
    for (int m = 0; m < static_cast<int>(cfg.cutoffs.size()); ++m) {
        std::vector<Triplet> t;
        for (std::size_t k = 0; k < b.dim; ++k) {
            std::size_t j = k;
            double c = 0.0;
            if (b.apply({{m, false}}, j, c)) t.push_back({j, k, c});
        }
        ops.push_back(from_triplets(b.dim, std::move(t)));
    }
    return ops;
}

// ---- density matrices ----------------------------------------------------------

DensityMatrix DensityMatrix::vacuum(std::size_t dim) {
    DensityMatrix r(dim);
    r(0, 0) = 1.0;
    return r;
}

cplx DensityMatrix::trace() const {
    cplx t{};
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

double DensityMatrix::hermiticity_error() const {
    double e = 0.0;
    for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = r; c < dim_; ++c) e = std::max(e, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
    }
    return e;
}

double DensityMatrix::min_eigenvalue() const {
    const int n = static_cast<int>(dim_);
    Matrix m(n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) m(r, c) = (*this)(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    }
    return eigenvalues_hermitian(m).front();
}

// ---- Liouvillian ---------------------------------------------------------------

Liouvillian::Liouvillian(const SystemParams& p, const FockConfig& cfg) {
    validate_params(p);
    validate_fock(cfg, p.topology);
    const Basis b(cfg);
    const int modes = p.mode_count();

    std::vector<std::pair<cplx, Factors>> terms;
    terms.push_back({p.drive, {{0, true}}});
    terms.push_back({-std::conj(p.drive), {{0, false}}});
    terms.push_back({p.chi1, {{0, false}, {1, true}, {2, true}}});
    terms.push_back({-p.chi1, {{0, true}, {1, false}, {2, false}}});
    if (p.topology == Topology::Nondegenerate) {
        terms.push_back({p.chi2, {{2, false}, {3, true}, {4, true}}});
        terms.push_back({-p.chi2, {{2, true}, {3, false}, {4, false}}});
    } else {
        terms.push_back({0.5 * p.chi2, {{2, false}, {1, true}, {1, true}}});
        terms.push_back({-0.5 * p.chi2, {{2, true}, {1, false}, {1, false}}});
    }
    for (int i = 0; i < modes; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        terms.push_back({cplx(-p.gamma[ii], -p.detuning[ii]), {{i, true}, {i, false}}});
    }

    std::vector<Triplet> t;
    for (std::size_t k = 0; k < b.dim; ++k) {
        for (const auto& [coef, f] : terms) {
            if (coef == cplx{}) continue;
            std::size_t j = k;
            double c = 0.0;
            if (b.apply(f, j, c)) t.push_back({j, k, coef * c});
        }
    }
    k_ = from_triplets(b.dim, std::move(t));

    for (int i = 0; i < modes; ++i) {
        Jump jmp;
        jmp.rate = 2.0 * p.gamma[static_cast<std::size_t>(i)];
        for (std::size_t r = 0; r < b.dim; ++r) {
            // Row r of a rho a^dagger draws from the basis state a^dagger maps r onto.
            std::size_t j = r;
            double c = 0.0;
            if (b.apply({{i, true}}, j, c)) {
                jmp.rows.push_back(r);
                jmp.target.push_back(j);
                jmp.amp.push_back(c);
            }
        }
        jumps_.push_back(std::move(jmp));
    }
}

void Liouvillian::apply(const DensityMatrix& rho, DensityMatrix& out) const {
    const std::size_t n = k_.n;
    if (rho.dim() != n) throw Error(ErrorCode::ShapeMismatch, "density matrix dimension");
    if (out.dim() != n) out = DensityMatrix(n);
    std::vector<cplx> kr(n * n);
    const auto& kern = simd::kernels();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t q = k_.row_ptr[r]; q < k_.row_ptr[r + 1]; ++q) {
            kern.caxpy(n, k_.val[q], rho.row(k_.col[q]), kr.data() + r * n);
        }
    }
    constexpr std::size_t tile = 32;
    for (std::size_t r0 = 0; r0 < n; r0 += tile) {
        for (std::size_t c0 = 0; c0 < n; c0 += tile) {
            const std::size_t r1 = std::min(n, r0 + tile), c1 = std::min(n, c0 + tile);
            for (std::size_t r = r0; r < r1; ++r) {
                for (std::size_t c = c0; c < c1; ++c) out(r, c) = kr[r * n + c] + std::conj(kr[c * n + r]);
            }
        }
    }
    for (const auto& j : jumps_) {
        const std::size_t m = j.rows.size();
        for (std::size_t a = 0; a < m; ++a) {
            const double ar = j.rate * j.amp[a];
            const cplx* src = rho.row(j.target[a]);
            cplx* dst = out.row(j.rows[a]);
            for (std::size_t b = 0; b < m; ++b) dst[j.rows[b]] += ar * j.amp[b] * src[j.target[b]];
        }
    }
}

DensityMatrix liouvillian_apply(const DensityMatrix& rho, const SystemParams& p, const FockConfig& cfg) {
    DensityMatrix out(rho.dim());
    Liouvillian(p, cfg).apply(rho, out);
    return out;
}

double top_population(const DensityMatrix& rho, const FockConfig& cfg) {
    const Basis b(cfg);
    double top = 0.0;
    for (int m = 0; m < static_cast<int>(cfg.cutoffs.size()); ++m) {
        double s = 0.0;
        for (std::size_t k = 0; k < b.dim; ++k) {
            if (b.digit(k, m) == cfg.cutoffs[static_cast<std::size_t>(m)]) s += rho(k, k).real();
        }
        top = std::max(top, s);
    }
    return top;
}

DensityMatrix evolve_master(const DensityMatrix& rho0, const SystemParams& p, const FockConfig& cfg,
                            double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end >= 0.0)) throw Error(ErrorCode::InvalidConfig, "dt must be positive and t_end non-negative");
    const Liouvillian l(p, cfg);
    const std::size_t n = l.dimension();
    if (rho0.dim() != n) throw Error(ErrorCode::ShapeMismatch, "density matrix dimension");
    const auto steps = static_cast<std::int64_t>(std::llround(t_end / dt));
    DensityMatrix rho = rho0, tmp(n), k1(n), k2(n), k3(n), k4(n);
    auto axpy = [&](const DensityMatrix& k, double h) {
        for (std::size_t i = 0; i < n * n; ++i) tmp.data()[i] = rho.data()[i] + h * k.data()[i];
    };
    for (std::int64_t s = 1; s <= steps; ++s) {
        l.apply(rho, k1);
        axpy(k1, 0.5 * dt);
        l.apply(tmp, k2);
        axpy(k2, 0.5 * dt);
        l.apply(tmp, k3);
        axpy(k3, dt);
        l.apply(tmp, k4);
        for (std::size_t i = 0; i < n * n; ++i) {
            rho.data()[i] += dt / 6.0 * (k1.data()[i] + 2.0 * k2.data()[i] + 2.0 * k3.data()[i] + k4.data()[i]);
        }
        const double top = top_population(rho, cfg);
        if (!std::isfinite(top)) {
            throw Error(ErrorCode::NonFinite, "master equation diverged", std::nullopt, static_cast<double>(s) * dt);
        }
        if (top > cfg.saturation_threshold) {
            throw Error(ErrorCode::CutoffSaturation,
                        "top Fock level population " + std::to_string(top) + " exceeds the threshold",
                        std::nullopt, static_cast<double>(s) * dt);
        }
    }
    return rho;
}

cplx expect(const DensityMatrix& rho, const FockConfig& cfg, std::span<const std::pair<int, bool>> factors) {
    const Basis b(cfg);
    if (rho.dim() != b.dim) throw Error(ErrorCode::ShapeMismatch, "density matrix dimension");
    const Factors f(factors.begin(), factors.end());
    for (const auto& [m, d] : f) {
        if (m < 0 || m >= static_cast<int>(cfg.cutoffs.size())) throw Error(ErrorCode::InvalidConfig, "mode out of range", m);
    }
    cplx sum{};
    for (std::size_t r = 0; r < b.dim; ++r) {
        std::size_t k = r;
        double c = 0.0;
        if (b.apply(f, k, c)) sum += c * rho(r, k);
    }
    return sum;
}

cplx expect(const DensityMatrix& rho, const FockConfig& cfg, std::string_view text) {
    const auto o = parse_observable(text);
    if (o.kind != Observable::Kind::Moment) throw Error(ErrorCode::InvalidConfig, "phase observables have no operator form");
    return expect(rho, cfg, o.factors);
}

}  // namespace opo
