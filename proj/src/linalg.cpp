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

#include "opo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "opo/error.hpp"

namespace opo {

namespace {

using cplx = std::complex<double>;

double abs1(cplx z) { return std::abs(z.real()) + std::abs(z.imag()); }

void balance(Matrix& a) {
    const int n = a.size();
    constexpr double radix = 2.0;
    bool done = false;
    while (!done) {
        done = true;
        for (int i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                c += abs1(a(j, i));
                r += abs1(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                for (int j = 0; j < n; ++j) a(i, j) /= f;
                for (int j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

void hessenberg(Matrix& a) {
    const int n = a.size();
    std::vector<cplx> v(static_cast<std::size_t>(n));
    for (int k = 0; k + 2 < n; ++k) {
        double norm = 0.0;
        for (int i = k + 1; i < n; ++i) norm += std::norm(a(i, k));
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const cplx x0 = a(k + 1, k);
        const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx(1.0, 0.0);
        const cplx alpha = -phase * norm;
        double vnorm = 0.0;
        for (int i = k + 1; i < n; ++i) {
            v[static_cast<std::size_t>(i)] = a(i, k) - (i == k + 1 ? alpha : cplx{});
            vnorm += std::norm(v[static_cast<std::size_t>(i)]);
        }
        vnorm = std::sqrt(vnorm);
        if (vnorm == 0.0) continue;
        for (int i = k + 1; i < n; ++i) v[static_cast<std::size_t>(i)] /= vnorm;
        // a <- (I - 2 v v^H) a
        for (int j = 0; j < n; ++j) {
            cplx s{};
            for (int i = k + 1; i < n; ++i) s += std::conj(v[static_cast<std::size_t>(i)]) * a(i, j);
            for (int i = k + 1; i < n; ++i) a(i, j) -= 2.0 * v[static_cast<std::size_t>(i)] * s;
        }
        // a <- a (I - 2 v v^H)
        for (int i = 0; i < n; ++i) {
            cplx s{};
            for (int j = k + 1; j < n; ++j) s += a(i, j) * v[static_cast<std::size_t>(j)];
            for (int j = k + 1; j < n; ++j) a(i, j) -= 2.0 * s * std::conj(v[static_cast<std::size_t>(j)]);
        }
        for (int i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

cplx wilkinson_shift(const Matrix& h, int hi) {
    const cplx a = h(hi - 1, hi - 1);
    const cplx b = h(hi - 1, hi);
    const cplx c = h(hi, hi - 1);
    const cplx d = h(hi, hi);
    const cplx half_tr = 0.5 * (a + d);
    const cplx disc = std::sqrt(half_tr * half_tr - (a * d - b * c));
    const cplx mu1 = half_tr + disc;
    const cplx mu2 = half_tr - disc;
    return std::abs(mu1 - d) < std::abs(mu2 - d) ? mu1 : mu2;
}

void qr_sweep(Matrix& h, int lo, int hi, cplx mu) {
    const int m = hi - lo;
    std::vector<cplx> cs(static_cast<std::size_t>(m));
    std::vector<cplx> sn(static_cast<std::size_t>(m));
    for (int k = lo; k <= hi; ++k) h(k, k) -= mu;
    for (int k = lo; k < hi; ++k) {
        const cplx x = h(k, k);
        const cplx y = h(k + 1, k);
        const double r = std::hypot(std::abs(x), std::abs(y));
        cplx c{1.0, 0.0};
        cplx s{};
        if (r > 0.0) {
            c = x / r;
            s = y / r;
        }
        cs[static_cast<std::size_t>(k - lo)] = c;
        sn[static_cast<std::size_t>(k - lo)] = s;
        for (int j = k; j <= hi; ++j) {
            const cplx u = h(k, j);
            const cplx w = h(k + 1, j);
            h(k, j) = std::conj(c) * u + std::conj(s) * w;
            h(k + 1, j) = -s * u + c * w;
        }
    }
    for (int k = lo; k < hi; ++k) {
        const cplx c = cs[static_cast<std::size_t>(k - lo)];
        const cplx s = sn[static_cast<std::size_t>(k - lo)];
        const int top = std::min(k + 2, hi);
        for (int i = lo; i <= top; ++i) {
            const cplx u = h(i, k);
            const cplx w = h(i, k + 1);
            h(i, k) = u * c + w * s;
            h(i, k + 1) = -u * std::conj(s) + w * std::conj(c);
        }
    }
    for (int k = lo; k <= hi; ++k) h(k, k) += mu;
}

}  // namespace

Matrix::Matrix(int n, std::initializer_list<value_type> row_major) : Matrix(n) {
    if (row_major.size() != a_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "initializer does not match matrix size");
    }
    std::copy(row_major.begin(), row_major.end(), a_.begin());
}

Matrix Matrix::identity(int n) {
    Matrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_real(int n, std::span<const double> row_major) {
    Matrix m(n);
    if (row_major.size() != m.a_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "real data does not match matrix size");
    }
    for (std::size_t k = 0; k < row_major.size(); ++k) m.a_[k] = row_major[k];
    return m;
}

Matrix::value_type Matrix::trace() const {
    value_type t{};
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

bool Matrix::is_real(double tol) const {
    return std::all_of(a_.begin(), a_.end(), [tol](const value_type& z) { return std::abs(z.imag()) <= tol; });
}

std::vector<cplx> eigenvalues_dense(const Matrix& m) {
    const int n = m.size();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) {
                throw Error(ErrorCode::NonFinite, "matrix has non-finite entries");
            }
        }
    }
    Matrix h = m;
    balance(h);
    hessenberg(h);

    constexpr double eps = std::numeric_limits<double>::epsilon();
    const int max_iter = 60 * std::max(n, 1);
    std::vector<cplx> eig;
    eig.reserve(static_cast<std::size_t>(n));
    int hi = n - 1;
    int iter = 0;
    int total = 0;
    while (hi >= 0) {
        int lo = hi;
        while (lo > 0) {
            const double scale = abs1(h(lo - 1, lo - 1)) + abs1(h(lo, lo));
            if (abs1(h(lo, lo - 1)) <= eps * scale || abs1(h(lo, lo - 1)) < std::numeric_limits<double>::min()) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            eig.push_back(h(hi, hi));
            --hi;
            iter = 0;
            continue;
        }
        if (++total > max_iter) {
            throw Error(ErrorCode::NoConvergence, "QR iteration did not converge");
        }
        ++iter;
        cplx mu = wilkinson_shift(h, hi);
        if (iter % 11 == 0) mu = h(hi, hi) + cplx(abs1(h(hi, hi - 1)), 0.0);
        qr_sweep(h, lo, hi, mu);
    }
    std::sort(eig.begin(), eig.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    return eig;
}

std::vector<double> eigenvalues_hermitian(const Matrix& m) {
    const int n = m.size();
    std::vector<cplx> a(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    auto at = [&](int i, int j) -> cplx& { return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const cplx v = 0.5 * (m(i, j) + std::conj(m(j, i)));
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                throw Error(ErrorCode::NonFinite, "non-finite matrix entry");
            }
            at(i, j) = v;
        }
    }
    std::vector<cplx> v(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));
    for (int k = 0; k + 2 < n; ++k) {
        double norm = 0.0;
        for (int i = k + 1; i < n; ++i) norm += std::norm(at(i, k));
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const cplx x0 = at(k + 1, k);
        const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx(1.0);
        const cplx alpha = -phase * norm;
        double vn = 0.0;
        for (int i = k + 1; i < n; ++i) {
            v[static_cast<std::size_t>(i)] = at(i, k) - (i == k + 1 ? alpha : cplx{});
            vn += std::norm(v[static_cast<std::size_t>(i)]);
        }
        vn = std::sqrt(vn);
        if (vn == 0.0) continue;
        for (int i = k + 1; i < n; ++i) v[static_cast<std::size_t>(i)] /= vn;
        // A <- H A H with H = I - 2 v v^dagger on the trailing block.
        cplx kappa{};
        for (int i = k + 1; i < n; ++i) {
            cplx s{};
            for (int j = k + 1; j < n; ++j) s += at(i, j) * v[static_cast<std::size_t>(j)];
            p[static_cast<std::size_t>(i)] = s;
            kappa += std::conj(v[static_cast<std::size_t>(i)]) * s;
        }
        for (int i = k + 1; i < n; ++i) p[static_cast<std::size_t>(i)] -= kappa * v[static_cast<std::size_t>(i)];
        for (int i = k + 1; i < n; ++i) {
            for (int j = k + 1; j < n; ++j) {
                at(i, j) -= 2.0 * (v[static_cast<std::size_t>(i)] * std::conj(p[static_cast<std::size_t>(j)]) +
                                   p[static_cast<std::size_t>(i)] * std::conj(v[static_cast<std::size_t>(j)]));
            }
        }
        at(k + 1, k) = alpha;
        at(k, k + 1) = std::conj(alpha);
        for (int i = k + 2; i < n; ++i) at(i, k) = at(k, i) = 0.0;
    }
    std::vector<double> d(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        d[static_cast<std::size_t>(i)] = at(i, i).real();
        if (i + 1 < n) e[static_cast<std::size_t>(i)] = std::abs(at(i + 1, i));
    }
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int mm;
        do {
            for (mm = l; mm < n - 1; ++mm) {
                const double dd = std::abs(d[static_cast<std::size_t>(mm)]) + std::abs(d[static_cast<std::size_t>(mm + 1)]);
                if (std::abs(e[static_cast<std::size_t>(mm)]) <= eps * dd) break;
            }
            if (mm == l) break;
            if (++iter > 60) throw Error(ErrorCode::NoConvergence, "tridiagonal QL did not converge");
            auto D = [&](int i) -> double& { return d[static_cast<std::size_t>(i)]; };
            auto E = [&](int i) -> double& { return e[static_cast<std::size_t>(i)]; };
            double g = (D(l + 1) - D(l)) / (2.0 * E(l));
            double r = std::hypot(g, 1.0);
            g = D(mm) - D(l) + E(l) / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, pp = 0.0;
            int i = mm - 1;
            bool underflow = false;
            for (; i >= l; --i) {
                const double f = s * E(i);
                const double b = c * E(i);
                r = std::hypot(f, g);
                E(i + 1) = r;
                if (r == 0.0) {
                    D(i + 1) -= pp;
                    E(mm) = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = D(i + 1) - pp;
                r = (D(i) - g) * s + 2.0 * c * b;
                pp = s * r;
                D(i + 1) = g + pp;
                g = c * r - b;
            }
            if (underflow) continue;
            D(l) -= pp;
            E(l) = g;
            E(mm) = 0.0;
        } while (true);
    }
    std::sort(d.begin(), d.end());
    return d;
}

Matrix companion_matrix(std::span<const double> c) {
    const int n = static_cast<int>(c.size());
    Matrix m(n);
    for (int j = 0; j < n; ++j) m(0, j) = -c[static_cast<std::size_t>(j)];
    for (int i = 1; i < n; ++i) m(i, i - 1) = 1.0;
    return m;
}

double max_real_part(std::span<const std::complex<double>> eig) {
    double r = -std::numeric_limits<double>::infinity();
    for (const auto& z : eig) r = std::max(r, z.real());
    return r;
}

}  // namespace opo
