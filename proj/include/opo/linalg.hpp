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

// Small dense complex matrices and their eigenvalues.

#include <complex>
#include <span>
#include <vector>

namespace opo {

class Matrix {
public:
    using value_type = std::complex<double>;

    Matrix() = default;
    explicit Matrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {}
    Matrix(int n, std::initializer_list<value_type> row_major);

    static Matrix identity(int n);
    /// Row-major real data of an n x n matrix.
    static Matrix from_real(int n, std::span<const double> row_major);

    int size() const noexcept { return n_; }
    value_type& operator()(int i, int j) { return a_[index(i, j)]; }
    const value_type& operator()(int i, int j) const { return a_[index(i, j)]; }

    value_type trace() const;
    bool is_real(double tol = 0.0) const;

private:
    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
    }

    int n_ = 0;
    std::vector<value_type> a_;
};

/// Eigenvalues via balancing, Householder reduction to Hessenberg form and
/// single-shift complex QR with Wilkinson shifts. Sorted by descending real
/// part, then descending imaginary part. Throws NoConvergence past the
/// iteration cap and NonFinite on non-finite input.
std::vector<std::complex<double>> eigenvalues_dense(const Matrix& m);

/// Eigenvalues of the Hermitian part of `m` (ascending), via Householder
/// tridiagonalization and implicit QL.
std::vector<double> eigenvalues_hermitian(const Matrix& m);

/// Companion matrix of the monic polynomial
/// x^n + c[0] x^(n-1) + ... + c[n-1].
Matrix companion_matrix(std::span<const double> c);

/// Largest real part of the spectrum.
double max_real_part(std::span<const std::complex<double>> eig);

}  // namespace opo
