// Copyright 2026 The simcap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "simcap/errors.hpp"

namespace simcap {

/// Structural tolerance for density matrices and ensembles.
inline constexpr double kStructuralTol = 1e-10;
/// Tolerance for identities that hold up to rounding.
inline constexpr double kIdentityTol = 1e-12;

using StateVector = Eigen::Vector4cd;
using Matrix4 = Eigen::Matrix4cd;

/// The Bell basis, in the order (Phi+, Phi-, Psi+, Psi-), expressed in the
/// computational product basis {|00>, |01>, |10>, |11>}.
inline std::array<StateVector, 4> bell_basis() {
    const double s = 1.0 / std::sqrt(2.0);
    std::array<StateVector, 4> basis;
    basis[0] << s, 0, 0, s;
    basis[1] << s, 0, 0, -s;
    basis[2] << 0, s, s, 0;
    basis[3] << 0, s, -s, 0;
    return basis;
}

/// Weights of a Bell-diagonal two-qubit state, indexed against bell_basis().
class BellWeights {
   public:
    /// Entries in [-1e-12, 0) are clamped to zero. Anything more negative, or
    /// a total that differs from one by more than `sum_tol`, is rejected.
    explicit BellWeights(std::array<double, 4> lambdas, double sum_tol = kIdentityTol) {
        for (double &l : lambdas) {
            if (!std::isfinite(l) || l < -kIdentityTol) {
                throw InvalidWeights("Bell weight " + std::to_string(l) + " is negative or not finite");
            }
            l = std::max(l, 0.0);
        }
        const double total = lambdas[0] + lambdas[1] + lambdas[2] + lambdas[3];
        if (std::abs(total - 1.0) > sum_tol) {
            throw InvalidWeights("Bell weights sum to " + std::to_string(total) + ", expected 1");
        }
        lambdas_ = lambdas;
    }

    const std::array<double, 4> &values() const { return lambdas_; }
    double operator[](std::size_t i) const { return lambdas_[i]; }

    bool operator==(const BellWeights &) const = default;

   private:
    std::array<double, 4> lambdas_{};
};

/// Bell weights permuted so that lambda1 is the largest, lambda2 the smallest
/// and lambda3 >= lambda4, together with the quantities the rate formulas use.
class CanonicalWeights {
   public:
    double lambda1() const { return lambdas_[0]; }
    double lambda2() const { return lambdas_[1]; }
    double lambda3() const { return lambdas_[2]; }
    double lambda4() const { return lambdas_[3]; }
    const std::array<double, 4> &values() const { return lambdas_; }

    /// Probability that Alice's and Bob's computational-basis outcomes agree.
    double z() const { return lambdas_[0] + lambdas_[1]; }
    double p_eq() const { return z(); }
    double p_dif() const { return lambdas_[2] + lambdas_[3]; }
    double lambda_eq() const { return lambda_eq_; }
    double lambda_dif() const { return lambda_dif_; }

    /// permutation()[k] is the index in the source BellWeights that ended up
    /// in canonical slot k.
    const std::array<std::size_t, 4> &permutation() const { return perm_; }

    BellWeights as_weights() const { return BellWeights(lambdas_); }

   private:
    friend CanonicalWeights canonicalize(const BellWeights &w);
    CanonicalWeights() = default;

    std::array<double, 4> lambdas_{};
    std::array<std::size_t, 4> perm_{};
    double lambda_eq_ = 0;
    double lambda_dif_ = 0;
};

/// Orders the weights into canonical form. Ties are broken deterministically:
/// lambda1 is the first maximum, lambda2 the last minimum, and the remaining
/// two keep their relative order when equal.
inline CanonicalWeights canonicalize(const BellWeights &w) {
    const auto &v = w.values();
    std::size_t imax = 0;
    for (std::size_t i = 1; i < 4; ++i) {
        if (v[i] > v[imax]) imax = i;
    }
    std::size_t imin = 4;
    for (std::size_t i = 4; i-- > 0;) {
        if (i == imax) continue;
        if (imin == 4 || v[i] < v[imin]) imin = i;
    }
    std::array<std::size_t, 2> rest{};
    std::size_t k = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i != imax && i != imin) rest[k++] = i;
    }
    if (v[rest[1]] > v[rest[0]]) std::swap(rest[0], rest[1]);

    CanonicalWeights cw;
    cw.perm_ = {imax, imin, rest[0], rest[1]};
    for (std::size_t s = 0; s < 4; ++s) cw.lambdas_[s] = v[cw.perm_[s]];

    const double eq_sum = cw.lambdas_[0] + cw.lambdas_[1];
    const double dif_sum = cw.lambdas_[2] + cw.lambdas_[3];
    cw.lambda_eq_ = eq_sum > 0 ? std::abs(cw.lambdas_[0] - cw.lambdas_[1]) / eq_sum : 0.0;
    cw.lambda_dif_ = dif_sum > 0 ? std::abs(cw.lambdas_[2] - cw.lambdas_[3]) / dif_sum : 0.0;
    if (cw.lambda_dif_ > cw.lambda_eq_ + kIdentityTol) {
        throw InvariantViolation("canonical weights have Lambda_dif > Lambda_eq");
    }
    return cw;
}

/// Two-qubit density matrix in the computational product basis.
class DensityMatrix {
   public:
    explicit DensityMatrix(const Matrix4 &m, double tol = kStructuralTol) : m_(m) {
        if (!m.allFinite()) throw InvalidDensity("density matrix has non-finite entries");
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) {
            throw InvalidDensity("density matrix is not Hermitian");
        }
        if (std::abs(m.trace() - std::complex<double>(1.0)) > tol) {
            throw InvalidDensity("density matrix trace is not 1");
        }
        const Matrix4 herm = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix4> solver(herm, Eigen::EigenvaluesOnly);
        if (solver.eigenvalues().minCoeff() < -tol) {
            throw InvalidDensity("density matrix is not positive semidefinite");
        }
    }

    const Matrix4 &matrix() const { return m_; }

   private:
    Matrix4 m_;
};

/// sum_i lambda_i |Bell_i><Bell_i|.
inline DensityMatrix bell_diagonal_density(const BellWeights &w) {
    const auto basis = bell_basis();
    Matrix4 m = Matrix4::Zero();
    for (std::size_t i = 0; i < 4; ++i) m += w[i] * basis[i] * basis[i].adjoint();
    return DensityMatrix(m);
}

/// Reads Bell weights from a density matrix that is already Bell-diagonal.
/// Throws NotBellDiagonal if any off-diagonal Bell-basis element exceeds `tol`.
inline BellWeights weights_from_density(const DensityMatrix &rho, double tol = kStructuralTol) {
    const auto basis = bell_basis();
    Matrix4 u;
    for (Eigen::Index i = 0; i < 4; ++i) u.col(i) = basis[static_cast<std::size_t>(i)];
    const Matrix4 in_bell = u.adjoint() * rho.matrix() * u;
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            if (i != j && std::abs(in_bell(i, j)) > tol) {
                throw NotBellDiagonal("Bell-basis element (" + std::to_string(i) + "," + std::to_string(j) +
                                      ") has magnitude " + std::to_string(std::abs(in_bell(i, j))));
            }
        }
    }
    std::array<double, 4> l{};
    for (Eigen::Index i = 0; i < 4; ++i) l[static_cast<std::size_t>(i)] = in_bell(i, i).real();
    return BellWeights(l, tol);
}

/// Werner family: (lambda1, (1-lambda1)/3, (1-lambda1)/3, (1-lambda1)/3).
/// Values below 1/4 describe valid states whose largest weight is not lambda1;
/// they are accepted and reordered by canonicalize().
inline BellWeights werner(double lambda1) {
    if (!(lambda1 >= 0.0 && lambda1 <= 1.0)) {
        throw OutOfRange("Werner lambda1 must lie in [0, 1], got " + std::to_string(lambda1));
    }
    const double tail = (1.0 - lambda1) / 3.0;
    return BellWeights({lambda1, tail, tail, tail});
}

/// Six-state QBER of a Werner state.
inline double werner_qber(double lambda1) { return 2.0 * (1.0 - lambda1) / 3.0; }

/// Inverse of werner_qber().
inline BellWeights werner_from_qber(double qber) {
    if (!(qber >= 0.0 && qber <= 0.75)) {
        throw OutOfRange("QBER must lie in [0, 3/4], got " + std::to_string(qber));
    }
    return werner(std::clamp(1.0 - 1.5 * qber, 0.0, 1.0));
}

/// A Bell-diagonal two-qubit state is entangled iff its largest weight exceeds 1/2.
inline bool is_entangled(const CanonicalWeights &cw) { return cw.lambda1() > 0.5; }

/// Non-normalized vector on Eve's side, in her basis {|1>, |2>, |3>, |4>}.
struct EveVector {
    std::array<double, 4> amplitudes{};

    double dot(const EveVector &other) const {
        double s = 0;
        for (std::size_t i = 0; i < 4; ++i) s += amplitudes[i] * other.amplitudes[i];
        return s;
    }
    double squared_norm() const { return dot(*this); }
};

/// Overlap of the normalized vectors; zero if either vector vanishes.
inline double normalized_overlap(const EveVector &a, const EveVector &b) {
    const double na = a.squared_norm();
    const double nb = b.squared_norm();
    if (na <= 0 || nb <= 0) return 0.0;
    return a.dot(b) / std::sqrt(na * nb);
}

/// Eve's conditional states psi_x after Alice and Bob measure outcome x = AB.
struct EveVectors {
    EveVector psi00, psi11, psi01, psi10;
};

inline EveVectors eve_vectors(const CanonicalWeights &cw) {
    const double a = std::sqrt(cw.lambda1());
    const double b = std::sqrt(cw.lambda2());
    const double c = std::sqrt(cw.lambda3());
    const double d = std::sqrt(cw.lambda4());
    return EveVectors{
        .psi00 = {{a, b, 0, 0}},
        .psi11 = {{a, -b, 0, 0}},
        .psi01 = {{0, 0, c, d}},
        .psi10 = {{0, 0, c, -d}},
    };
}

}  // namespace simcap
