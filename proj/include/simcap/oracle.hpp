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

// Spectral evaluation of Eve's Holevo information, used to cross-check the
// closed-form rate. Nothing here calls into rates.hpp.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "simcap/errors.hpp"
#include "simcap/states.hpp"

namespace simcap {

/// Mixture of pure states described by prior probabilities and the pairwise
/// overlaps of the normalized states.
struct WeightedEnsemble {
    std::vector<double> probabilities;
    Eigen::MatrixXd overlaps;

    void validate(double tol = kStructuralTol) const {
        const auto n = static_cast<Eigen::Index>(probabilities.size());
        if (n == 0) throw InvalidEnsemble("ensemble is empty");
        if (overlaps.rows() != n || overlaps.cols() != n) {
            throw InvalidEnsemble("overlap matrix does not match the number of states");
        }
        double total = 0;
        for (double p : probabilities) {
            if (!(p >= 0.0)) throw InvalidEnsemble("negative probability in ensemble");
            total += p;
        }
        if (std::abs(total - 1.0) > kIdentityTol) throw InvalidEnsemble("ensemble probabilities do not sum to 1");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(overlaps(i, i) - 1.0) > tol) throw InvalidEnsemble("overlap diagonal must be 1");
        }
        if ((overlaps - overlaps.transpose()).cwiseAbs().maxCoeff() > tol) {
            throw InvalidEnsemble("overlap matrix is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(overlaps, Eigen::EigenvaluesOnly);
        if (solver.eigenvalues().minCoeff() < -tol) throw InvalidEnsemble("overlap matrix is not PSD");
    }
};

/// Eigenvalues of G_ij = sqrt(p_i p_j) <i|j>, which coincide with the nonzero
/// spectrum of sum_i p_i |i><i|. Clamped to [0, 1], sorted in descending order.
inline std::vector<double> gram_spectrum(const WeightedEnsemble &ens) {
    ens.validate();
    const auto n = static_cast<Eigen::Index>(ens.probabilities.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            g(i, j) = std::sqrt(ens.probabilities[static_cast<std::size_t>(i)] *
                                ens.probabilities[static_cast<std::size_t>(j)]) *
                      ens.overlaps(i, j);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g, Eigen::EigenvaluesOnly);
    std::vector<double> spec(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ev = solver.eigenvalues()(i);
        if (ev < -kStructuralTol) throw InvalidEnsemble("Gram matrix has a negative eigenvalue");
        spec[static_cast<std::size_t>(i)] = std::clamp(ev, 0.0, 1.0);
    }
    std::sort(spec.begin(), spec.end(), std::greater<>());
    return spec;
}

/// -sum p log2 p over a probability vector, with 0 log 0 = 0.
inline double von_neumann_entropy(std::span<const double> spectrum) {
    double s = 0;
    for (double p : spectrum) {
        if (p > 0) s -= p * std::log2(p);
    }
    return s;
}

namespace oracle_detail {

// Order of the four accepted-block outcomes (s_A, s_B).
enum Outcome : std::size_t { k00 = 0, k11 = 1, k01 = 2, k10 = 3 };

struct BlockEnsemble {
    std::array<double, 4> prob{};  // P(s_A, s_B) over accepted blocks
    Eigen::Matrix4d overlaps;      // between Eve's normalized M-copy states
};

inline double power(double x, int m) {
    double r = 1.0;
    for (int i = 0; i < m; ++i) r *= x;
    return r;
}

inline BlockEnsemble block_ensemble(const CanonicalWeights &cw, int m) {
    if (m < 1) throw OutOfRange("block size M must be >= 1");
    const EveVectors v = eve_vectors(cw);
    const std::array<const EveVector *, 4> psi{&v.psi00, &v.psi11, &v.psi01, &v.psi10};

    BlockEnsemble be;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            be.overlaps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                i == j ? 1.0 : power(normalized_overlap(*psi[i], *psi[j]), m);
        }
    }

    // Each single-pair outcome x has probability |psi_x|^2 / 2; a block is
    // accepted when all M pairs agree on the eq/dif relation.
    std::array<double, 4> log_w{};
    double log_max = -INFINITY;
    for (std::size_t i = 0; i < 4; ++i) {
        const double n2 = psi[i]->squared_norm();
        log_w[i] = n2 > 0 ? m * std::log(n2) : -INFINITY;
        log_max = std::max(log_max, log_w[i]);
    }
    double total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        be.prob[i] = std::exp(log_w[i] - log_max);
        total += be.prob[i];
    }
    for (double &p : be.prob) p /= total;
    return be;
}

inline double state_entropy(const BlockEnsemble &be, std::span<const std::size_t> members) {
    WeightedEnsemble ens;
    const auto n = static_cast<Eigen::Index>(members.size());
    ens.overlaps.resize(n, n);
    double total = 0;
    for (std::size_t k : members) total += be.prob[k];
    if (total <= 0) return 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        ens.probabilities.push_back(be.prob[members[static_cast<std::size_t>(i)]] / total);
        for (Eigen::Index j = 0; j < n; ++j) {
            ens.overlaps(i, j) = be.overlaps(static_cast<Eigen::Index>(members[static_cast<std::size_t>(i)]),
                                             static_cast<Eigen::Index>(members[static_cast<std::size_t>(j)]));
        }
    }
    // Renormalizing can drift the sum by an ulp.
    const double s = std::accumulate(ens.probabilities.begin(), ens.probabilities.end(), 0.0);
    for (double &p : ens.probabilities) p /= s;
    const auto spec = gram_spectrum(ens);
    return von_neumann_entropy(spec);
}

}  // namespace oracle_detail

/// S(rho_E | s_A = a) for Eve's M-copy state over accepted blocks.
inline double eve_conditional_entropy(const CanonicalWeights &cw, int m, int s_a) {
    using namespace oracle_detail;
    const auto be = block_ensemble(cw, m);
    const std::array<std::size_t, 2> given0{k00, k01};
    const std::array<std::size_t, 2> given1{k11, k10};
    return state_entropy(be, s_a == 0 ? std::span<const std::size_t>(given0) : std::span<const std::size_t>(given1));
}

/// Holevo information between Alice's accepted bit and Eve's M-copy system:
/// S(rho_E) - 1/2 S(rho_E | s_A = 0) - 1/2 S(rho_E | s_A = 1).
inline double holevo_IAE(const CanonicalWeights &cw, int m) {
    using namespace oracle_detail;
    const auto be = block_ensemble(cw, m);
    const std::array<std::size_t, 4> all{k00, k11, k01, k10};
    const std::array<std::size_t, 2> given0{k00, k01};
    const std::array<std::size_t, 2> given1{k11, k10};
    const double p0 = be.prob[k00] + be.prob[k01];
    const double p1 = be.prob[k11] + be.prob[k10];
    return state_entropy(be, all) - p0 * state_entropy(be, given0) - p1 * state_entropy(be, given1);
}

/// I(s_A : s_B) computed from the joint distribution of accepted blocks.
inline double shannon_IAB(const CanonicalWeights &cw, int m) {
    using namespace oracle_detail;
    const auto be = block_ensemble(cw, m);
    // joint[a][b]
    const std::array<std::array<double, 2>, 2> joint{{{be.prob[k00], be.prob[k01]}, {be.prob[k10], be.prob[k11]}}};
    const std::array<double, 2> pa{joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]};
    const std::array<double, 2> pb{joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]};
    const std::array<double, 4> flat{joint[0][0], joint[0][1], joint[1][0], joint[1][1]};
    return von_neumann_entropy(pa) + von_neumann_entropy(pb) - von_neumann_entropy(flat);
}

/// I(A:B) - I(A:E) evaluated spectrally.
inline double oracle_rate(const CanonicalWeights &cw, int m) { return shannon_IAB(cw, m) - holevo_IAE(cw, m); }

}  // namespace simcap
