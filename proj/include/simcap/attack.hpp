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
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "simcap/errors.hpp"
#include "simcap/rates.hpp"
#include "simcap/states.hpp"

namespace simcap {

/// Minimum error for telling apart two equiprobable pure states, each given as
/// M copies of a single-copy state with overlap c: 1/2 - 1/2 sqrt(1 - c^{2M}).
inline double helstrom_error(double c, int m) {
    if (!(c >= 0.0 && c <= 1.0)) {
        throw OutOfRange("overlap must lie in [0, 1], got " + std::to_string(c));
    }
    detail::require_block_size(m);
    const double c2m = detail::unit_power(c, 2 * m);
    // 1/2 (1 - sqrt(1 - x)) written without cancellation.
    return 0.5 * c2m / (1.0 + std::sqrt(std::max(0.0, 1.0 - c2m)));
}

struct EveErrors {
    double eq = 0;
    double dif = 0;
};

/// Eve's guessing error for s_A on each branch of her eq/dif measurement.
inline EveErrors eve_errors(const CanonicalWeights &cw, int m) {
    EveErrors e{helstrom_error(cw.lambda_eq(), m), helstrom_error(cw.lambda_dif(), m)};
    if (e.dif > e.eq) throw InvariantViolation("eps_dif exceeds eps_eq");
    return e;
}

/// Probability q with which Eve flips her guess on the dif branch so that both
/// branches end up with error eps_eq: eps_dif (1 - q) + (1 - eps_dif) q = eps_eq.
inline double equalize(double eps_eq, double eps_dif) {
    if (!(eps_dif >= 0.0 && eps_eq <= 0.5 && eps_dif <= eps_eq)) {
        throw OutOfRange("equalize needs 0 <= eps_dif <= eps_eq <= 1/2");
    }
    const double denom = 1.0 - 2.0 * eps_dif;
    if (denom <= 0.0) return 0.0;
    return std::clamp((eps_eq - eps_dif) / denom, 0.0, 1.0);
}

/// One-way key rate against the equalizing attack: h(eps_eq) - h(eps_B).
inline double attack_rate(const CanonicalWeights &cw, int m) {
    return binary_entropy(eve_errors(cw, m).eq) - bob_error_entropy(cw, m);
}

/// True iff the attack leaves no positive one-way rate (eps_eq <= eps_B).
/// Only meaningful for entangled states; separable inputs are refused.
inline bool protocol_broken(const CanonicalWeights &cw, int m) {
    if (!is_entangled(cw)) {
        throw RegimeError("protocol_broken requires lambda1 > 1/2, got " + std::to_string(cw.lambda1()));
    }
    return eve_errors(cw, m).eq <= bob_error(cw, m);
}

struct AttackReport {
    int M = 1;
    double eps_eq = 0;
    double eps_dif = 0;
    double flip_prob = 0;
    double k_arrow = 0;
    bool broken = false;
    /// False when lambda1 <= 1/2; `broken` is then extrapolated.
    bool in_regime = true;
};

inline AttackReport analyze_attack(const CanonicalWeights &cw, int m) {
    const EveErrors e = eve_errors(cw, m);
    const double eps_b = bob_error(cw, m);
    AttackReport r;
    r.M = m;
    r.eps_eq = e.eq;
    r.eps_dif = e.dif;
    r.flip_prob = equalize(e.eq, e.dif);
    r.k_arrow = binary_entropy(e.eq) - bob_error_entropy(cw, m);
    r.broken = e.eq <= eps_b;
    r.in_regime = is_entangled(cw);
    return r;
}

/// Upper bound on eps_eq that holds whenever the security condition fails:
/// 1/2 - 1/2 sqrt(1 - ((1-z)/z)^M).
inline double bound_lhs(double z, int m) {
    const double x = detail::unit_power((1.0 - z) / z, m);
    return 0.5 * x / (1.0 + std::sqrt(std::max(0.0, 1.0 - x)));
}

/// eps_B expressed through z alone: (1-z)^M / (z^M + (1-z)^M).
inline double bound_rhs(double z, int m) {
    if (z >= 1.0) return 0.0;
    const double r = std::exp(m * (std::log1p(-z) - std::log(z)));
    return r / (1.0 + r);
}

struct BoundViolation {
    double z = 0;
    int M = 0;
    double lhs = 0;
    double rhs = 0;
};

struct BoundReport {
    std::vector<BoundViolation> violations;  // ordered by (z index, M index)
    std::size_t checked = 0;
    /// min and max of rhs - lhs over the grid.
    double min_margin = std::numeric_limits<double>::infinity();
    double max_margin = -std::numeric_limits<double>::infinity();
};

/// Checks bound_lhs(z, M) <= bound_rhs(z, M) on the product grid. A pair is a
/// violation only if lhs exceeds rhs by more than `tol`.
inline BoundReport verify_bound_inequality(std::span<const double> z_grid, std::span<const int> m_list,
                                           unsigned threads = 1, double tol = 1e-15) {
    if (z_grid.empty() || m_list.empty()) throw DomainError("z grid and M list must be nonempty");
    for (double z : z_grid) {
        if (!(z >= 0.5 && z <= 1.0)) throw DomainError("z = " + std::to_string(z) + " lies outside [1/2, 1]");
    }
    for (int m : m_list) {
        if (m < 1) throw DomainError("M must be positive");
    }

    const std::size_t n = z_grid.size();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<BoundReport> parts(threads);
    auto work = [&](unsigned t) {
        BoundReport &part = parts[t];
        const std::size_t begin = n * t / threads;
        const std::size_t end = n * (t + 1) / threads;
        for (std::size_t i = begin; i < end; ++i) {
            for (int m : m_list) {
                const double lhs = bound_lhs(z_grid[i], m);
                const double rhs = bound_rhs(z_grid[i], m);
                const double margin = rhs - lhs;
                part.min_margin = std::min(part.min_margin, margin);
                part.max_margin = std::max(part.max_margin, margin);
                ++part.checked;
                if (lhs > rhs + tol) part.violations.push_back({z_grid[i], m, lhs, rhs});
            }
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    }

    BoundReport out;
    for (const BoundReport &p : parts) {
        out.violations.insert(out.violations.end(), p.violations.begin(), p.violations.end());
        out.checked += p.checked;
        out.min_margin = std::min(out.min_margin, p.min_margin);
        out.max_margin = std::max(out.max_margin, p.max_margin);
    }
    return out;
}

}  // namespace simcap
