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
#include <optional>
#include <string>

#include "simcap/errors.hpp"
#include "simcap/states.hpp"

namespace simcap {

/// h(x) = -x log2 x - (1-x) log2(1-x), with h(0) = h(1) = 0.
inline double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw OutOfRange("binary_entropy argument must lie in [0, 1], got " + std::to_string(x));
    }
    if (x == 0.0 || x == 1.0) return 0.0;
    return -(x * std::log2(x) + (1.0 - x) * std::log1p(-x) / std::log(2.0));
}

namespace detail {

/// 1 - h((1 - x)/2) for x in [-1, 1], accurate when |x| is tiny.
inline double entropy_deficit(double x) {
    x = std::abs(x);
    if (x >= 1.0) return 1.0;
    if (x < 1e-3) {
        // sum_k x^{2k} / (2k (2k-1) ln 2)
        const double x2 = x * x;
        double term = x2;
        double sum = 0;
        for (int k = 1; k <= 6; ++k) {
            sum += term / (2.0 * k * (2.0 * k - 1.0));
            term *= x2;
        }
        return sum / std::log(2.0);
    }
    return ((1.0 + x) * std::log1p(x) + (1.0 - x) * std::log1p(-x)) / (2.0 * std::log(2.0));
}

/// (p_dif / z)^M, evaluated in log-space. Infinity when z = 0.
inline double dif_to_eq_ratio(const CanonicalWeights &cw, int m) {
    const double z = cw.z();
    const double p = cw.p_dif();
    if (p <= 0) return 0.0;
    if (z <= 0) return INFINITY;
    return std::exp(m * (std::log(p) - std::log(z)));
}

/// x^M for x in [0, 1].
inline double unit_power(double x, int m) {
    if (x <= 0) return 0.0;
    return std::exp(m * std::log(x));
}

inline void require_block_size(int m) {
    if (m < 1) throw OutOfRange("block size M must be >= 1, got " + std::to_string(m));
}

}  // namespace detail

/// (lambda1 - lambda2)^2 - (1 - lambda1 - lambda2)(lambda1 + lambda2).
/// The protocol distills key iff this is strictly positive.
inline double condition_slack(const CanonicalWeights &cw) {
    const double diff = cw.lambda1() - cw.lambda2();
    return diff * diff - (1.0 - cw.lambda1() - cw.lambda2()) * (cw.lambda1() + cw.lambda2());
}

inline bool security_condition(const CanonicalWeights &cw) { return condition_slack(cw) > 0.0; }

namespace detail {

struct SplitProbability {
    double dif;  // eps_B
    double eq;   // 1 - eps_B, computed without cancellation
};

inline SplitProbability accepted_split(const CanonicalWeights &cw, int m) {
    require_block_size(m);
    const double r = dif_to_eq_ratio(cw, m);
    if (std::isinf(r)) return {1.0, 0.0};
    if (r <= 1.0) return {r / (1.0 + r), 1.0 / (1.0 + r)};
    const double inv = 1.0 / r;
    return {1.0 / (1.0 + inv), inv / (1.0 + inv)};
}

}  // namespace detail

/// Probability that Bob's accepted bit differs from Alice's after advantage
/// distillation over blocks of M pairs: p_dif^M / (z^M + p_dif^M).
inline double bob_error(const CanonicalWeights &cw, int m) { return detail::accepted_split(cw, m).dif; }

/// h(eps_B), accurate also when eps_B is within an ulp of 1.
inline double bob_error_entropy(const CanonicalWeights &cw, int m) {
    const auto split = detail::accepted_split(cw, m);
    return binary_entropy(std::min(split.dif, split.eq));
}

/// Devetak-Winter one-way rate I(A:B) - I(A:E) per accepted block, signed:
///   1 - h(eps_B) - (1 - eps_B) h((1 - Leq^M)/2) - eps_B h((1 - Ldif^M)/2).
inline double dw_rate(const CanonicalWeights &cw, int m) {
    const auto split = detail::accepted_split(cw, m);
    // Rearranged so that the small terms for large M do not cancel; h(eps_B)
    // is taken from the smaller of the two branch probabilities.
    return split.eq * detail::entropy_deficit(detail::unit_power(cw.lambda_eq(), m)) +
           split.dif * detail::entropy_deficit(detail::unit_power(cw.lambda_dif(), m)) -
           bob_error_entropy(cw, m);
}

/// Smallest M in [1, m_max] with a positive rate.
inline std::optional<int> minimal_block_size(const CanonicalWeights &cw, int m_max = 64) {
    detail::require_block_size(m_max);
    for (int m = 1; m <= m_max; ++m) {
        if (dw_rate(cw, m) > 0.0) return m;
    }
    return std::nullopt;
}

struct RateReport {
    int M = 1;
    double eps_B = 0;
    double dw_rate = 0;
    double p_accept = 0;
    /// Secret bits per initial pair: max(0, dw_rate) * p_accept / M.
    double yield = 0;
};

inline constexpr const char *kYieldDefinition = "p_accept * max(0, dw_rate) / M";

inline RateReport key_yield(const CanonicalWeights &cw, int m) {
    RateReport r;
    r.M = m;
    r.eps_B = bob_error(cw, m);
    r.dw_rate = dw_rate(cw, m);
    r.p_accept = detail::unit_power(cw.z(), m) + detail::unit_power(cw.p_dif(), m);
    r.yield = std::max(0.0, r.dw_rate) * r.p_accept / m;
    return r;
}

struct ThresholdResult {
    double lambda1 = 0;
    double qber = 0;
    int iterations = 0;
};

/// Bisects lambda1 in [1/2, 1] for the Werner state on the boundary of the
/// security condition. The result is within `tolerance` of the true root.
inline ThresholdResult werner_threshold(double tolerance) {
    if (!(tolerance > 0.0)) throw OutOfRange("tolerance must be positive");
    auto slack = [](double l1) { return condition_slack(canonicalize(werner(l1))); };
    double lo = 0.5;
    double hi = 1.0;
    ThresholdResult res;
    while (hi - lo > tolerance && res.iterations < 200) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (slack(mid) > 0.0 ? hi : lo) = mid;
        ++res.iterations;
    }
    res.lambda1 = 0.5 * (lo + hi);
    res.qber = werner_qber(res.lambda1);
    return res;
}

}  // namespace simcap
