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

#include "simcap/attack.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "simcap/sampling.hpp"
#include "test_oracles.hpp"

using namespace simcap;

namespace {

const double kThreshold = (5 + 3 * std::sqrt(5.0)) / 20;

}  // namespace

TEST(attack, helstrom_error_examples) {
    EXPECT_EQ(helstrom_error(0, 1), 0);
    for (int m : {1, 4, 30}) EXPECT_EQ(helstrom_error(1, m), 0.5);
    EXPECT_NEAR(helstrom_error(7.0 / 11.0, 1), 0.114306, 1e-6);
    EXPECT_NEAR(helstrom_error(7.0 / 11.0, 1), 0.114305392080065, 1e-12);
    EXPECT_THROW(helstrom_error(1.01, 1), OutOfRange);
    EXPECT_THROW(helstrom_error(-0.01, 1), OutOfRange);
    EXPECT_THROW(helstrom_error(0.5, 0), OutOfRange);
}

TEST(attack, helstrom_error_monotone) {
    for (int m = 1; m <= 10; ++m) {
        double prev = -1;
        for (double c = 0; c <= 1.0; c += 0.01) {
            const double e = helstrom_error(c, m);
            ASSERT_GE(e, prev);
            if (c < 1) {
                ASSERT_LE(helstrom_error(c, m + 1), e);
            }
            prev = e;
        }
    }
}

// The closed form against an explicit trace-norm computation on the
// materialized M-copy states.
TEST(attack, eve_eq_error_matches_trace_norm) {
    for (std::uint64_t k = 0; k < 60; ++k) {
        BlockStream rng(31, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        for (int m = 1; m <= 3; ++m) {
            const reference::MaterializedEve eve(cw, m);
            ASSERT_NEAR(eve_errors(cw, m).eq, eve.eq_branch_error(), 1e-10);
        }
    }
}

TEST(attack, eve_errors_examples) {
    const auto pure = eve_errors(canonicalize(BellWeights({1, 0, 0, 0})), 1);
    EXPECT_EQ(pure.eq, 0.5);
    EXPECT_EQ(pure.dif, 0);
    for (double l1 : {0.3, 0.6, 0.9}) {
        for (int m : {1, 5}) EXPECT_NEAR(eve_errors(canonicalize(werner(l1)), m).dif, 0, 1e-15);
    }
    EXPECT_NEAR(eve_errors(canonicalize(werner(kThreshold)), 1).eq, 0.10693, 1e-5);
}

TEST(attack, equalize_examples) {
    EXPECT_EQ(equalize(0.2, 0.2), 0);
    EXPECT_EQ(equalize(0.3, 0), 0.3);
    EXPECT_NEAR(equalize(0.3, 0.1), 0.25, 1e-15);
    EXPECT_EQ(equalize(0.5, 0.5), 0);
    EXPECT_THROW(equalize(0.1, 0.3), OutOfRange);
}

TEST(attack, equalize_property) {
    for (std::uint64_t k = 0; k < 20000; ++k) {
        BlockStream rng(32, k);
        double a = 0.5 * rng.uniform();
        double b = 0.5 * rng.uniform();
        if (a < b) std::swap(a, b);
        const double q = equalize(a, b);
        ASSERT_NEAR(b * (1 - q) + (1 - b) * q, a, 1e-12);
    }
}

TEST(attack, attack_rate_examples) {
    EXPECT_NEAR(attack_rate(canonicalize(BellWeights({1, 0, 0, 0})), 1), 1, 1e-15);
    EXPECT_NEAR(attack_rate(canonicalize(werner(kThreshold)), 1), -0.35990, 1e-4);
    EXPECT_GT(attack_rate(canonicalize(werner(0.8)), 2), 0);
}

TEST(attack, protocol_broken) {
    EXPECT_TRUE(protocol_broken(canonicalize(werner(kThreshold)), 1));
    EXPECT_FALSE(protocol_broken(canonicalize(BellWeights({1, 0, 0, 0})), 1));
    EXPECT_FALSE(protocol_broken(canonicalize(werner(0.8)), 2));
    EXPECT_THROW(protocol_broken(canonicalize(werner(0.5)), 1), RegimeError);
    EXPECT_THROW(protocol_broken(canonicalize(BellWeights({0.25, 0.25, 0.25, 0.25})), 1), RegimeError);
}

TEST(attack, analyze_attack_report) {
    const auto cw = canonicalize(BellWeights({0.6, 0.05, 0.25, 0.1}));
    for (int m = 1; m <= 8; ++m) {
        const AttackReport r = analyze_attack(cw, m);
        EXPECT_LE(r.eps_dif, r.eps_eq);
        EXPECT_NEAR(r.flip_prob, (r.eps_eq - r.eps_dif) / (1 - 2 * r.eps_dif), 1e-15);
        EXPECT_EQ(r.broken, r.eps_eq <= bob_error(cw, m));
        EXPECT_NEAR(r.k_arrow, attack_rate(cw, m), 1e-15);
        EXPECT_TRUE(r.in_regime);
    }
    EXPECT_FALSE(analyze_attack(canonicalize(werner(0.4)), 1).in_regime);
}

TEST(attack, bound_is_upper_bound_when_condition_fails) {
    int tested = 0;
    for (std::uint64_t k = 0; k < 20000; ++k) {
        BlockStream rng(33, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        if (!is_entangled(cw) || security_condition(cw)) continue;
        ++tested;
        for (int m = 1; m <= 64; ++m) {
            ASSERT_LE(eve_errors(cw, m).eq, bound_lhs(cw.z(), m) + 1e-15);
            ASSERT_NEAR(bound_rhs(cw.z(), m), bob_error(cw, m), 1e-12);
        }
    }
    EXPECT_GT(tested, 100);
}

// Main result: failing the condition means the attack wins at every M; passing
// it means some M gives a positive rate. The sufficiency half uses a cap of 256
// because states with slack slightly above 0.01 may need M > 64.
TEST(attack, tightness_sandwich) {
    for (std::uint64_t k = 0; k < 20000; ++k) {
        BlockStream rng(34, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        if (!is_entangled(cw) || std::abs(condition_slack(cw)) <= 0.01) continue;
        if (security_condition(cw)) {
            ASSERT_TRUE(minimal_block_size(cw, 256).has_value()) << "k=" << k;
        } else {
            for (int m = 1; m <= 64; ++m) ASSERT_TRUE(protocol_broken(cw, m)) << "k=" << k << " M=" << m;
        }
    }
}

TEST(attack, verify_bound_examples) {
    const std::vector<double> ones{1.0};
    const std::vector<int> ms{1, 2, 10, 64};
    const auto at_one = verify_bound_inequality(ones, ms);
    EXPECT_TRUE(at_one.violations.empty());
    EXPECT_EQ(at_one.min_margin, 0);

    const std::vector<double> half{0.5};
    const std::vector<int> m1{1};
    EXPECT_EQ(bound_lhs(0.5, 1), 0.5);
    EXPECT_EQ(bound_rhs(0.5, 1), 0.5);
    EXPECT_TRUE(verify_bound_inequality(half, m1).violations.empty());

    EXPECT_NEAR(bound_lhs(0.72361, 1), 0.10692, 1e-5);
    EXPECT_NEAR(bound_rhs(0.72361, 1), 0.27639, 1e-5);

    const std::vector<double> bad{0.6, 0.4};
    EXPECT_THROW(verify_bound_inequality(bad, m1), DomainError);
    EXPECT_THROW(verify_bound_inequality(std::vector<double>{}, m1), DomainError);
}

TEST(attack, verify_bound_parallel_is_deterministic) {
    std::vector<double> z;
    for (int i = 0; i <= 250; ++i) z.push_back(0.5 + 0.002 * i);
    std::vector<int> ms;
    for (int m = 1; m <= 64; ++m) ms.push_back(m);
    const auto serial = verify_bound_inequality(z, ms, 1);
    const auto parallel = verify_bound_inequality(z, ms, 7);
    EXPECT_EQ(serial.checked, z.size() * ms.size());
    EXPECT_EQ(parallel.checked, serial.checked);
    EXPECT_EQ(parallel.min_margin, serial.min_margin);
    EXPECT_EQ(parallel.max_margin, serial.max_margin);
    EXPECT_TRUE(serial.violations.empty());
}
