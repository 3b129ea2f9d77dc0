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

#include "simcap/rates.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "simcap/sampling.hpp"
#include "test_oracles.hpp"

using namespace simcap;

namespace {

CanonicalWeights cw_of(std::array<double, 4> l) { return canonicalize(BellWeights(l)); }

const double kThreshold = (5 + 3 * std::sqrt(5.0)) / 20;

}  // namespace

TEST(rates, binary_entropy) {
    EXPECT_EQ(binary_entropy(0), 0);
    EXPECT_EQ(binary_entropy(1), 0);
    EXPECT_NEAR(binary_entropy(0.5), 1, 1e-15);
    EXPECT_NEAR(binary_entropy(0.2764), 0.85050, 1e-4);
    EXPECT_NEAR(binary_entropy(0.2764), 0.850499063501405, 1e-12);
    EXPECT_THROW(binary_entropy(-0.1), OutOfRange);
    EXPECT_THROW(binary_entropy(1.5), OutOfRange);
}

TEST(rates, security_condition) {
    EXPECT_TRUE(security_condition(cw_of({1, 0, 0, 0})));
    EXPECT_FALSE(security_condition(cw_of({0.25, 0.25, 0.25, 0.25})));
    // On the Werner boundary both sides equal 1/5.
    const auto boundary = canonicalize(werner(kThreshold));
    EXPECT_NEAR(condition_slack(boundary), 0, 1e-15);
    const double d = boundary.lambda1() - boundary.lambda2();
    EXPECT_NEAR(d * d, 0.2, 1e-15);
}

TEST(rates, condition_identity_property) {
    for (std::uint64_t k = 0; k < 20000; ++k) {
        BlockStream rng(21, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        const double z = cw.z();
        const double d = cw.lambda1() - cw.lambda2();
        ASSERT_NEAR(condition_slack(cw), d * d - z * (1 - z), 1e-14);
    }
}

TEST(rates, bob_error_examples) {
    for (int m : {1, 3, 17}) EXPECT_EQ(bob_error(cw_of({1, 0, 0, 0}), m), 0);
    const auto w6 = canonicalize(werner(0.6));
    EXPECT_NEAR(bob_error(w6, 1), 0.4 / 1.5, 1e-12);
    EXPECT_NEAR(bob_error(w6, 2), 0.116788, 1e-6);
    EXPECT_THROW(bob_error(w6, 0), OutOfRange);
}

TEST(rates, bob_error_matches_enumeration) {
    for (std::uint64_t k = 0; k < 200; ++k) {
        BlockStream rng(7, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        for (int m = 1; m <= 6; ++m) {
            const auto brute = reference::enumerate_block(cw, m);
            ASSERT_NEAR(bob_error(cw, m), brute.eps_b, 1e-12);
            ASSERT_NEAR(key_yield(cw, m).p_accept, brute.p_accept, 1e-12);
        }
    }
}

TEST(rates, bob_error_decreases_in_m) {
    for (std::uint64_t k = 0; k < 2000; ++k) {
        BlockStream rng(8, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        if (!is_entangled(cw)) continue;
        double prev = bob_error(cw, 1);
        for (int m = 2; m <= 64; ++m) {
            const double e = bob_error(cw, m);
            if (prev > 0) {
                ASSERT_LT(e, prev);
            }
            prev = e;
        }
        ASSERT_LE(prev, std::pow(cw.p_dif() / cw.z(), 64) * 1.0000001);
    }
}

TEST(rates, dw_rate_examples) {
    EXPECT_NEAR(dw_rate(cw_of({1, 0, 0, 0}), 1), 1, 1e-15);
    EXPECT_NEAR(dw_rate(cw_of({0.25, 0.25, 0.25, 0.25}), 1), -1, 1e-15);
    const auto w8 = canonicalize(werner(0.8));
    EXPECT_NEAR(dw_rate(w8, 1), -0.0389205950315934, 1e-12);
    EXPECT_NEAR(dw_rate(w8, 2), 0.2424, 1e-3);
    EXPECT_NEAR(dw_rate(w8, 2), 0.242400200510520, 1e-12);
}

TEST(rates, dw_rate_matches_plain_formula) {
    for (std::uint64_t k = 0; k < 5000; ++k) {
        BlockStream rng(9, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        for (int m = 1; m <= 20; ++m) {
            const double plain = reference::closed_form_rate(cw.lambda1(), cw.lambda2(), cw.lambda3(), cw.lambda4(), m);
            ASSERT_NEAR(dw_rate(cw, m), plain, 1e-10) << "k=" << k << " M=" << m;
        }
    }
}

TEST(rates, dw_rate_at_most_one) {
    for (std::uint64_t k = 0; k < 20000; ++k) {
        BlockStream rng(10, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        for (int m : {1, 2, 5, 20, 64}) ASSERT_LT(dw_rate(cw, m), 1.0);
    }
    EXPECT_EQ(dw_rate(cw_of({1, 0, 0, 0}), 7), 1.0);
}

TEST(rates, minimal_block_size_examples) {
    EXPECT_EQ(minimal_block_size(cw_of({1, 0, 0, 0}), 8), 1);
    EXPECT_EQ(minimal_block_size(canonicalize(werner(0.8)), 64), 2);
    EXPECT_FALSE(minimal_block_size(cw_of({0.25, 0.25, 0.25, 0.25}), 64).has_value());
    EXPECT_THROW(minimal_block_size(cw_of({1, 0, 0, 0}), 0), OutOfRange);
}

// Away from the boundary the first positive M stays modest, but for slack just
// above 0.01 it can exceed 64 (about 115 was the largest seen while building
// this test), so the cap here is 256.
TEST(rates, minimal_block_size_exists_iff_condition) {
    int positive = 0;
    for (std::uint64_t k = 0; positive < 3000; ++k) {
        BlockStream rng(12, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        if (!is_entangled(cw) || std::abs(condition_slack(cw)) <= 0.01) continue;
        const bool cond = security_condition(cw);
        positive += cond;
        ASSERT_EQ(minimal_block_size(cw, 256).has_value(), cond) << "k=" << k;
    }
}

TEST(rates, minimal_block_size_absent_when_condition_fails) {
    for (std::uint64_t k = 0; k < 5000; ++k) {
        BlockStream rng(13, k);
        const auto cw = canonicalize(random_bell_weights(rng));
        if (security_condition(cw)) continue;
        ASSERT_FALSE(minimal_block_size(cw, 64).has_value());
    }
}

TEST(rates, key_yield) {
    const auto one = key_yield(cw_of({1, 0, 0, 0}), 1);
    EXPECT_EQ(one.yield, 1.0);
    EXPECT_EQ(one.p_accept, 1.0);

    const auto w8 = key_yield(canonicalize(werner(0.8)), 2);
    EXPECT_NEAR(w8.p_accept, 0.768889, 1e-6);
    EXPECT_NEAR(w8.yield, 0.0932, 1e-4);
    EXPECT_NEAR(w8.yield, std::max(0.0, w8.dw_rate) * w8.p_accept / 2, 1e-15);

    const auto neg = key_yield(canonicalize(werner(0.8)), 1);
    EXPECT_LT(neg.dw_rate, 0);
    EXPECT_EQ(neg.yield, 0);
}

TEST(rates, werner_threshold) {
    const auto r = werner_threshold(1e-9);
    EXPECT_NEAR(r.lambda1, kThreshold, 1e-9);
    EXPECT_NEAR(r.qber, 0.276393202250021, 1e-8);
    EXPECT_TRUE(security_condition(canonicalize(werner(r.lambda1 + 1e-6))));
    EXPECT_FALSE(security_condition(canonicalize(werner(r.lambda1 - 1e-6))));

    EXPECT_NEAR(werner_threshold(1e-3).lambda1, 0.585, 1e-3);
    EXPECT_THROW(werner_threshold(0), OutOfRange);
}
