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

#include <array>
#include <cmath>

#include "simcap/rng.hpp"
#include "simcap/states.hpp"

namespace simcap {

/// Uniform draw from the probability simplex (flat Dirichlet), via normalized
/// exponential variates.
inline BellWeights random_bell_weights(BlockStream &rng) {
    std::array<double, 4> e{};
    double total = 0;
    for (double &x : e) {
        x = -std::log1p(-rng.uniform());
        total += x;
    }
    for (double &x : e) x /= total;
    // Push the ulp-level residue onto the largest entry.
    double sum = e[0] + e[1] + e[2] + e[3];
    std::size_t imax = 0;
    for (std::size_t i = 1; i < 4; ++i) {
        if (e[i] > e[imax]) imax = i;
    }
    e[imax] += 1.0 - sum;
    return BellWeights(e);
}

}  // namespace simcap
