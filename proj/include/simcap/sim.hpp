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
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "simcap/attack.hpp"
#include "simcap/errors.hpp"
#include "simcap/rates.hpp"
#include "simcap/rng.hpp"
#include "simcap/states.hpp"

namespace simcap {

// ---------------------------------------------------------------------------
// Public-channel transcript.

/// Alice -> Bob: X_i = A_i xor s_A for the M pairs of one block.
struct XStringMsg {
    std::uint64_t block_index = 0;
    std::vector<std::uint8_t> bits;
    bool operator==(const XStringMsg &) const = default;
};

/// Bob -> Alice: whether all M parities agreed.
struct VerdictMsg {
    std::uint64_t block_index = 0;
    bool accept = false;
    bool operator==(const VerdictMsg &) const = default;
};

using Message = std::variant<XStringMsg, VerdictMsg>;

struct Transcript {
    std::vector<Message> messages;
    bool operator==(const Transcript &) const = default;
};

/// Every XString must be followed by exactly one Verdict for the same block.
inline void validate_transcript(const Transcript &t) {
    const auto &msgs = t.messages;
    if (msgs.size() % 2 != 0) throw ParseError("transcript has an unpaired message");
    for (std::size_t i = 0; i < msgs.size(); i += 2) {
        const auto *x = std::get_if<XStringMsg>(&msgs[i]);
        const auto *v = std::get_if<VerdictMsg>(&msgs[i + 1]);
        if (x == nullptr || v == nullptr) throw ParseError("expected an XString followed by a Verdict");
        if (x->block_index != v->block_index) throw ParseError("Verdict block index does not match its XString");
        for (auto b : x->bits) {
            if (b > 1) throw ParseError("XString carries a non-binary value");
        }
    }
}

namespace detail {

inline std::string bits_to_hex(std::span<const std::uint8_t> bits) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        unsigned nibble = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            nibble <<= 1;
            if (i + k < bits.size()) nibble |= bits[i + k] & 1u;
        }
        out.push_back(kDigits[nibble]);
    }
    return out;
}

inline std::vector<std::uint8_t> hex_to_bits(const std::string &hex, std::size_t nbits) {
    if (hex.size() != (nbits + 3) / 4) throw ParseError("hex payload length does not match bit count");
    std::vector<std::uint8_t> bits;
    bits.reserve(nbits);
    for (char c : hex) {
        unsigned v;
        if (c >= '0' && c <= '9') {
            v = static_cast<unsigned>(c - '0');
        } else if (c >= 'a' && c <= 'f') {
            v = static_cast<unsigned>(c - 'a' + 10);
        } else {
            throw ParseError(std::string("bad hex digit '") + c + "'");
        }
        for (int k = 3; k >= 0; --k) {
            if (bits.size() < nbits) {
                bits.push_back(static_cast<std::uint8_t>((v >> k) & 1u));
            } else if ((v >> k) & 1u) {
                throw ParseError("nonzero padding in hex payload");
            }
        }
    }
    return bits;
}

inline std::uint64_t parse_u64(const std::string &s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError("expected an unsigned integer, got '" + s + "'");
    }
    return std::stoull(s);
}

}  // namespace detail

/// One line per message:
///   X,<block_index>,<M>,<hex>    bits packed MSB-first, zero padded
///   V,<block_index>,<0|1>
inline void write_transcript(std::ostream &out, const Transcript &t) {
    for (const Message &m : t.messages) {
        if (const auto *x = std::get_if<XStringMsg>(&m)) {
            out << "X," << x->block_index << ',' << x->bits.size() << ',' << detail::bits_to_hex(x->bits) << '\n';
        } else {
            const auto &v = std::get<VerdictMsg>(m);
            out << "V," << v.block_index << ',' << (v.accept ? 1 : 0) << '\n';
        }
    }
}

inline Transcript read_transcript(std::istream &in) {
    Transcript t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
        if (fields.empty()) throw ParseError("empty transcript record");
        if (fields[0] == "X" && fields.size() == 4) {
            const auto nbits = detail::parse_u64(fields[2]);
            t.messages.emplace_back(XStringMsg{detail::parse_u64(fields[1]), detail::hex_to_bits(fields[3], nbits)});
        } else if (fields[0] == "V" && fields.size() == 3 && (fields[2] == "0" || fields[2] == "1")) {
            t.messages.emplace_back(VerdictMsg{detail::parse_u64(fields[1]), fields[2] == "1"});
        } else {
            throw ParseError("malformed transcript record: " + line);
        }
    }
    validate_transcript(t);
    return t;
}

// ---------------------------------------------------------------------------
// Protocol parties.

enum class Parity { eq, dif };

struct OutcomePair {
    int a = 0;
    int b = 0;
};

namespace detail {

inline OutcomePair sample_with_agreement(double p_same, BlockStream &rng) {
    const bool differ = !rng.bernoulli(p_same);
    const int a = rng.bit();
    return {a, a ^ static_cast<int>(differ)};
}

}  // namespace detail

/// Computational-basis outcomes of one Bell-diagonal pair: A is uniform and
/// B = A with probability z.
inline OutcomePair sample_outcome_pair(const CanonicalWeights &cw, BlockStream &rng) {
    return detail::sample_with_agreement(cw.z(), rng);
}

/// Same, for weights that have not been reordered: B = A with probability
/// lambda(Phi+) + lambda(Phi-).
inline OutcomePair sample_outcome_pair(const BellWeights &w, BlockStream &rng) {
    return detail::sample_with_agreement(w[0] + w[1], rng);
}

struct BlockResult {
    bool accepted = false;
    int s_a = 0;
    /// Bob's common value of B_i xor X_i; only meaningful when accepted.
    int s_b = 0;
    Parity parity = Parity::eq;
    XStringMsg xstring;
    VerdictMsg verdict;
};

/// Alice announces X_i = A_i xor s_A; Bob accepts iff B_i xor X_i is the same
/// for every i.
inline BlockResult distill_block(std::span<const std::uint8_t> alice, std::span<const std::uint8_t> bob, int s_a,
                                 std::uint64_t block_index = 0) {
    if (alice.size() != bob.size() || alice.empty()) throw ConfigError("block lists must be nonempty and equal length");
    BlockResult r;
    r.s_a = s_a & 1;
    r.xstring.block_index = block_index;
    r.xstring.bits.resize(alice.size());
    for (std::size_t i = 0; i < alice.size(); ++i) r.xstring.bits[i] = static_cast<std::uint8_t>((alice[i] ^ r.s_a) & 1);

    const int first = (bob[0] ^ r.xstring.bits[0]) & 1;
    r.accepted = true;
    for (std::size_t i = 1; i < bob.size(); ++i) {
        if (((bob[i] ^ r.xstring.bits[i]) & 1) != first) {
            r.accepted = false;
            break;
        }
    }
    r.s_b = first;
    r.parity = r.s_a == r.s_b ? Parity::eq : Parity::dif;
    r.verdict = {block_index, r.accepted};
    return r;
}

inline BlockResult run_block(const CanonicalWeights &cw, int m, BlockStream &rng, std::uint64_t block_index = 0) {
    detail::require_block_size(m);
    const int s_a = rng.bit();
    std::vector<std::uint8_t> alice(static_cast<std::size_t>(m));
    std::vector<std::uint8_t> bob(static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < alice.size(); ++i) {
        const OutcomePair p = sample_outcome_pair(cw, rng);
        alice[i] = static_cast<std::uint8_t>(p.a);
        bob[i] = static_cast<std::uint8_t>(p.b);
    }
    return distill_block(alice, bob, s_a, block_index);
}

/// Eve's classical strategy after her eq/dif measurement and Helstrom
/// discrimination. With equalization on, the dif-branch guess is flipped with
/// probability flip_prob so both branches have error eps_eq.
struct EveStrategy {
    double eps_eq = 0;
    double eps_dif = 0;
    double flip_prob = 0;

    static EveStrategy optimal(const CanonicalWeights &cw, int m, bool equalized = true) {
        const EveErrors e = eve_errors(cw, m);
        return {e.eq, e.dif, equalized ? equalize(e.eq, e.dif) : 0.0};
    }
};

/// Eve's guess s_E for an accepted block. Her eq/dif outcome always matches
/// the block parity; the transcript is not consulted.
inline int eve_guess(Parity parity, int s_a, const EveStrategy &eve, BlockStream &rng) {
    const bool eq = parity == Parity::eq;
    int s_e = s_a ^ static_cast<int>(rng.bernoulli(eq ? eve.eps_eq : eve.eps_dif));
    if (!eq) s_e ^= static_cast<int>(rng.bernoulli(eve.flip_prob));
    return s_e;
}

inline int eve_guess(Parity parity, int s_a, const CanonicalWeights &cw, int m, BlockStream &rng) {
    return eve_guess(parity, s_a, EveStrategy::optimal(cw, m), rng);
}

// ---------------------------------------------------------------------------
// Estimation.

/// Plug-in Shannon mutual information (bits) of a contingency table.
template <std::size_t R, std::size_t C>
double estimate_mutual_information(const std::array<std::array<std::uint64_t, C>, R> &counts) {
    double n = 0;
    std::array<double, R> row{};
    std::array<double, C> col{};
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            const auto c = static_cast<double>(counts[i][j]);
            n += c;
            row[i] += c;
            col[j] += c;
        }
    }
    if (n <= 0) throw EmptyCounts("mutual information of an empty table");
    double mi = 0;
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            const auto c = static_cast<double>(counts[i][j]);
            if (c > 0) mi += c / n * std::log2(c * n / (row[i] * col[j]));
        }
    }
    return std::max(0.0, mi);
}

/// Proportion with a normal-approximation 95% half-width.
struct Estimate {
    double value = 0;
    double half_width = 0;

    static Estimate binomial(std::uint64_t hits, std::uint64_t n) {
        const double p = static_cast<double>(hits) / static_cast<double>(n);
        return {p, 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
    }
};

struct SimConfig {
    CanonicalWeights cw;
    int M = 1;
    std::uint64_t blocks = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (M < 1) throw ConfigError("M must be >= 1");
        if (blocks < 1) throw ConfigError("blocks must be >= 1");
    }
};

/// Indexed as joint_counts[s_A][s_B][s_E], accepted blocks only.
using JointCounts = std::array<std::array<std::array<std::uint64_t, 2>, 2>, 2>;

struct SimEstimates {
    int M = 1;
    std::uint64_t blocks = 0;
    std::uint64_t seed = 0;
    std::uint64_t accepted_blocks = 0;
    std::uint64_t rejected_blocks = 0;
    Estimate p_accept_hat;
    // Absent when no block was accepted.
    std::optional<Estimate> eps_B_hat;
    std::optional<Estimate> eps_eq_hat;
    std::optional<double> mi_AB_hat;
    std::optional<double> mi_AE_hat;
    JointCounts joint_counts{};
};

namespace detail {

struct Tally {
    std::uint64_t accepted = 0;
    JointCounts joint{};
};

inline void run_range(const SimConfig &cfg, const EveStrategy &eve, std::uint64_t begin, std::uint64_t end, Tally &tally,
                      Transcript *transcript) {
    for (std::uint64_t k = begin; k < end; ++k) {
        BlockStream rng(cfg.seed, k);
        BlockResult r = run_block(cfg.cw, cfg.M, rng, k);
        if (transcript != nullptr) {
            transcript->messages.emplace_back(std::move(r.xstring));
            transcript->messages.emplace_back(r.verdict);
        }
        if (!r.accepted) continue;
        const int s_e = eve_guess(r.parity, r.s_a, eve, rng);
        ++tally.accepted;
        ++tally.joint[r.s_a][r.s_b][s_e];
    }
}

}  // namespace detail

/// Runs `blocks` independent advantage-distillation attempts with Eve's
/// equalizing attack. Block k draws only from BlockStream(seed, k), so the
/// result is identical for any `threads`. If `transcript` is given it receives
/// every public message in block order.
inline SimEstimates run_protocol(const SimConfig &cfg, unsigned threads = 1, Transcript *transcript = nullptr) {
    cfg.validate();
    const EveStrategy eve = EveStrategy::optimal(cfg.cw, cfg.M);
    threads = static_cast<unsigned>(std::clamp<std::uint64_t>(threads, 1, cfg.blocks));

    std::vector<detail::Tally> tallies(threads);
    std::vector<Transcript> pieces(transcript != nullptr ? threads : 0);
    auto work = [&](unsigned t) {
        const std::uint64_t begin = cfg.blocks * t / threads;
        const std::uint64_t end = cfg.blocks * (t + 1) / threads;
        detail::run_range(cfg, eve, begin, end, tallies[t], transcript != nullptr ? &pieces[t] : nullptr);
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    }

    SimEstimates est;
    est.M = cfg.M;
    est.blocks = cfg.blocks;
    est.seed = cfg.seed;
    for (const auto &t : tallies) {
        est.accepted_blocks += t.accepted;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int e = 0; e < 2; ++e) est.joint_counts[a][b][e] += t.joint[a][b][e];
    }
    if (transcript != nullptr) {
        for (auto &p : pieces) {
            transcript->messages.insert(transcript->messages.end(), std::make_move_iterator(p.messages.begin()),
                                        std::make_move_iterator(p.messages.end()));
        }
    }
    est.rejected_blocks = cfg.blocks - est.accepted_blocks;
    est.p_accept_hat = Estimate::binomial(est.accepted_blocks, cfg.blocks);

    if (est.accepted_blocks > 0) {
        std::uint64_t bob_wrong = 0;
        std::uint64_t eve_wrong = 0;
        std::array<std::array<std::uint64_t, 2>, 2> ab{};
        std::array<std::array<std::uint64_t, 2>, 2> ae{};
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                for (int e = 0; e < 2; ++e) {
                    const auto c = est.joint_counts[a][b][e];
                    if (b != a) bob_wrong += c;
                    if (e != a) eve_wrong += c;
                    ab[a][b] += c;
                    ae[a][e] += c;
                }
            }
        }
        est.eps_B_hat = Estimate::binomial(bob_wrong, est.accepted_blocks);
        est.eps_eq_hat = Estimate::binomial(eve_wrong, est.accepted_blocks);
        est.mi_AB_hat = estimate_mutual_information(ab);
        est.mi_AE_hat = estimate_mutual_information(ae);
    }
    return est;
}

inline nlohmann::ordered_json to_json(const Estimate &e) {
    return {{"value", e.value}, {"half_width", e.half_width}};
}

inline nlohmann::ordered_json to_json(const SimEstimates &s) {
    auto opt = [](const auto &o) -> nlohmann::ordered_json {
        if (!o) return nullptr;
        if constexpr (std::is_same_v<std::decay_t<decltype(*o)>, Estimate>) {
            return to_json(*o);
        } else {
            return *o;
        }
    };
    nlohmann::ordered_json j;
    j["M"] = s.M;
    j["blocks"] = s.blocks;
    j["seed"] = s.seed;
    j["accepted_blocks"] = s.accepted_blocks;
    j["rejected_blocks"] = s.rejected_blocks;
    j["p_accept_hat"] = to_json(s.p_accept_hat);
    j["eps_B_hat"] = opt(s.eps_B_hat);
    j["eps_eq_hat"] = opt(s.eps_eq_hat);
    j["mi_AB_hat"] = opt(s.mi_AB_hat);
    j["mi_AE_hat"] = opt(s.mi_AE_hat);
    j["joint_counts"] = s.joint_counts;
    return j;
}

}  // namespace simcap
