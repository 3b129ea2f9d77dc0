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

// Command-line front end. Every subcommand writes to caller-supplied streams
// and returns its exit code, so the whole surface can be driven in-process:
//   0 success, 1 check failure, 2 usage or validation error, 3 I/O error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "simcap/attack.hpp"
#include "simcap/errors.hpp"
#include "simcap/oracle.hpp"
#include "simcap/rates.hpp"
#include "simcap/sampling.hpp"
#include "simcap/sim.hpp"
#include "simcap/states.hpp"

namespace simcap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

inline constexpr const char *kThreadsEnv = "SIMCAP_THREADS";

/// Weight vectors whose sum is off by at most this much are renormalized.
inline constexpr double kNormalizeTol = 1e-3;

class IoError : public Error {
   public:
    using Error::Error;
};

using json = nlohmann::ordered_json;

/// %.12g; the CSV number format.
inline std::string fmt12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

struct ParsedWeights {
    BellWeights weights;
    bool normalized = false;
};

/// Accepts "a,b,c,d", a JSON array "[a,b,c,d]", or "werner:x".
inline ParsedWeights parse_weights(const std::string &text) {
    if (text.rfind("werner:", 0) == 0) {
        const std::string arg = text.substr(7);
        std::size_t used = 0;
        double l1 = 0;
        try {
            l1 = std::stod(arg, &used);
        } catch (const std::exception &) {
            throw InvalidWeights("cannot parse Werner parameter '" + arg + "'");
        }
        if (used != arg.size()) throw InvalidWeights("trailing characters in '" + arg + "'");
        return {werner(l1), false};
    }

    std::vector<double> vals;
    const auto first = text.find_first_not_of(" \t");
    if (first != std::string::npos && text[first] == '[') {
        try {
            const auto j = nlohmann::json::parse(text);
            vals = j.get<std::vector<double>>();
        } catch (const nlohmann::json::exception &e) {
            throw InvalidWeights(std::string("bad JSON weight array: ") + e.what());
        }
    } else {
        std::stringstream ss(text);
        for (std::string field; std::getline(ss, field, ',');) {
            std::size_t used = 0;
            try {
                vals.push_back(std::stod(field, &used));
            } catch (const std::exception &) {
                throw InvalidWeights("cannot parse weight '" + field + "'");
            }
            if (field.find_first_not_of(" \t", used) != std::string::npos) {
                throw InvalidWeights("trailing characters in weight '" + field + "'");
            }
        }
    }
    if (vals.size() != 4) throw InvalidWeights("expected 4 weights, got " + std::to_string(vals.size()));

    std::array<double, 4> l{};
    double total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        l[i] = vals[i];
        total += vals[i];
    }
    if (!std::isfinite(total) || std::abs(total - 1.0) > kNormalizeTol) {
        throw InvalidWeights("weights sum to " + fmt12(total) + "; must be within " + fmt12(kNormalizeTol) + " of 1");
    }
    const bool normalized = std::abs(total - 1.0) > kIdentityTol;
    if (normalized) {
        for (double &x : l) x /= total;
    }
    return {BellWeights(l, 1e-9), normalized};
}

inline unsigned default_threads() {
    if (const char *env = std::getenv(kThreadsEnv)) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception &) {
        }
    }
    return 1;
}

inline json canonical_json(const CanonicalWeights &cw) {
    return {{"lambda1", cw.lambda1()}, {"lambda2", cw.lambda2()},       {"lambda3", cw.lambda3()},
            {"lambda4", cw.lambda4()}, {"z", cw.z()},                   {"p_dif", cw.p_dif()},
            {"Lambda_eq", cw.lambda_eq()}, {"Lambda_dif", cw.lambda_dif()}};
}

/// Full report for one state with a per-M table for M = 1..m_max.
inline json analysis_json(const ParsedWeights &pw, int m_max) {
    if (m_max < 1) throw OutOfRange("--m-max must be >= 1");
    const CanonicalWeights cw = canonicalize(pw.weights);
    json j;
    j["input"] = pw.weights.values();
    j["normalized"] = pw.normalized;
    j["canonical"] = canonical_json(cw);
    j["entangled"] = is_entangled(cw);
    j["security_condition"] = security_condition(cw);
    j["condition_slack"] = condition_slack(cw);
    const auto min_m = minimal_block_size(cw, m_max);
    j["minimal_M"] = min_m ? json(*min_m) : json(nullptr);
    j["m_max"] = m_max;
    j["yield_definition"] = kYieldDefinition;
    json table = json::array();
    for (int m = 1; m <= m_max; ++m) {
        const RateReport r = key_yield(cw, m);
        const AttackReport a = analyze_attack(cw, m);
        table.push_back({{"M", m},
                         {"eps_B", r.eps_B},
                         {"dw_rate", r.dw_rate},
                         {"p_accept", r.p_accept},
                         {"yield", r.yield},
                         {"eps_eq", a.eps_eq},
                         {"eps_dif", a.eps_dif},
                         {"flip_prob", a.flip_prob},
                         {"attack_rate", a.k_arrow},
                         {"broken", a.in_regime ? json(a.broken) : json(nullptr)}});
    }
    j["table"] = std::move(table);
    return j;
}

inline void render_analysis(const json &j, const std::string &format, std::ostream &out) {
    if (format == "json") {
        out << j.dump(2) << '\n';
        return;
    }
    if (format == "csv") {
        out << "M,eps_B,dw_rate,p_accept,yield,eps_eq,eps_dif,attack_rate\n";
        for (const auto &row : j["table"]) {
            out << row["M"].get<int>();
            for (const char *k : {"eps_B", "dw_rate", "p_accept", "yield", "eps_eq", "eps_dif", "attack_rate"}) {
                out << ',' << fmt12(row[k].get<double>());
            }
            out << '\n';
        }
        return;
    }
    const auto &c = j["canonical"];
    out << "canonical weights: " << fmt12(c["lambda1"]) << ' ' << fmt12(c["lambda2"]) << ' ' << fmt12(c["lambda3"])
        << ' ' << fmt12(c["lambda4"]) << '\n';
    out << "z = " << fmt12(c["z"]) << ", Lambda_eq = " << fmt12(c["Lambda_eq"])
        << ", Lambda_dif = " << fmt12(c["Lambda_dif"]) << '\n';
    if (j["normalized"].get<bool>()) out << "note: input weights were renormalized to sum to 1\n";
    out << "entangled: " << (j["entangled"].get<bool>() ? "yes" : "no") << '\n';
    out << "security condition: " << (j["security_condition"].get<bool>() ? "true" : "false")
        << " (slack " << fmt12(j["condition_slack"]) << ")\n";
    out << "minimal M: ";
    if (j["minimal_M"].is_null()) {
        out << "none up to " << j["m_max"].get<int>() << '\n';
    } else {
        out << j["minimal_M"].get<int>() << '\n';
    }
    const std::array<const char *, 5> cols{"eps_B", "dw_rate", "eps_eq", "attack_rate", "yield"};
    out << std::setw(4) << "M";
    for (const char *k : cols) out << ' ' << std::setw(19) << k;
    out << '\n';
    for (const auto &row : j["table"]) {
        out << std::setw(4) << row["M"].get<int>();
        for (const char *k : cols) out << ' ' << std::setw(19) << fmt12(row[k].get<double>());
        out << '\n';
    }
    out << "yield = " << kYieldDefinition << '\n';
}

struct AnalyzeOptions {
    std::string lambda;
    int m_max = 64;
    std::string format = "text";
};

inline int cmd_analyze(const AnalyzeOptions &o, std::ostream &out) {
    render_analysis(analysis_json(parse_weights(o.lambda), o.m_max), o.format, out);
    return kExitOk;
}

struct WernerOptions {
    std::optional<double> lambda1;
    std::optional<double> qber;
    int m_max = 64;
    std::string format = "text";
};

inline int cmd_werner(const WernerOptions &o, std::ostream &out) {
    if (o.lambda1.has_value() == o.qber.has_value()) throw OutOfRange("give exactly one of --lambda1 and --qber");
    const BellWeights w = o.lambda1 ? werner(*o.lambda1) : werner_from_qber(*o.qber);
    json j;
    j["family"] = "werner";
    j["lambda1"] = w[0];
    j["qber"] = werner_qber(w[0]);
    if (w[0] < 0.25) j["warning"] = "lambda1 < 1/4: lambda1 is not the largest weight";
    const json analysis = analysis_json({w, false}, o.m_max);
    for (auto it = analysis.begin(); it != analysis.end(); ++it) j[it.key()] = it.value();
    if (o.format == "text") {
        out << "Werner lambda1 = " << fmt12(w[0]) << ", QBER = " << fmt12(werner_qber(w[0])) << '\n';
        if (j.contains("warning")) out << "warning: " << j["warning"].get<std::string>() << '\n';
    }
    render_analysis(j, o.format, out);
    return kExitOk;
}

struct ThresholdOptions {
    std::string family = "werner";
    double tol = 1e-9;
    std::string format = "text";
};

inline int cmd_threshold(const ThresholdOptions &o, std::ostream &out) {
    if (o.family != "werner") throw OutOfRange("only the werner family is supported");
    if (!(o.tol > 0.0)) throw OutOfRange("--tol must be positive");
    const ThresholdResult r = werner_threshold(o.tol);
    if (o.format == "json") {
        json j{{"family", o.family},
               {"tolerance", o.tol},
               {"lambda1", r.lambda1},
               {"qber", r.qber},
               {"iterations", r.iterations},
               {"closed_form", (5.0 + 3.0 * std::sqrt(5.0)) / 20.0}};
        out << j.dump(2) << '\n';
    } else {
        const int digits = std::clamp(static_cast<int>(std::ceil(-std::log10(o.tol))), 3, 15);
        out << std::fixed << std::setprecision(digits) << "lambda1* = " << r.lambda1 << '\n'
            << "QBER* = " << r.qber << '\n';
        out.unsetf(std::ios::floatfield);
    }
    return kExitOk;
}

struct ScanOptions {
    double from = 0.25;
    double to = 1.0;
    double step = 0.01;
    int m_max = 64;
    std::string out_path;  // empty: stdout
};

inline void write_scan(const ScanOptions &o, std::ostream &out) {
    out << "lambda1,qber,condition,min_M,best_rate,attack_rate_M1\n";
    const auto count = static_cast<long>(std::floor((o.to - o.from) / o.step + 1e-9)) + 1;
    for (long k = 0; k < count; ++k) {
        const double l1 = std::min(o.to, o.from + static_cast<double>(k) * o.step);
        const CanonicalWeights cw = canonicalize(werner(l1));
        const auto min_m = minimal_block_size(cw, o.m_max);
        double best = -INFINITY;
        for (int m = 1; m <= o.m_max; ++m) best = std::max(best, dw_rate(cw, m));
        out << fmt12(l1) << ',' << fmt12(werner_qber(l1)) << ',' << (security_condition(cw) ? "true" : "false") << ','
            << (min_m ? std::to_string(*min_m) : "") << ',' << fmt12(best) << ',' << fmt12(attack_rate(cw, 1)) << '\n';
    }
}

inline int cmd_scan(const ScanOptions &o, std::ostream &out) {
    if (!(o.from >= 0.25 && o.to <= 1.0 && o.from <= o.to)) throw OutOfRange("scan range must satisfy 1/4 <= from <= to <= 1");
    if (!(o.step > 0.0)) throw OutOfRange("--step must be positive");
    if (o.m_max < 1) throw OutOfRange("--m-max must be >= 1");
    if (o.out_path.empty()) {
        write_scan(o, out);
        return kExitOk;
    }
    std::ofstream f(o.out_path);
    if (!f) throw IoError("cannot open " + o.out_path + " for writing");
    write_scan(o, f);
    f.close();
    if (!f) throw IoError("failed writing " + o.out_path);
    return kExitOk;
}

struct SimulateOptions {
    std::string lambda;
    int m = 1;
    std::uint64_t blocks = 100000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string format = "json";
    std::string transcript_path;
};

inline int cmd_simulate(const SimulateOptions &o, std::ostream &out) {
    const ParsedWeights pw = parse_weights(o.lambda);
    SimConfig cfg{canonicalize(pw.weights), o.m, o.blocks, o.seed};
    Transcript transcript;
    const bool want_transcript = !o.transcript_path.empty();
    const SimEstimates est = run_protocol(cfg, o.threads, want_transcript ? &transcript : nullptr);
    if (want_transcript) {
        std::ofstream f(o.transcript_path);
        if (!f) throw IoError("cannot open " + o.transcript_path + " for writing");
        write_transcript(f, transcript);
        f.close();
        if (!f) throw IoError("failed writing " + o.transcript_path);
    }
    json j = to_json(est);
    j["canonical"] = canonical_json(cfg.cw);
    j["expected"] = {{"eps_B", bob_error(cfg.cw, o.m)},
                     {"p_accept", key_yield(cfg.cw, o.m).p_accept},
                     {"eps_eq", eve_errors(cfg.cw, o.m).eq}};
    if (o.format == "json") {
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    auto show = [&](const char *name, const json &v) {
        out << name << " = ";
        if (v.is_null()) {
            out << "n/a\n";
        } else {
            out << fmt12(v["value"]) << " +/- " << fmt12(v["half_width"]) << '\n';
        }
    };
    out << "blocks " << est.blocks << ", accepted " << est.accepted_blocks << ", rejected " << est.rejected_blocks << '\n';
    show("p_accept_hat", j["p_accept_hat"]);
    show("eps_B_hat", j["eps_B_hat"]);
    show("eps_eq_hat", j["eps_eq_hat"]);
    if (est.mi_AB_hat) out << "mi_AB_hat = " << fmt12(*est.mi_AB_hat) << '\n';
    if (est.mi_AE_hat) out << "mi_AE_hat = " << fmt12(*est.mi_AE_hat) << '\n';
    return kExitOk;
}

struct OracleCheckOptions {
    std::uint64_t states = 1000;
    int m_max = 20;
    std::uint64_t seed = 1;
    double tol = 1e-9;
    std::string lambda;  // nonempty: check this state only
};

inline int cmd_oracle_check(const OracleCheckOptions &o, std::ostream &out) {
    if (o.m_max < 1) throw OutOfRange("--m-max must be >= 1");
    if (o.states < 1 && o.lambda.empty()) throw OutOfRange("--states must be >= 1");
    if (!(o.tol > 0.0)) throw OutOfRange("--tol must be positive");
    std::vector<BellWeights> ws;
    if (!o.lambda.empty()) {
        ws.push_back(parse_weights(o.lambda).weights);
    } else {
        for (std::uint64_t k = 0; k < o.states; ++k) {
            BlockStream rng(o.seed, k);
            ws.push_back(random_bell_weights(rng));
        }
    }
    double worst = 0;
    std::array<double, 4> worst_state{};
    int worst_m = 1;
    for (const BellWeights &w : ws) {
        const CanonicalWeights cw = canonicalize(w);
        for (int m = 1; m <= o.m_max; ++m) {
            const double d = std::abs(dw_rate(cw, m) - oracle_rate(cw, m));
            if (d > worst || !std::isfinite(d)) {
                worst = d;
                worst_state = cw.values();
                worst_m = m;
            }
        }
    }
    const bool pass = worst <= o.tol;
    json j{{"states", ws.size()},
           {"m_max", o.m_max},
           {"tolerance", o.tol},
           {"max_abs_diff", worst},
           {"worst", {{"canonical", worst_state}, {"M", worst_m}}},
           {"pass", pass}};
    out << j.dump(2) << '\n';
    return pass ? kExitOk : kExitCheckFailed;
}

struct VerifyBoundOptions {
    std::vector<double> z;  // explicit grid; overrides the range
    double z_from = 0.5;
    double z_to = 1.0;
    double z_step = 0.01;
    int m_max = 64;
    unsigned threads = 1;
};

inline int cmd_verify_bound(const VerifyBoundOptions &o, std::ostream &out) {
    std::vector<double> grid = o.z;
    if (grid.empty()) {
        if (!(o.z_step > 0.0)) throw OutOfRange("--z-step must be positive");
        const auto count = static_cast<long>(std::floor((o.z_to - o.z_from) / o.z_step + 1e-9)) + 1;
        for (long k = 0; k < count; ++k) grid.push_back(std::min(o.z_to, o.z_from + static_cast<double>(k) * o.z_step));
    }
    if (o.m_max < 1) throw OutOfRange("--m-max must be >= 1");
    std::vector<int> ms(static_cast<std::size_t>(o.m_max));
    for (int m = 1; m <= o.m_max; ++m) ms[static_cast<std::size_t>(m - 1)] = m;
    const BoundReport r = verify_bound_inequality(grid, ms, o.threads);
    json viol = json::array();
    for (const auto &v : r.violations) viol.push_back({{"z", v.z}, {"M", v.M}, {"lhs", v.lhs}, {"rhs", v.rhs}});
    const bool pass = r.violations.empty();
    json j{{"z_points", grid.size()},  {"m_max", o.m_max},         {"checked", r.checked},
           {"violations", viol},       {"min_margin", r.min_margin}, {"max_margin", r.max_margin},
           {"pass", pass}};
    out << j.dump(2) << '\n';
    return pass ? kExitOk : kExitCheckFailed;
}

/// Parses `args` (without the program name) and dispatches.
inline int run(std::vector<std::string> args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Secret-key analysis of Bell-diagonal two-qubit states under advantage distillation", "simcap"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    const unsigned env_threads = default_threads();

    AnalyzeOptions analyze;
    auto *a = app.add_subcommand("analyze", "Rates, attack and minimal block size for one state");
    a->add_option("--lambda", analyze.lambda, "Bell weights: a,b,c,d | [a,b,c,d] | werner:x")->required();
    a->add_option("--m-max", analyze.m_max, "Largest block size to tabulate")->check(CLI::PositiveNumber);
    a->add_option("--format", analyze.format)->check(CLI::IsMember({"json", "csv", "text"}));

    WernerOptions wern;
    auto *w = app.add_subcommand("werner", "Analyze a Werner state by lambda1 or QBER");
    double w_l1 = 0, w_q = 0;
    auto *w_l1_opt = w->add_option("--lambda1", w_l1, "Weight of Phi+");
    auto *w_q_opt = w->add_option("--qber", w_q, "Six-state QBER");
    w_l1_opt->excludes(w_q_opt);
    w->add_option("--m-max", wern.m_max)->check(CLI::PositiveNumber);
    w->add_option("--format", wern.format)->check(CLI::IsMember({"json", "csv", "text"}));

    ThresholdOptions thr;
    auto *t = app.add_subcommand("threshold", "Critical Werner weight and QBER");
    t->add_option("--family", thr.family)->check(CLI::IsMember({"werner"}));
    t->add_option("--tol", thr.tol, "Bisection tolerance");
    t->add_option("--format", thr.format)->check(CLI::IsMember({"json", "text"}));

    ScanOptions scan;
    auto *s = app.add_subcommand("scan", "CSV sweep over Werner states");
    s->add_option("--from", scan.from);
    s->add_option("--to", scan.to);
    s->add_option("--step", scan.step);
    s->add_option("--m-max", scan.m_max);
    s->add_option("--out", scan.out_path, "Output file (default stdout)");

    SimulateOptions sim;
    sim.threads = env_threads;
    auto *sm = app.add_subcommand("simulate", "Monte Carlo run of the protocol with the optimal attack");
    sm->add_option("--lambda", sim.lambda)->required();
    sm->add_option("--m", sim.m, "Block size")->check(CLI::PositiveNumber);
    sm->add_option("--blocks", sim.blocks)->check(CLI::PositiveNumber);
    sm->add_option("--seed", sim.seed);
    sm->add_option("--threads", sim.threads, std::string("Worker threads (default $") + kThreadsEnv + " or 1)")
        ->check(CLI::PositiveNumber);
    sm->add_option("--format", sim.format)->check(CLI::IsMember({"json", "text"}));
    sm->add_option("--transcript", sim.transcript_path, "Write the public-channel transcript here");

    OracleCheckOptions orc;
    auto *oc = app.add_subcommand("oracle-check", "Compare the closed-form rate against the spectral oracle");
    oc->add_option("--states", orc.states);
    oc->add_option("--m-max", orc.m_max);
    oc->add_option("--seed", orc.seed);
    oc->add_option("--tol", orc.tol);
    oc->add_option("--lambda", orc.lambda, "Check a single state instead of random ones");

    VerifyBoundOptions vb;
    vb.threads = env_threads;
    auto *v = app.add_subcommand("verify-bound", "Check the eps_eq <= eps_B bound on a (z, M) grid");
    v->add_option("--z", vb.z, "Explicit comma-separated z values")->delimiter(',');
    v->add_option("--z-from", vb.z_from);
    v->add_option("--z-to", vb.z_to);
    v->add_option("--z-step", vb.z_step);
    v->add_option("--m-max", vb.m_max);
    v->add_option("--threads", vb.threads)->check(CLI::PositiveNumber);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*a) return cmd_analyze(analyze, out);
        if (*w) {
            if (*w_l1_opt) wern.lambda1 = w_l1;
            if (*w_q_opt) wern.qber = w_q;
            return cmd_werner(wern, out);
        }
        if (*t) return cmd_threshold(thr, out);
        if (*s) return cmd_scan(scan, out);
        if (*sm) return cmd_simulate(sim, out);
        if (*oc) return cmd_oracle_check(orc, out);
        if (*v) return cmd_verify_bound(vb, out);
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const InvariantViolation &e) {
        err << "internal error: " << e.what() << '\n';
        return kExitCheckFailed;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace simcap::cli
