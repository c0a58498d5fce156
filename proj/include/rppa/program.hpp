#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "rppa/auction.hpp"
#include "rppa/errors.hpp"
#include "rppa/scheduling.hpp"

namespace rppa {

// A deterministic advertiser-scheduling instance: maximize total surplus
// sum w[n][t] x[n][t] subject to at most one winner per round, eligibility
// (e[n][t] = 0 forces x = 0), optional demand minima, per-type minima, and
// win/budget caps. The blanket cap of one win per round already bounds total
// wins by T, so no separate total-rounds constraint is stored.
struct ScheduleProgram {
    int N = 0;
    int K = 1;
    long T = 0;
    std::vector<std::vector<double>> surplus;    // w[n][t]
    std::vector<std::vector<std::uint8_t>> eligible;
    std::vector<double> price;                   // quoted reserve per round
    std::vector<int> round_type;                 // realized type per round (0-based)
    std::vector<long> demand;                    // minimum wins per advertiser
    std::vector<std::vector<long>> type_target;  // y[n][k] minimum wins per type
    std::vector<long> win_cap;                   // max wins per advertiser (empty = none)
    std::vector<double> budget;                  // max spend per advertiser (empty = none)

    bool has_demands() const {
        for (long d : demand)
            if (d > 0) return true;
        for (const auto& row : type_target)
            for (long y : row)
                if (y > 0) return true;
        return false;
    }
    bool has_caps() const { return !win_cap.empty() || !budget.empty(); }

    long total_demand() const {
        long s = 0;
        for (long d : demand) s += d;
        for (const auto& row : type_target)
            for (long y : row) s += y;
        return s;
    }

    void validate() const {
        if (N < 1 || T < 1 || K < 1)
            throw std::invalid_argument("schedule program: dimensions must be positive");
        auto check_rows = [&](std::size_t rows, std::size_t cols, const char* what) {
            if (rows != static_cast<std::size_t>(N)) throw DimensionMismatch(std::string(what) + ": row count");
            (void)cols;
        };
        check_rows(surplus.size(), 0, "surplus");
        check_rows(eligible.size(), 0, "eligible");
        for (int n = 0; n < N; ++n) {
            if (static_cast<long>(surplus[static_cast<std::size_t>(n)].size()) != T ||
                static_cast<long>(eligible[static_cast<std::size_t>(n)].size()) != T)
                throw DimensionMismatch("schedule program: ragged surplus/eligible rows");
            for (double w : surplus[static_cast<std::size_t>(n)])
                if (!std::isfinite(w)) throw std::invalid_argument("schedule program: non-finite surplus");
        }
        if (static_cast<long>(price.size()) != T)
            throw DimensionMismatch("schedule program: price column length");
        if (static_cast<long>(round_type.size()) != T)
            throw DimensionMismatch("schedule program: round_type length");
        for (int k : round_type)
            if (k < 0 || k >= K) throw DimensionMismatch("schedule program: round_type out of range");
        if (static_cast<int>(demand.size()) != N)
            throw DimensionMismatch("schedule program: demand length");
        if (!type_target.empty()) {
            if (static_cast<int>(type_target.size()) != N)
                throw DimensionMismatch("schedule program: type_target rows");
            for (const auto& row : type_target)
                if (static_cast<int>(row.size()) != K)
                    throw DimensionMismatch("schedule program: type_target cols");
        }
        if (!win_cap.empty() && static_cast<int>(win_cap.size()) != N)
            throw DimensionMismatch("schedule program: win_cap length");
        if (!budget.empty() && static_cast<int>(budget.size()) != N)
            throw DimensionMismatch("schedule program: budget length");
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"N", N},       {"K", K},           {"T", T},
                            {"w", surplus}, {"e", eligible},    {"price", price},
                            {"round_type", round_type},         {"demand", demand}};
        if (!type_target.empty()) j["type_target"] = type_target;
        if (!win_cap.empty()) j["win_cap"] = win_cap;
        if (!budget.empty()) j["budget"] = budget;
        return j;
    }

    static ScheduleProgram from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw std::invalid_argument("program: expected a JSON object");
        static const char* known[] = {"N", "K", "T", "w", "e", "price", "round_type",
                                      "demand", "type_target", "win_cap", "budget"};
        for (const auto& [key, _] : j.items()) {
            bool ok = false;
            for (const char* k : known) ok |= (key == k);
            if (!ok) throw std::invalid_argument("program: unknown key '" + key + "'");
        }
        for (const char* k : {"N", "T", "w", "e"})
            if (!j.contains(k)) throw std::invalid_argument(std::string("program: missing key '") + k + "'");

        ScheduleProgram p;
        p.N = j.at("N").get<int>();
        p.K = j.value("K", 1);
        p.T = j.at("T").get<long>();
        p.surplus = j.at("w").get<std::vector<std::vector<double>>>();
        p.eligible = j.at("e").get<std::vector<std::vector<std::uint8_t>>>();
        p.price = j.contains("price") ? j.at("price").get<std::vector<double>>()
                                      : std::vector<double>(static_cast<std::size_t>(p.T), 0.0);
        p.round_type = j.contains("round_type")
                           ? j.at("round_type").get<std::vector<int>>()
                           : std::vector<int>(static_cast<std::size_t>(p.T), 0);
        p.demand = j.contains("demand") ? j.at("demand").get<std::vector<long>>()
                                        : std::vector<long>(static_cast<std::size_t>(p.N), 0);
        if (j.contains("type_target"))
            p.type_target = j.at("type_target").get<std::vector<std::vector<long>>>();
        if (j.contains("win_cap")) p.win_cap = j.at("win_cap").get<std::vector<long>>();
        if (j.contains("budget")) p.budget = j.at("budget").get<std::vector<double>>();
        p.validate();
        return p;
    }
};

// Surplus maximization with impression demands: w = v - q, eligibility v > q,
// at least demand[n] wins per advertiser.
inline ScheduleProgram build_p1(const ValuationTensor& values, double q,
                                const std::vector<long>& demand) {
    if (values.K() != 1) throw DimensionMismatch("build_p1: homogeneous values required");
    if (static_cast<int>(demand.size()) != values.N())
        throw DimensionMismatch("build_p1: demand length mismatch");
    for (long d : demand) {
        if (d < 0) throw std::invalid_argument("build_p1: demands must be >= 0");
        if (d >= values.T()) throw std::invalid_argument("build_p1: demand must be < T");
    }
    if (!(q >= 0.0)) throw std::invalid_argument("build_p1: q must be >= 0");

    ScheduleProgram p;
    p.N = values.N();
    p.T = values.T();
    p.K = 1;
    p.surplus.assign(static_cast<std::size_t>(p.N),
                     std::vector<double>(static_cast<std::size_t>(p.T), 0.0));
    p.eligible.assign(static_cast<std::size_t>(p.N),
                      std::vector<std::uint8_t>(static_cast<std::size_t>(p.T), 0));
    p.price.assign(static_cast<std::size_t>(p.T), q);
    p.round_type.assign(static_cast<std::size_t>(p.T), 0);
    p.demand = demand;
    for (int n = 0; n < p.N; ++n)
        for (long t = 0; t < p.T; ++t) {
            const double v = values.at(n, 0, t);
            p.surplus[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)] = v - q;
            p.eligible[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)] = v > q;
        }
    return p;
}

// Budget-capped surplus maximization: at most floor(B_n / q) wins each, which
// is the integer form of the spend cap at a uniform price.
inline ScheduleProgram build_p6(const ValuationTensor& values, double q,
                                const std::vector<double>& budgets) {
    if (!(q > 0.0)) throw DomainError("build_p6: q must be > 0");
    if (static_cast<int>(budgets.size()) != values.N())
        throw DimensionMismatch("build_p6: budget length mismatch");
    ScheduleProgram p = build_p1(values, q, std::vector<long>(static_cast<std::size_t>(values.N()), 0));
    p.budget = budgets;
    p.win_cap.reserve(budgets.size());
    for (double b : budgets) {
        if (!(b >= 0.0)) throw std::invalid_argument("build_p6: budgets must be >= 0");
        p.win_cap.push_back(static_cast<long>(std::floor(b / q + 1e-9)));
    }
    return p;
}

// Heterogeneous hindsight program: round t uses the realized type's reserve
// for surplus and eligibility; type_target[n][k] is a per-(advertiser, type)
// minimum win count, demand[n] an overall minimum.
inline ScheduleProgram build_p4(const ValuationTensor& values, const TypeSequence& types,
                                const ReservePolicy& policy, const std::vector<long>& demand,
                                const std::vector<std::vector<long>>& type_target) {
    if (types.T() != values.T()) throw DimensionMismatch("build_p4: type sequence length mismatch");
    if (static_cast<int>(demand.size()) != values.N())
        throw DimensionMismatch("build_p4: demand length mismatch");
    if (!type_target.empty()) {
        if (static_cast<int>(type_target.size()) != values.N())
            throw DimensionMismatch("build_p4: type_target rows mismatch");
        for (const auto& row : type_target)
            if (static_cast<int>(row.size()) != values.K())
                throw DimensionMismatch("build_p4: type_target cols mismatch");
    }

    ScheduleProgram p;
    p.N = values.N();
    p.T = values.T();
    p.K = values.K();
    p.surplus.assign(static_cast<std::size_t>(p.N),
                     std::vector<double>(static_cast<std::size_t>(p.T), 0.0));
    p.eligible.assign(static_cast<std::size_t>(p.N),
                      std::vector<std::uint8_t>(static_cast<std::size_t>(p.T), 0));
    p.price.resize(static_cast<std::size_t>(p.T));
    p.round_type = types.types;
    p.demand = demand;
    p.type_target = type_target;
    for (long t = 0; t < p.T; ++t) {
        const int k = types.types[static_cast<std::size_t>(t)];
        const double q = policy.reserve_for(k, p.K);
        p.price[static_cast<std::size_t>(t)] = q;
        for (int n = 0; n < p.N; ++n) {
            const double v = values.at(n, k, t);
            p.surplus[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)] = v - q;
            p.eligible[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)] = v > q;
        }
    }
    return p;
}

// The expectation-constrained program family, reduced by sampling.
enum class ProgramKind { P2, P3, P5, P7, P8 };

inline std::string program_kind_name(ProgramKind k) {
    switch (k) {
        case ProgramKind::P2: return "P2";
        case ProgramKind::P3: return "P3";
        case ProgramKind::P5: return "P5";
        case ProgramKind::P7: return "P7";
        case ProgramKind::P8: return "P8";
    }
    return "?";
}

inline ProgramKind parse_program_kind(const std::string& s) {
    for (ProgramKind k : {ProgramKind::P2, ProgramKind::P3, ProgramKind::P5, ProgramKind::P7,
                          ProgramKind::P8})
        if (program_kind_name(k) == s) return k;
    throw std::invalid_argument("unknown program kind '" + s + "'");
}

// Sample-average reduction: draw one seeded realization of the valuations
// (and item types for the heterogeneous kinds), then emit the deterministic
// counterpart with the expectation constraints enforced on that realization.
inline ScheduleProgram saa_reduce(const DspMarket& market, const ReservePolicy& reserve,
                                  ProgramKind kind) {
    RandomStream value_rng = RandomStream::substream(market.seed, stream_id::valuations);
    const ValuationTensor values =
        ValuationTensor::draw(market.advertisers, market.K(), market.T, value_rng);

    const int N = market.N();
    std::vector<long> demand(static_cast<std::size_t>(N), 0);
    std::vector<double> budgets(static_cast<std::size_t>(N), 0.0);
    std::vector<std::vector<long>> targets;
    for (int n = 0; n < N; ++n) {
        demand[static_cast<std::size_t>(n)] = market.advertisers[static_cast<std::size_t>(n)].demand;
        budgets[static_cast<std::size_t>(n)] =
            market.advertisers[static_cast<std::size_t>(n)].budget.value_or(
                std::numeric_limits<double>::infinity());
    }

    switch (kind) {
        case ProgramKind::P2:
            return build_p1(values, reserve.static_value(),
                            std::vector<long>(static_cast<std::size_t>(N), 0));
        case ProgramKind::P3:
            return build_p1(values, reserve.static_value(), demand);
        case ProgramKind::P7: {
            for (int n = 0; n < N; ++n)
                if (!market.advertisers[static_cast<std::size_t>(n)].budget)
                    throw std::invalid_argument("saa_reduce(P7): advertiser " +
                                                std::to_string(n + 1) + " has no budget");
            return build_p6(values, reserve.static_value(), budgets);
        }
        case ProgramKind::P5:
        case ProgramKind::P8: {
            RandomStream type_rng = RandomStream::substream(market.seed, stream_id::item_types);
            const TypeSequence types = draw_type_sequence(market.type_probs, market.T, type_rng);
            targets.assign(static_cast<std::size_t>(N),
                           std::vector<long>(static_cast<std::size_t>(market.K()), 0));
            for (int n = 0; n < N; ++n) {
                const auto& tt = market.advertisers[static_cast<std::size_t>(n)].type_targets;
                if (!tt.empty()) {
                    if (static_cast<int>(tt.size()) != market.K())
                        throw DimensionMismatch("saa_reduce: type_targets length mismatch");
                    targets[static_cast<std::size_t>(n)] = tt;
                }
            }
            if (kind == ProgramKind::P5)
                return build_p4(values, types, reserve, demand, targets);
            ScheduleProgram p = build_p4(values, types, reserve,
                                         std::vector<long>(static_cast<std::size_t>(N), 0),
                                         targets);
            bool any_budget = false;
            for (int n = 0; n < N; ++n)
                any_budget |= market.advertisers[static_cast<std::size_t>(n)].budget.has_value();
            if (any_budget) p.budget = budgets;
            return p;
        }
    }
    throw std::invalid_argument("saa_reduce: bad kind");
}

}  // namespace rppa
