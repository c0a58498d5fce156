#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rppa/distributions.hpp"
#include "rppa/errors.hpp"
#include "rppa/prng.hpp"
#include "rppa/reserve.hpp"

namespace rppa {

// One posted-price round. The buyer accepts only when the valuation strictly
// exceeds the quoted price; ties are rejections.
struct RoundOutcome {
    long round = 0;
    int type = 0;  // 0-based item type
    double reserve = 0.0;
    double valuation = 0.0;
    bool accepted = false;
    double seller_gain = 0.0;
    double buyer_gain = 0.0;
};

inline RoundOutcome run_ppa_round(double valuation, double reserve, long round = 0, int type = 0) {
    if (!(valuation >= 0.0) || !(reserve >= 0.0))
        throw std::invalid_argument("run_ppa_round: valuation and reserve must be >= 0");
    RoundOutcome out;
    out.round = round;
    out.type = type;
    out.reserve = reserve;
    out.valuation = valuation;
    out.accepted = valuation > reserve;
    if (out.accepted) {
        out.seller_gain = reserve;
        out.buyer_gain = valuation - reserve;
    }
    return out;
}

// Realized item type per round (0-based indices into an ItemTypeProfile).
struct TypeSequence {
    std::vector<int> types;

    long T() const { return static_cast<long>(types.size()); }
};

// I.i.d. categorical draws; one uniform is consumed per round regardless of K.
inline TypeSequence draw_type_sequence(const std::vector<double>& probs, long T,
                                       RandomStream& rng) {
    if (T < 1) throw std::invalid_argument("draw_type_sequence: T must be >= 1");
    if (probs.empty()) throw std::invalid_argument("draw_type_sequence: empty probabilities");
    TypeSequence seq;
    seq.types.reserve(static_cast<std::size_t>(T));
    const int K = static_cast<int>(probs.size());
    for (long t = 0; t < T; ++t) {
        const double u = rng.next_unit();
        double cum = 0.0;
        int k = K - 1;
        for (int i = 0; i < K; ++i) {
            cum += probs[static_cast<std::size_t>(i)];
            if (u < cum) {
                k = i;
                break;
            }
        }
        seq.types.push_back(k);
    }
    return seq;
}

inline TypeSequence draw_type_sequence(const ItemTypeProfile& profile, long T, RandomStream& rng) {
    return draw_type_sequence(profile.p, T, rng);
}

struct MarketConfig {
    long T = 0;
    ItemTypeProfile profile;
    std::uint64_t seed = 0;
    ReservePolicy policy;

    MarketConfig(long rounds, ItemTypeProfile prof, std::uint64_t s, ReservePolicy pol)
        : T(rounds), profile(std::move(prof)), seed(s), policy(std::move(pol)) {
        if (T < 1) throw std::invalid_argument("market config: T must be >= 1");
    }

    nlohmann::json to_json() const {
        return {{"T", T},
                {"seed", seed},
                {"profile", profile.to_json()},
                {"policy", policy.to_json()}};
    }
    static MarketConfig from_json(const nlohmann::json& j) {
        ValuationDistribution::require_keys(j, {"T", "seed", "profile", "policy"},
                                            "market config");
        return MarketConfig(j.at("T").get<long>(),
                            ItemTypeProfile::from_json(j.at("profile")),
                            j.at("seed").get<std::uint64_t>(),
                            ReservePolicy::from_json(j.at("policy")));
    }
};

struct AdvertiserStats {
    int id = 1;  // 1-based in reports
    long impressions = 0;
    double revenue_total = 0.0;  // accumulated surplus (v - price)
    double spend = 0.0;
    bool demand_met = true;
    bool budget_respected = true;
};

struct SimulationReport {
    std::string scenario;
    std::string q_or_policy;
    long rounds = 0;
    std::uint64_t seed = 0;
    double seller_revenue_total = 0.0;
    double buyer_revenue_total = 0.0;
    long impressions_total = 0;
    std::vector<AdvertiserStats> advertisers;

    double seller_revenue_per_round() const {
        return rounds > 0 ? seller_revenue_total / static_cast<double>(rounds) : 0.0;
    }

    nlohmann::json to_json() const {
        nlohmann::json advs = nlohmann::json::array();
        for (const auto& a : advertisers)
            advs.push_back({{"id", a.id},
                            {"impressions", a.impressions},
                            {"revenue_total", a.revenue_total},
                            {"spend", a.spend},
                            {"demand_met", a.demand_met},
                            {"budget_respected", a.budget_respected}});
        return {{"scenario", scenario},
                {"q_or_policy", q_or_policy},
                {"T", rounds},
                {"seed", seed},
                {"seller_rev_total", seller_revenue_total},
                {"seller_rev_per_round", seller_revenue_per_round()},
                {"buyer_rev_total", buyer_revenue_total},
                {"impressions", impressions_total},
                {"advertisers", advs}};
    }
};

namespace detail {

inline SimulationReport simulate_rppa_core(const MarketConfig& cfg) {
    const int K = cfg.profile.K();
    RandomStream type_rng = RandomStream::substream(cfg.seed, stream_id::item_types);
    RandomStream value_rng = RandomStream::substream(cfg.seed, stream_id::valuations);
    const TypeSequence types = draw_type_sequence(cfg.profile, cfg.T, type_rng);

    SimulationReport report;
    report.rounds = cfg.T;
    report.seed = cfg.seed;
    report.advertisers.resize(1);
    report.advertisers[0].id = 1;

    for (long t = 0; t < cfg.T; ++t) {
        const int k = types.types[static_cast<std::size_t>(t)];
        const double v = cfg.profile.dists[static_cast<std::size_t>(k)].sample(value_rng);
        const double q = cfg.policy.reserve_for(k, K);
        const RoundOutcome out = run_ppa_round(v, q, t, k);
        report.seller_revenue_total += out.seller_gain;
        report.buyer_revenue_total += out.buyer_gain;
        if (out.accepted) {
            ++report.impressions_total;
            ++report.advertisers[0].impressions;
            report.advertisers[0].revenue_total += out.buyer_gain;
            report.advertisers[0].spend += out.seller_gain;
        }
    }
    return report;
}

}  // namespace detail

// Repeated PPA against a single buyer. Requires a single item type unless the
// policy is static (a static price broadcast over types is a homogeneous
// quote from the buyer's perspective).
inline SimulationReport simulate_rppa_single_buyer(const MarketConfig& cfg) {
    if (cfg.profile.K() != 1 && !cfg.policy.is_static())
        throw DimensionMismatch(
            "simulate_rppa_single_buyer: multi-type profile needs a static policy "
            "(use simulate_rppa_hetero for per-type reserves)");
    SimulationReport report = detail::simulate_rppa_core(cfg);
    report.scenario = "rppa-single-buyer";
    report.q_or_policy = cfg.policy.is_static()
                             ? std::to_string(cfg.policy.static_value())
                             : std::string("per-type");
    return report;
}

// Repeated PPA with per-round item types and a per-type (or broadcast static)
// reserve policy.
inline SimulationReport simulate_rppa_hetero(const MarketConfig& cfg) {
    if (!cfg.policy.is_static() &&
        static_cast<int>(cfg.policy.per_type_values().size()) != cfg.profile.K())
        throw DimensionMismatch("simulate_rppa_hetero: policy/profile type count mismatch");
    SimulationReport report = detail::simulate_rppa_core(cfg);
    report.scenario = "rppa-hetero";
    report.q_or_policy = cfg.policy.is_static()
                             ? std::to_string(cfg.policy.static_value())
                             : std::string("per-type");
    return report;
}

}  // namespace rppa
