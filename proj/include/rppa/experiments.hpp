#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rppa/auction.hpp"
#include "rppa/distributions.hpp"
#include "rppa/errors.hpp"
#include "rppa/reserve.hpp"
#include "rppa/scheduling.hpp"

namespace rppa {

// Numbers in CSV output carry six significant digits; JSON keeps full
// precision.
inline std::string format_g6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

struct MetricRow {
    std::string metric;
    double computed = 0.0;
    std::optional<double> analytic;   // expectation the pass check keys off
    std::optional<double> reference;  // externally reported value, for context
    double tol = 0.0;
    bool pass = false;
    std::string note;
};

struct ExperimentReport {
    std::string id;
    std::uint64_t seed = 0;
    std::vector<MetricRow> rows;

    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json out = {{"experiment", id}, {"seed", seed}, {"rows", nlohmann::json::array()}};
        for (const auto& r : rows) {
            nlohmann::json rj = {{"metric", r.metric}, {"computed", r.computed},
                                 {"tol", r.tol},       {"pass", r.pass}};
            if (r.analytic) rj["analytic"] = *r.analytic;
            if (r.reference) rj["reference"] = *r.reference;
            if (!r.note.empty()) rj["note"] = r.note;
            out["rows"].push_back(std::move(rj));
        }
        return out;
    }

    std::string to_csv() const {
        std::string out = "# seed=" + std::to_string(seed) + "\n";
        out += "experiment,metric,computed,analytic,reference,tol,pass,note\n";
        for (const auto& r : rows) {
            out += id + "," + r.metric + "," + format_g6(r.computed) + ",";
            out += (r.analytic ? format_g6(*r.analytic) : "") + std::string(",");
            out += (r.reference ? format_g6(*r.reference) : "") + std::string(",");
            out += format_g6(r.tol) + "," + (r.pass ? "1" : "0") + "," + r.note + "\n";
        }
        return out;
    }
};

namespace experiments {

inline constexpr std::uint64_t default_seed = 20250809;

// Exact win expectation per advertiser under filter-then-weighted-selection,
// by enumeration over eligibility subsets.
inline std::vector<double> filtered_win_expectation(const std::vector<double>& weight,
                                                    const std::vector<double>& eligible_prob) {
    const int N = static_cast<int>(weight.size());
    if (N > 20) throw std::invalid_argument("filtered_win_expectation: too many advertisers");
    std::vector<double> e(static_cast<std::size_t>(N), 0.0);
    for (int mask = 0; mask < (1 << N); ++mask) {
        double pr = 1.0, total = 0.0;
        for (int i = 0; i < N; ++i) {
            if (mask & (1 << i)) {
                pr *= eligible_prob[static_cast<std::size_t>(i)];
                total += weight[static_cast<std::size_t>(i)];
            } else {
                pr *= 1.0 - eligible_prob[static_cast<std::size_t>(i)];
            }
        }
        if (!(total > 0.0)) continue;
        for (int i = 0; i < N; ++i)
            if (mask & (1 << i))
                e[static_cast<std::size_t>(i)] += pr * weight[static_cast<std::size_t>(i)] / total;
    }
    return e;
}

namespace detail {

inline MetricRow row_vs_analytic(std::string metric, double computed, double analytic,
                                 double tol, std::optional<double> reference = std::nullopt,
                                 std::string note = "") {
    MetricRow r;
    r.metric = std::move(metric);
    r.computed = computed;
    r.analytic = analytic;
    r.reference = reference;
    r.tol = tol;
    r.pass = std::abs(computed - analytic) <= tol;
    r.note = std::move(note);
    return r;
}

inline MetricRow row_flag(std::string metric, bool computed, bool expected, std::string note = "") {
    MetricRow r;
    r.metric = std::move(metric);
    r.computed = computed ? 1.0 : 0.0;
    r.analytic = expected ? 1.0 : 0.0;
    r.tol = 0.0;
    r.pass = computed == expected;
    r.note = std::move(note);
    return r;
}

inline DspMarket lognormal_dsp_market(long T, std::uint64_t seed,
                                      const std::vector<long>& demands = {}) {
    DspMarket m;
    m.T = T;
    m.seed = seed;
    const int N = demands.empty() ? 5 : static_cast<int>(demands.size());
    for (int n = 0; n < N; ++n) {
        Advertiser a;
        a.id = n + 1;
        a.dists = {ValuationDistribution::lognormal(0, 1)};
        if (!demands.empty()) a.demand = demands[static_cast<std::size_t>(n)];
        m.advertisers.push_back(std::move(a));
    }
    return m;
}

}  // namespace detail

// Reserve prices and revenues for the lognormal parameter table. The pass
// column compares against the reported table values at the documented
// tolerances (absolute 0.05 for reserves below 3, otherwise 10% relative;
// 10% relative for revenues; the doubly-reported (0,1) reserve is accepted
// on the interval [1.30, 1.45]).
inline ExperimentReport reproduce_lognormal_tables() {
    struct Row {
        double mu, sigma, q_ref, seller_ref, buyer_ref;
        const char* table;
    };
    static constexpr Row rows[] = {
        {0.0, 1.0, 1.4, 0.5156, 0.7512, "A"},   {0.25, 1.0, 1.8, 0.8380, 0.9175, "A"},
        {0.5, 1.0, 2.3, 1.23, 1.18, "A"},       {2.0, 1.0, 10.1, 9.61, 5.37, "A"},
        {0.0, 0.25, 0.76, 0.07, 0.28, "B"},     {0.0, 0.5, 0.78, 0.2, 0.41, "B"},
        {0.0, 1.0, 1.36, 0.5, 0.73, "B"},       {0.0, 2.0, 23.2, 10.05, 3.57, "B"},
    };

    ExperimentReport report;
    report.id = "lognormal-tables";
    for (const Row& row : rows) {
        const auto dist = ValuationDistribution::lognormal(row.mu, row.sigma);
        const double q = optimal_reserve(dist, 1e-10);
        const double seller = seller_expected_revenue(dist, q, 1);
        const double buyer = buyer_expected_revenue(dist, q, 1);
        const std::string tag = "(mu=" + format_g6(row.mu) + ",sigma=" + format_g6(row.sigma) +
                                ",table=" + row.table + ")";

        MetricRow qr;
        qr.metric = "q*" + tag;
        qr.computed = q;
        qr.reference = row.q_ref;
        if (row.mu == 0.0 && row.sigma == 1.0) {
            qr.tol = 0.0;
            qr.pass = q >= 1.30 && q <= 1.45;
            qr.note = "interval [1.30,1.45]";
        } else if (q < 3.0) {
            qr.tol = 0.05;
            qr.pass = std::abs(q - row.q_ref) <= 0.05;
        } else {
            qr.tol = 0.10 * row.q_ref;
            qr.pass = std::abs(q - row.q_ref) <= 0.10 * row.q_ref;
        }
        report.rows.push_back(std::move(qr));

        MetricRow sr;
        sr.metric = "seller_per_round" + tag;
        sr.computed = seller;
        sr.reference = row.seller_ref;
        sr.tol = 0.10 * row.seller_ref;
        sr.pass = std::abs(seller - row.seller_ref) <= sr.tol;
        report.rows.push_back(std::move(sr));

        MetricRow br;
        br.metric = "buyer_per_round" + tag;
        br.computed = buyer;
        br.reference = row.buyer_ref;
        br.tol = 0.10 * row.buyer_ref;
        br.pass = std::abs(buyer - row.buyer_ref) <= br.tol;
        report.rows.push_back(std::move(br));
    }
    return report;
}

// Seller revenue and impression counts for the N=5 lognormal DSP study under
// a given policy. One valuation matrix is drawn per seed and shared by every
// reserve price in the list; pass checks key off the analytic expectations.
inline ExperimentReport reproduce_dsp_tables(const std::vector<double>& q_list,
                                             SchedulingPolicy policy,
                                             std::uint64_t seed = default_seed) {
    const long T = 10000;
    const int N = 5;
    const auto dist = ValuationDistribution::lognormal(0, 1);
    DspMarket market = detail::lognormal_dsp_market(T, seed);

    // Reported per-round seller revenues for the corresponding runs.
    static constexpr double hindsight_ref[] = {0.9727, 1.5104, 1.3812};
    static constexpr double rr_ref[] = {0.502, 0.4954, 0.3324};
    static constexpr double uniform_ref[] = {0.493, 0.482, 0.3364};

    ExperimentReport report;
    report.id = std::string("dsp-") + policy_name(policy);
    report.seed = seed;

    for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
        const double q = q_list[qi];
        const auto run = run_scheduling_policy(policy, market, ReservePolicy::static_price(q));
        const double F = dist.cdf(q);

        double win_prob = 0.0;       // probability a round is allocated
        double adv_mean = 0.0;       // expected wins per advertiser
        double adv_sigma = 0.0;
        switch (policy) {
            case SchedulingPolicy::HindsightMax:
            case SchedulingPolicy::RandomizedMax: {
                win_prob = 1.0 - std::pow(F, N);
                adv_mean = static_cast<double>(T) * win_prob / N;
                const double p = win_prob / N;
                adv_sigma = std::sqrt(static_cast<double>(T) * p * (1 - p));
                break;
            }
            case SchedulingPolicy::RoundRobin: {
                win_prob = 1.0 - F;
                adv_mean = static_cast<double>(T) / N * (1.0 - F);
                adv_sigma = std::sqrt(static_cast<double>(T) / N * (1.0 - F) * F);
                break;
            }
            case SchedulingPolicy::UniformRandom: {
                win_prob = 1.0 - F;
                const double p = (1.0 - F) / N;
                adv_mean = static_cast<double>(T) * p;
                adv_sigma = std::sqrt(static_cast<double>(T) * p * (1 - p));
                break;
            }
            default:
                throw std::invalid_argument("reproduce_dsp_tables: unsupported policy");
        }

        std::optional<double> seller_ref;
        if (q_list.size() == 3) {
            if (policy == SchedulingPolicy::HindsightMax ||
                policy == SchedulingPolicy::RandomizedMax)
                seller_ref = hindsight_ref[qi];
            else if (policy == SchedulingPolicy::RoundRobin)
                seller_ref = rr_ref[qi];
            else if (policy == SchedulingPolicy::UniformRandom)
                seller_ref = uniform_ref[qi];
        }

        report.rows.push_back(detail::row_vs_analytic(
            "seller_per_round(q=" + format_g6(q) + ")", run.report.seller_revenue_per_round(),
            q * win_prob, 0.03, seller_ref));

        const double total_mean = static_cast<double>(T) * win_prob;
        const double total_sigma =
            std::sqrt(static_cast<double>(T) * win_prob * (1.0 - win_prob));
        report.rows.push_back(detail::row_vs_analytic(
            "impressions_total(q=" + format_g6(q) + ")",
            static_cast<double>(run.report.impressions_total), total_mean,
            3.0 * std::max(total_sigma, 1e-9)));

        for (int n = 0; n < N; ++n)
            report.rows.push_back(detail::row_vs_analytic(
                "impressions(adv=" + std::to_string(n + 1) + ",q=" + format_g6(q) + ")",
                static_cast<double>(
                    run.report.advertisers[static_cast<std::size_t>(n)].impressions),
                adv_mean, 3.0 * adv_sigma));
    }
    return report;
}

// Demand-proportional nominee selection with the fixed-valuation market:
// every round sells at the reserve and the impression split follows the
// demand weights.
inline ExperimentReport greedy_fixed_valuation(std::uint64_t seed = default_seed) {
    const long T = 10000;
    const double q = 1.0, v = 2.5;
    const std::vector<long> demands = {400, 800, 4800, 400, 1600};
    static constexpr double imp_ref[] = {485, 984, 6002, 498, 2031};
    static constexpr double rev_ref[] = {0.07, 0.15, 0.91, 0.07, 0.3};

    DspMarket m;
    m.T = T;
    m.seed = seed;
    for (int n = 0; n < 5; ++n) {
        Advertiser a;
        a.id = n + 1;
        a.dists = {ValuationDistribution::point(v)};
        a.demand = demands[static_cast<std::size_t>(n)];
        m.advertisers.push_back(std::move(a));
    }
    const auto run = run_scheduling_policy(SchedulingPolicy::GreedyDemand, m,
                                           ReservePolicy::static_price(q));
    const auto xi = demand_weights(m.advertisers);

    ExperimentReport report;
    report.id = "greedy-fixed-v";
    report.seed = seed;
    report.rows.push_back(detail::row_vs_analytic(
        "seller_per_round", run.report.seller_revenue_per_round(), 1.0, 1e-12));
    for (int n = 0; n < 5; ++n) {
        const double p = xi[static_cast<std::size_t>(n)];
        const double sigma = std::sqrt(static_cast<double>(T) * p * (1 - p));
        const auto& s = run.report.advertisers[static_cast<std::size_t>(n)];
        report.rows.push_back(detail::row_vs_analytic(
            "impressions(adv=" + std::to_string(n + 1) + ")",
            static_cast<double>(s.impressions), static_cast<double>(T) * p, 3.0 * sigma,
            imp_ref[n]));
        report.rows.push_back(detail::row_vs_analytic(
            "revenue_per_round(adv=" + std::to_string(n + 1) + ")",
            s.revenue_total / static_cast<double>(T), p * (v - q),
            3.0 * sigma * (v - q) / static_cast<double>(T), rev_ref[n]));
        report.rows.push_back(detail::row_flag("demand_met(adv=" + std::to_string(n + 1) + ")",
                                               s.demand_met, true));
    }
    return report;
}

// Same demand split with lognormal valuations: nominees win only half their
// nominations at q = 1.
inline ExperimentReport greedy_lognormal(std::uint64_t seed = default_seed) {
    const long T = 10000;
    const double q = 1.0;
    const std::vector<long> demands = {400, 800, 4800, 400, 1600};
    static constexpr double imp_ref[] = {260, 519, 2981, 235, 1000};

    DspMarket m = detail::lognormal_dsp_market(T, seed, demands);
    const auto run = run_scheduling_policy(SchedulingPolicy::GreedyDemand, m,
                                           ReservePolicy::static_price(q));
    const auto xi = demand_weights(m.advertisers);

    ExperimentReport report;
    report.id = "greedy-lognormal";
    report.seed = seed;
    report.rows.push_back(detail::row_vs_analytic(
        "seller_per_round", run.report.seller_revenue_per_round(), 0.5, 0.02, 0.5));
    for (int n = 0; n < 5; ++n) {
        const double p = xi[static_cast<std::size_t>(n)] * 0.5;
        const double sigma = std::sqrt(static_cast<double>(T) * p * (1 - p));
        report.rows.push_back(detail::row_vs_analytic(
            "impressions(adv=" + std::to_string(n + 1) + ")",
            static_cast<double>(
                run.report.advertisers[static_cast<std::size_t>(n)].impressions),
            static_cast<double>(T) * p, 3.0 * sigma, imp_ref[n]));
    }
    return report;
}

// Filter-then-demand-weighted selection, optionally with a per-advertiser
// boost. Expected impressions come from the subset-enumeration oracle.
inline ExperimentReport filtered_demand_weighted(const std::vector<double>& boost,
                                                 std::uint64_t seed = default_seed) {
    const long T = 10000;
    const double q = 1.0;
    const std::vector<long> demands = {400, 800, 4800, 400, 1600};
    static constexpr double plain_imp_ref[] = {1024, 1607, 3749, 1036, 2317};
    static constexpr double boost_imp_ref[] = {814, 1177, 5046, 810, 1931};
    const bool boosted = !boost.empty();

    DspMarket m = detail::lognormal_dsp_market(T, seed, demands);
    const auto run = run_scheduling_policy(SchedulingPolicy::LagrangianBoost, m,
                                           ReservePolicy::static_price(q), boost);

    const auto dist = ValuationDistribution::lognormal(0, 1);
    auto weights = demand_weights(m.advertisers);
    std::vector<double> eligible(5, dist.sf(q));
    if (boosted)
        for (int n = 0; n < 5; ++n) {
            weights[static_cast<std::size_t>(n)] += boost[static_cast<std::size_t>(n)];
            eligible[static_cast<std::size_t>(n)] =
                dist.sf(q - boost[static_cast<std::size_t>(n)]);
        }
    const auto oracle = filtered_win_expectation(weights, eligible);

    double allocate_prob = 1.0;
    for (double e : eligible) allocate_prob *= 1.0 - e;
    allocate_prob = 1.0 - allocate_prob;

    ExperimentReport report;
    report.id = boosted ? "lagrangian-boost" : "filtered-demand";
    report.seed = seed;
    report.rows.push_back(detail::row_vs_analytic(
        "seller_per_round", run.report.seller_revenue_per_round(), q * allocate_prob, 0.02,
        boosted ? 0.98 : 0.97));
    for (int n = 0; n < 5; ++n) {
        const double p = oracle[static_cast<std::size_t>(n)];
        const double sigma = std::sqrt(static_cast<double>(T) * p * (1 - p));
        const auto& s = run.report.advertisers[static_cast<std::size_t>(n)];
        report.rows.push_back(detail::row_vs_analytic(
            "impressions(adv=" + std::to_string(n + 1) + ")", static_cast<double>(s.impressions),
            static_cast<double>(T) * p, 3.0 * sigma,
            boosted ? boost_imp_ref[n] : plain_imp_ref[n]));
        // With these weights the unboosted run covers every demand except the
        // dominant advertiser's; the boosted run covers all five.
        const bool expect_met = boosted || n != 2;
        report.rows.push_back(detail::row_flag("demand_met(adv=" + std::to_string(n + 1) + ")",
                                               s.demand_met, expect_met));
    }
    return report;
}

// Two point-mass item types: per-type reserves strictly beat any single
// static price, analytically and in a seeded simulation.
inline ExperimentReport static_vs_dynamic_demo(double p1, double v1, double v2, double q1,
                                               double q2, std::uint64_t seed = default_seed) {
    if (!(v1 < v2) || !(q1 < v1) || !(v1 < q2) || !(q2 < v2))
        throw std::invalid_argument("static_vs_dynamic_demo: need q1 < v1 < q2 < v2");
    if (!(p1 > 0.0 && p1 < 1.0))
        throw std::invalid_argument("static_vs_dynamic_demo: need 0 < p1 < 1");

    const ItemTypeProfile profile({p1, 1.0 - p1}, {ValuationDistribution::point(v1),
                                                   ValuationDistribution::point(v2)});
    const auto dynamic_policy = ReservePolicy::per_type({q1, q2});
    const double dyn = hetero_seller_revenue(profile, dynamic_policy, 1);
    const double stat_low = hetero_seller_revenue(profile, ReservePolicy::static_price(q1), 1);
    const double stat_high = hetero_seller_revenue(profile, ReservePolicy::static_price(q2), 1);

    ExperimentReport report;
    report.id = "static-vs-dynamic";
    report.seed = seed;
    report.rows.push_back(detail::row_vs_analytic("dynamic_per_round", dyn,
                                                  p1 * q1 + (1 - p1) * q2, 1e-12));
    report.rows.push_back(detail::row_vs_analytic("static_low_per_round", stat_low, q1, 1e-12));
    report.rows.push_back(detail::row_vs_analytic("static_high_per_round", stat_high,
                                                  (1 - p1) * q2, 1e-12));
    report.rows.push_back(detail::row_flag("dynamic_beats_static_low", dyn > stat_low, true));
    report.rows.push_back(detail::row_flag("dynamic_beats_static_high", dyn > stat_high, true));

    const long T = 10000;
    const auto sim = simulate_rppa_hetero(MarketConfig(T, profile, seed, dynamic_policy));
    // Per-round revenue is q1 or q2 depending on the realized type; only the
    // type split is random.
    const double sigma = std::abs(q2 - q1) * std::sqrt(p1 * (1 - p1) / T);
    report.rows.push_back(detail::row_vs_analytic("simulated_dynamic_per_round",
                                                  sim.seller_revenue_per_round(), dyn,
                                                  3.0 * std::max(sigma, 1e-12)));
    return report;
}

inline std::vector<std::string> experiment_ids() {
    return {"lognormal-tables", "dsp-hindsight-max", "rr-policy",      "uniform-policy",
            "greedy-fixed-v",   "greedy-lognormal",  "filtered-demand", "lagrangian-boost",
            "static-vs-dynamic"};
}

inline ExperimentReport run_experiment(const std::string& id,
                                       std::uint64_t seed = default_seed) {
    const std::vector<double> q_table = {1.0, 2.0, 4.0};
    auto with_id = [&id](ExperimentReport r) {
        r.id = id;
        return r;
    };
    if (id == "lognormal-tables") return reproduce_lognormal_tables();
    if (id == "dsp-hindsight-max")
        return with_id(reproduce_dsp_tables(q_table, SchedulingPolicy::HindsightMax, seed));
    if (id == "rr-policy")
        return with_id(reproduce_dsp_tables(q_table, SchedulingPolicy::RoundRobin, seed));
    if (id == "uniform-policy")
        return with_id(reproduce_dsp_tables(q_table, SchedulingPolicy::UniformRandom, seed));
    if (id == "greedy-fixed-v") return greedy_fixed_valuation(seed);
    if (id == "greedy-lognormal") return greedy_lognormal(seed);
    if (id == "filtered-demand") return filtered_demand_weighted({}, seed);
    if (id == "lagrangian-boost") return filtered_demand_weighted({0, 0, 0.25, 0, 0}, seed);
    if (id == "static-vs-dynamic") return static_vs_dynamic_demo(0.5, 1.0, 3.0, 0.9, 2.9, seed);
    throw std::invalid_argument("unknown experiment id '" + id + "'");
}

}  // namespace experiments
}  // namespace rppa
