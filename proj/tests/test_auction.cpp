#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rppa/auction.hpp"
#include "rppa/prng.hpp"

using Catch::Approx;
using rppa::ItemTypeProfile;
using rppa::MarketConfig;
using rppa::RandomStream;
using rppa::ReservePolicy;
using rppa::ValuationDistribution;

TEST_CASE("single round settlement", "[auction]") {
    const auto win = rppa::run_ppa_round(3.0, 2.0);
    REQUIRE(win.accepted);
    REQUIRE(win.seller_gain == 2.0);
    REQUIRE(win.buyer_gain == 1.0);

    const auto tie = rppa::run_ppa_round(2.0, 2.0);
    REQUIRE_FALSE(tie.accepted);
    REQUIRE(tie.seller_gain == 0.0);
    REQUIRE(tie.buyer_gain == 0.0);

    const auto lose = rppa::run_ppa_round(1.0, 2.0);
    REQUIRE_FALSE(lose.accepted);
    REQUIRE(lose.seller_gain == 0.0);
}

TEST_CASE("per-round accounting identity", "[auction]") {
    RandomStream rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double v = 3.0 * rng.next_unit();
        const double q = 3.0 * rng.next_unit();
        const auto out = rppa::run_ppa_round(v, q);
        REQUIRE(out.seller_gain + out.buyer_gain ==
                Approx(out.accepted ? v : 0.0).margin(1e-12));
        REQUIRE(out.buyer_gain >= 0.0);
        REQUIRE(out.accepted == (v > q));
    }
}

TEST_CASE("type sequences", "[auction]") {
    RandomStream rng(17);
    const auto single = ItemTypeProfile::single(ValuationDistribution::uniform(0, 1));
    const auto seq1 = rppa::draw_type_sequence(single, 50, rng);
    for (int k : seq1.types) REQUIRE(k == 0);

    const ItemTypeProfile two({0.3, 0.7}, {ValuationDistribution::uniform(0, 1),
                                           ValuationDistribution::uniform(0, 2)});
    const auto seq2 = rppa::draw_type_sequence(two, 100000, rng);
    long count0 = 0;
    for (int k : seq2.types) count0 += (k == 0);
    REQUIRE(count0 / 100000.0 == Approx(0.3).margin(0.01));

    const ItemTypeProfile degenerate({1.0, 0.0}, {ValuationDistribution::uniform(0, 1),
                                                  ValuationDistribution::uniform(0, 2)});
    const auto seq3 = rppa::draw_type_sequence(degenerate, 200, rng);
    for (int k : seq3.types) REQUIRE(k == 0);
}

TEST_CASE("single-buyer simulation converges to the closed form", "[auction]") {
    const MarketConfig cfg(1000000, ItemTypeProfile::single(ValuationDistribution::uniform(0, 1)),
                           2024, ReservePolicy::static_price(0.5));
    const auto report = rppa::simulate_rppa_single_buyer(cfg);
    REQUIRE(report.seller_revenue_per_round() == Approx(0.25).margin(0.002));
    REQUIRE(report.rounds == 1000000);
}

TEST_CASE("single-buyer simulation on point masses is exact", "[auction]") {
    const MarketConfig high(100, ItemTypeProfile::single(ValuationDistribution::point(2.5)), 7,
                            ReservePolicy::static_price(1.0));
    const auto rep = rppa::simulate_rppa_single_buyer(high);
    REQUIRE(rep.seller_revenue_total == Approx(100.0));
    REQUIRE(rep.buyer_revenue_total == Approx(150.0));
    REQUIRE(rep.impressions_total == 100);

    const MarketConfig low(100, ItemTypeProfile::single(ValuationDistribution::point(0.5)), 7,
                           ReservePolicy::static_price(1.0));
    const auto rep2 = rppa::simulate_rppa_single_buyer(low);
    REQUIRE(rep2.seller_revenue_total == 0.0);
    REQUIRE(rep2.buyer_revenue_total == 0.0);
}

TEST_CASE("heterogeneous simulation matches the analytic mixture", "[auction]") {
    const ItemTypeProfile profile({0.5, 0.5}, {ValuationDistribution::point(1.0),
                                               ValuationDistribution::point(3.0)});
    const MarketConfig dynamic(10000, profile, 99, ReservePolicy::per_type({0.9, 2.9}));
    REQUIRE(rppa::simulate_rppa_hetero(dynamic).seller_revenue_per_round() ==
            Approx(1.9).margin(0.03));

    const MarketConfig high(10000, profile, 99, ReservePolicy::static_price(2.9));
    REQUIRE(rppa::simulate_rppa_hetero(high).seller_revenue_per_round() ==
            Approx(1.45).margin(0.03));
}

TEST_CASE("heterogeneous simulation with one type reduces to the single-buyer run",
          "[auction]") {
    const MarketConfig cfg(5000, ItemTypeProfile::single(ValuationDistribution::lognormal(0, 1)),
                           31, ReservePolicy::static_price(1.0));
    const auto hetero = rppa::simulate_rppa_hetero(cfg);
    const auto single = rppa::simulate_rppa_single_buyer(cfg);
    REQUIRE(hetero.seller_revenue_total == single.seller_revenue_total);
    REQUIRE(hetero.buyer_revenue_total == single.buyer_revenue_total);
    REQUIRE(hetero.impressions_total == single.impressions_total);
}

TEST_CASE("simulations are deterministic given the config", "[auction]") {
    const ItemTypeProfile profile({0.25, 0.75}, {ValuationDistribution::exponential(1),
                                                 ValuationDistribution::lognormal(0, 1)});
    const MarketConfig cfg(2000, profile, 555, ReservePolicy::per_type({1.0, 1.36}));
    const auto a = rppa::simulate_rppa_hetero(cfg).to_json().dump();
    const auto b = rppa::simulate_rppa_hetero(cfg).to_json().dump();
    REQUIRE(a == b);
}

TEST_CASE("monte-carlo revenue agrees with the analytic value within 3 sigma", "[auction]") {
    const long T = 100000;
    struct Case {
        ValuationDistribution dist;
        double q;
    };
    const Case cases[] = {{ValuationDistribution::uniform(0, 1), 0.5},
                          {ValuationDistribution::exponential(1), 1.0},
                          {ValuationDistribution::lognormal(0, 1), 1.36}};
    std::uint64_t seed = 808;
    for (const auto& c : cases) {
        const MarketConfig cfg(T, ItemTypeProfile::single(c.dist), seed++,
                               ReservePolicy::static_price(c.q));
        const auto rep = rppa::simulate_rppa_single_buyer(cfg);
        const double p = c.dist.sf(c.q);
        const double sigma = c.q * std::sqrt(p * (1 - p) / T);
        REQUIRE(std::abs(rep.seller_revenue_per_round() - c.q * p) <= 3 * sigma);
    }
}

TEST_CASE("dynamic reserves beat static ones in simulation", "[auction]") {
    const ItemTypeProfile profile({0.5, 0.5}, {ValuationDistribution::point(1.0),
                                               ValuationDistribution::point(3.0)});
    const long T = 10000;
    const std::uint64_t seed = 4242;
    const auto dynamic = rppa::simulate_rppa_hetero(
        MarketConfig(T, profile, seed, ReservePolicy::per_type({0.9, 2.9})));
    const auto static_low = rppa::simulate_rppa_hetero(
        MarketConfig(T, profile, seed, ReservePolicy::static_price(0.9)));
    const auto static_high = rppa::simulate_rppa_hetero(
        MarketConfig(T, profile, seed, ReservePolicy::static_price(2.9)));
    REQUIRE(dynamic.seller_revenue_total > static_low.seller_revenue_total);
    REQUIRE(dynamic.seller_revenue_total > static_high.seller_revenue_total);
}

TEST_CASE("market config json round trip", "[auction]") {
    const ItemTypeProfile profile({0.25, 0.75}, {ValuationDistribution::exponential(1),
                                                 ValuationDistribution::lognormal(0, 1)});
    const MarketConfig cfg(2000, profile, 555, ReservePolicy::per_type({1.0, 1.36}));
    REQUIRE(MarketConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
    auto j = cfg.to_json();
    j["extra"] = 1;
    REQUIRE_THROWS_AS(MarketConfig::from_json(j), std::invalid_argument);
}
