#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rppa/distributions.hpp"
#include "rppa/math.hpp"
#include "rppa/prng.hpp"

using Catch::Approx;
using rppa::RandomStream;
using rppa::ValuationDistribution;

namespace {

std::vector<ValuationDistribution> continuous_battery() {
    return {ValuationDistribution::uniform(0.0, 1.0),
            ValuationDistribution::uniform(0.5, 3.0),
            ValuationDistribution::exponential(1.0),
            ValuationDistribution::exponential(2.5),
            ValuationDistribution::lognormal(0.0, 1.0),
            ValuationDistribution::lognormal(0.5, 0.4)};
}

}  // namespace

TEST_CASE("cdf closed forms", "[dist]") {
    REQUIRE(ValuationDistribution::uniform(0, 1).cdf(0.5) == Approx(0.5));
    REQUIRE(ValuationDistribution::exponential(1).cdf(1.0) ==
            Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    REQUIRE(ValuationDistribution::lognormal(0, 1).cdf(1.0) == Approx(0.5).margin(1e-12));
    const auto point = ValuationDistribution::point(2.0);
    REQUIRE(point.cdf(1.999) == 0.0);
    REQUIRE(point.cdf(2.0) == 1.0);
}

TEST_CASE("pdf closed forms", "[dist]") {
    REQUIRE(ValuationDistribution::uniform(0, 2).pdf(1.0) == Approx(0.5));
    REQUIRE(ValuationDistribution::exponential(1).pdf(0.0) == Approx(1.0));
    REQUIRE(ValuationDistribution::lognormal(0, 1).pdf(1.0) ==
            Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
    REQUIRE_THROWS_AS(ValuationDistribution::point(1.0).pdf(1.0), rppa::UnsupportedOperation);
}

TEST_CASE("invalid parameters are rejected at construction", "[dist]") {
    REQUIRE_THROWS_AS(ValuationDistribution::uniform(1.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ValuationDistribution::uniform(2.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ValuationDistribution::exponential(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ValuationDistribution::exponential(-1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ValuationDistribution::lognormal(0.0, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ValuationDistribution::point(-0.5), std::invalid_argument);
}

TEST_CASE("point mass sampling is degenerate", "[dist]") {
    RandomStream rng(1);
    const auto d = ValuationDistribution::point(2.5);
    for (int i = 0; i < 10; ++i) REQUIRE(d.sample(rng) == 2.5);
}

TEST_CASE("sample means match the law of large numbers", "[dist]") {
    const long n = 1000000;
    {
        RandomStream rng(11);
        const auto d = ValuationDistribution::uniform(0, 1);
        double sum = 0.0;
        for (long i = 0; i < n; ++i) sum += d.sample(rng);
        REQUIRE(sum / n == Approx(0.5).margin(0.002));
    }
    {
        RandomStream rng(12);
        const auto d = ValuationDistribution::exponential(2.0);
        double sum = 0.0;
        for (long i = 0; i < n; ++i) sum += d.sample(rng);
        REQUIRE(sum / n == Approx(0.5).margin(0.002));
    }
}

TEST_CASE("virtual value closed forms", "[dist]") {
    const auto u01 = ValuationDistribution::uniform(0, 1);
    for (double v : {0.1, 0.3, 0.5, 0.9})
        REQUIRE(u01.virtual_value(v) == Approx(2.0 * v - 1.0).epsilon(1e-12));

    const auto exp3 = ValuationDistribution::exponential(3.0);
    for (double v : {0.0, 0.7, 2.0})
        REQUIRE(exp3.virtual_value(v) == Approx(v - 1.0 / 3.0).epsilon(1e-12));

    // Near the reserve root of the standard lognormal the virtual value is
    // close to zero.
    REQUIRE(std::abs(ValuationDistribution::lognormal(0, 1).virtual_value(1.36)) < 0.05);

    REQUIRE_THROWS_AS(u01.virtual_value(1.5), rppa::DomainError);
    REQUIRE_THROWS_AS(ValuationDistribution::point(1.0).virtual_value(1.0),
                      rppa::UnsupportedOperation);
}

TEST_CASE("regularity scan", "[dist]") {
    REQUIRE(ValuationDistribution::uniform(0, 1).is_regular(100));
    REQUIRE(ValuationDistribution::exponential(1).is_regular(100));
    REQUIRE(ValuationDistribution::lognormal(0, 1).is_regular(1000));
    REQUIRE_THROWS_AS(ValuationDistribution::uniform(0, 1).is_regular(1), std::invalid_argument);
}

TEST_CASE("cdf is non-decreasing", "[dist]") {
    RandomStream rng(21);
    for (const auto& d : continuous_battery()) {
        const double hi = std::isfinite(d.support_hi()) ? d.support_hi() : d.quantile(0.999999);
        const double lo = d.support_lo();
        for (int i = 0; i < 1000; ++i) {
            double a = lo + (hi - lo) * rng.next_unit();
            double b = lo + (hi - lo) * rng.next_unit();
            if (a > b) std::swap(a, b);
            REQUIRE(d.cdf(a) <= d.cdf(b));
        }
    }
}

TEST_CASE("quantile inverts the cdf", "[dist]") {
    for (const auto& d : continuous_battery()) {
        for (int i = 1; i <= 99; ++i) {
            const double v = d.quantile(i / 100.0);
            REQUIRE(std::abs(d.quantile(d.cdf(v)) - v) < 1e-9);
        }
    }
}

TEST_CASE("pdf matches a finite difference of the cdf", "[dist]") {
    for (const auto& d : continuous_battery()) {
        for (int i = 1; i <= 100; ++i) {
            const double p = 0.005 + 0.99 * (i - 1) / 99.0;
            const double v = d.quantile(p);
            const double h = 1e-6 * std::max(1.0, std::abs(v));
            const double fd = (d.cdf(v + h) - d.cdf(v - h)) / (2.0 * h);
            const double f = d.pdf(v);
            REQUIRE(fd == Approx(f).epsilon(1e-5));
        }
    }
}

TEST_CASE("pdf integrates to one over the support", "[dist]") {
    for (const auto& d : continuous_battery()) {
        const double hi =
            std::isfinite(d.support_hi()) ? d.support_hi() : d.quantile(1.0 - 1e-12);
        const double integral =
            rppa::integrate_adaptive([&](double v) { return d.pdf(v); }, d.support_lo(), hi, 1e-10);
        REQUIRE(integral == Approx(1.0).margin(1e-8));
    }
}

TEST_CASE("seeded sampling is reproducible", "[dist]") {
    for (const auto& d : continuous_battery()) {
        RandomStream a(99), b(99);
        for (int i = 0; i < 10000; ++i) REQUIRE(d.sample(a) == d.sample(b));
    }
}

TEST_CASE("json round trip", "[dist]") {
    for (const auto& d : {ValuationDistribution::uniform(0.25, 2.5),
                          ValuationDistribution::exponential(1.5),
                          ValuationDistribution::lognormal(0.3, 0.8),
                          ValuationDistribution::point(4.0)}) {
        const auto back = ValuationDistribution::from_json(d.to_json());
        REQUIRE(back.to_json() == d.to_json());
    }
    REQUIRE_THROWS_AS(
        ValuationDistribution::from_json({{"kind", "pareto"}, {"params", {{"a", 1.0}}}}),
        std::invalid_argument);
    REQUIRE_THROWS_AS(ValuationDistribution::from_json(
                          {{"kind", "uniform"}, {"params", {{"lo", 0.0}, {"hi", 1.0}, {"x", 2}}}}),
                      std::invalid_argument);
}

TEST_CASE("normal quantile agrees with the cdf", "[dist]") {
    for (double p : {1e-9, 1e-4, 0.02, 0.3, 0.5, 0.77, 0.985, 1.0 - 1e-7}) {
        const double x = rppa::normal_quantile(p);
        REQUIRE(rppa::normal_cdf(x) == Approx(p).epsilon(1e-12));
    }
    REQUIRE(rppa::normal_quantile(0.5) == Approx(0.0).margin(1e-15));
    REQUIRE(rppa::normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-12));
}
