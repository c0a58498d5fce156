#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rppa/distributions.hpp"
#include "rppa/errors.hpp"
#include "rppa/math.hpp"

namespace rppa {

struct StaticReserve {
    double q;
};

struct PerTypeReserve {
    std::vector<double> q;
};

// Reserve-price announcement: one price for every round, or one per item type.
class ReservePolicy {
public:
    static ReservePolicy static_price(double q) {
        if (!(std::isfinite(q) && q >= 0.0))
            throw std::invalid_argument("reserve policy: q must be >= 0");
        return ReservePolicy(StaticReserve{q});
    }
    static ReservePolicy per_type(std::vector<double> q) {
        if (q.empty()) throw std::invalid_argument("reserve policy: empty per-type vector");
        for (double x : q)
            if (!(std::isfinite(x) && x >= 0.0))
                throw std::invalid_argument("reserve policy: all reserves must be >= 0");
        return ReservePolicy(PerTypeReserve{std::move(q)});
    }

    bool is_static() const { return std::holds_alternative<StaticReserve>(var_); }

    // Price quoted for item type k in a K-type market. A static policy
    // broadcasts its single price to every type.
    double reserve_for(int k, int K) const {
        if (k < 0 || k >= K) throw DimensionMismatch("reserve_for: type index out of range");
        if (is_static()) return std::get<StaticReserve>(var_).q;
        const auto& v = std::get<PerTypeReserve>(var_).q;
        if (static_cast<int>(v.size()) != K)
            throw DimensionMismatch("reserve_for: policy has " + std::to_string(v.size()) +
                                    " types, market has " + std::to_string(K));
        return v[static_cast<std::size_t>(k)];
    }

    const std::vector<double>& per_type_values() const {
        if (is_static()) throw DimensionMismatch("per_type_values: policy is static");
        return std::get<PerTypeReserve>(var_).q;
    }
    double static_value() const {
        if (!is_static()) throw DimensionMismatch("static_value: policy is per-type");
        return std::get<StaticReserve>(var_).q;
    }

    nlohmann::json to_json() const {
        if (is_static()) return {{"kind", "static"}, {"q", static_value()}};
        return {{"kind", "per_type"}, {"q", per_type_values()}};
    }
    static ReservePolicy from_json(const nlohmann::json& j) {
        ValuationDistribution::require_keys(j, {"kind", "q"}, "reserve policy");
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "static") return static_price(j.at("q").get<double>());
        if (kind == "per_type") return per_type(j.at("q").get<std::vector<double>>());
        throw std::invalid_argument("reserve policy: unknown kind '" + kind + "'");
    }

private:
    using Variant = std::variant<StaticReserve, PerTypeReserve>;
    explicit ReservePolicy(Variant v) : var_(std::move(v)) {}
    Variant var_;
};

// K item types with auction probabilities p_k and per-type valuation laws.
struct ItemTypeProfile {
    std::vector<double> p;
    std::vector<ValuationDistribution> dists;

    ItemTypeProfile(std::vector<double> probs, std::vector<ValuationDistribution> ds)
        : p(std::move(probs)), dists(std::move(ds)) {
        if (p.empty() || p.size() != dists.size())
            throw std::invalid_argument("item profile: need matching, non-empty p and dists");
        double sum = 0.0;
        for (double x : p) {
            if (!(std::isfinite(x) && x >= 0.0))
                throw std::invalid_argument("item profile: probabilities must be >= 0");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("item profile: probabilities must sum to 1");
    }

    static ItemTypeProfile single(ValuationDistribution d) {
        return ItemTypeProfile({1.0}, {std::move(d)});
    }

    int K() const { return static_cast<int>(p.size()); }

    nlohmann::json to_json() const {
        nlohmann::json ds = nlohmann::json::array();
        for (const auto& d : dists) ds.push_back(d.to_json());
        return {{"p", p}, {"dists", ds}};
    }
    static ItemTypeProfile from_json(const nlohmann::json& j) {
        ValuationDistribution::require_keys(j, {"p", "dists"}, "item profile");
        std::vector<ValuationDistribution> ds;
        for (const auto& dj : j.at("dists")) ds.push_back(ValuationDistribution::from_json(dj));
        return ItemTypeProfile(j.at("p").get<std::vector<double>>(), std::move(ds));
    }
};

// Root of q - (1 - F(q))/f(q) = 0 by bracketed bisection. The lower bracket
// sits at the support edge (trimmed to the 1e-9 quantile when the edge has
// zero density); the upper bracket doubles from the median until the virtual
// value turns positive, clamped to a finite upper support.
inline double optimal_reserve(const ValuationDistribution& dist, double tol = 1e-9) {
    if (!dist.is_continuous())
        throw UnsupportedOperation("optimal_reserve: point mass has no density");
    if (!(tol > 0.0)) throw std::invalid_argument("optimal_reserve: tol must be > 0");

    const double hi_support = dist.support_hi();
    double a = dist.support_lo();
    if (!(dist.pdf(a) > 0.0)) a = dist.quantile(1e-9);

    const double va = dist.virtual_value(a);
    if (va == 0.0) return a;
    if (va > 0.0)
        throw NoRootError("optimal_reserve: virtual value already positive at lower support");

    double b = dist.median();
    if (!(b > a)) b = a + 1.0;
    if (std::isfinite(hi_support) && b > hi_support) b = hi_support;
    bool bracketed = false;
    for (int i = 0; i < 64; ++i) {
        if (dist.virtual_value(b) > 0.0) {
            bracketed = true;
            break;
        }
        if (std::isfinite(hi_support) && b >= hi_support) break;
        b *= 2.0;
        if (std::isfinite(hi_support) && b > hi_support) b = hi_support;
    }
    if (!bracketed)
        throw NoRootError("optimal_reserve: no sign change after 64 doublings");

    for (int i = 0; i < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++i) {
        const double mid = 0.5 * (a + b);
        if (dist.virtual_value(mid) < 0.0)
            a = mid;
        else
            b = mid;
    }
    const double q = 0.5 * (a + b);
    if (std::abs(dist.virtual_value(q)) > tol * std::max(1.0, std::abs(q)))
        throw NoRootError("optimal_reserve: residual above tolerance");
    return q;
}

// T * q * Pr(v > q).
inline double seller_expected_revenue(const ValuationDistribution& dist, double q, long T) {
    if (T < 1) throw std::invalid_argument("seller_expected_revenue: T must be >= 1");
    if (!(q >= 0.0)) throw std::invalid_argument("seller_expected_revenue: q must be >= 0");
    return static_cast<double>(T) * q * dist.sf(q);
}

// T * E[(v - q) 1{v > q}]. Closed form for uniform/exponential/point;
// adaptive quadrature (absolute tolerance 1e-8) of the partial expectation
// for lognormal, truncated at the 1 - 1e-12 quantile.
inline double buyer_expected_revenue(const ValuationDistribution& dist, double q, long T) {
    if (T < 1) throw std::invalid_argument("buyer_expected_revenue: T must be >= 1");
    if (!(q >= 0.0)) throw std::invalid_argument("buyer_expected_revenue: q must be >= 0");
    const double t = static_cast<double>(T);
    return std::visit(
        [&](const auto& d) -> double {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, Uniform>) {
                if (q >= d.hi) return 0.0;
                if (q <= d.lo) return t * (0.5 * (d.lo + d.hi) - q);
                return t * (d.hi - q) * (d.hi - q) / (2.0 * (d.hi - d.lo));
            } else if constexpr (std::is_same_v<D, Exponential>) {
                return t * std::exp(-d.rate * q) / d.rate;
            } else if constexpr (std::is_same_v<D, PointMass>) {
                return d.value > q ? t * (d.value - q) : 0.0;
            } else {
                const double upper = dist.quantile(1.0 - 1e-12);
                if (q >= upper) return 0.0;
                const double integral = integrate_adaptive(
                    [&](double v) { return (v - q) * dist.pdf(v); }, q, upper, 1e-8);
                return t * integral;
            }
        },
        dist.value());
}

// Per-type roots of the reserve equation.
inline ReservePolicy hetero_optimal_reserves(const ItemTypeProfile& profile, double tol = 1e-9) {
    std::vector<double> q;
    q.reserve(profile.dists.size());
    for (std::size_t k = 0; k < profile.dists.size(); ++k) {
        try {
            q.push_back(optimal_reserve(profile.dists[k], tol));
        } catch (const NoRootError& e) {
            throw NoRootError("type " + std::to_string(k + 1) + ": " + e.what());
        }
    }
    return ReservePolicy::per_type(std::move(q));
}

// T * sum_k p_k q_k (1 - F_k(q_k)); a static policy is broadcast to all types.
inline double hetero_seller_revenue(const ItemTypeProfile& profile, const ReservePolicy& policy,
                                    long T) {
    if (T < 1) throw std::invalid_argument("hetero_seller_revenue: T must be >= 1");
    double per_round = 0.0;
    for (int k = 0; k < profile.K(); ++k) {
        const double q = policy.reserve_for(k, profile.K());
        per_round += profile.p[static_cast<std::size_t>(k)] * q *
                     profile.dists[static_cast<std::size_t>(k)].sf(q);
    }
    return static_cast<double>(T) * per_round;
}

// T * sum_k p_k E_{F_k}[(v - q_k) 1{v > q_k}].
inline double hetero_buyer_revenue(const ItemTypeProfile& profile, const ReservePolicy& policy,
                                   long T) {
    if (T < 1) throw std::invalid_argument("hetero_buyer_revenue: T must be >= 1");
    double per_round = 0.0;
    for (int k = 0; k < profile.K(); ++k) {
        const double q = policy.reserve_for(k, profile.K());
        per_round += profile.p[static_cast<std::size_t>(k)] *
                     buyer_expected_revenue(profile.dists[static_cast<std::size_t>(k)], q, 1);
    }
    return static_cast<double>(T) * per_round;
}

// 1 - F(q)^N: probability that the best of N i.i.d. valuations clears q.
inline double win_probability(const ValuationDistribution& dist, double q, int N) {
    if (N < 1) throw std::invalid_argument("win_probability: N must be >= 1");
    return 1.0 - std::pow(dist.cdf(q), N);
}

// Conditional per-type win probabilities 1 - F_k(q_k)^N.
inline std::vector<double> win_probability_per_type(const ItemTypeProfile& profile,
                                                    const ReservePolicy& policy, int N) {
    if (N < 1) throw std::invalid_argument("win_probability_per_type: N must be >= 1");
    std::vector<double> out;
    out.reserve(profile.dists.size());
    for (int k = 0; k < profile.K(); ++k) {
        const double q = policy.reserve_for(k, profile.K());
        out.push_back(1.0 - std::pow(profile.dists[static_cast<std::size_t>(k)].cdf(q), N));
    }
    return out;
}

// T (1 - F(q)^N) / N: expected impressions per advertiser under max-valuation
// scheduling among N symmetric advertisers.
inline double expected_impressions_per_advertiser(const ValuationDistribution& dist, double q,
                                                  long T, int N) {
    if (N < 1) throw std::invalid_argument("expected_impressions_per_advertiser: N must be >= 1");
    return static_cast<double>(T) * win_probability(dist, q, N) / N;
}

// Heterogeneous form: T sum_k p_k (1 - F_k(q_k)^N) / N.
inline double expected_impressions_per_advertiser(const ItemTypeProfile& profile,
                                                  const ReservePolicy& policy, long T, int N) {
    const auto per_type = win_probability_per_type(profile, policy, N);
    double mix = 0.0;
    for (std::size_t k = 0; k < per_type.size(); ++k) mix += profile.p[k] * per_type[k];
    return static_cast<double>(T) * mix / N;
}

}  // namespace rppa
