#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "rppa/errors.hpp"
#include "rppa/math.hpp"
#include "rppa/prng.hpp"

namespace rppa {

struct Uniform {
    double lo, hi;
};

struct Exponential {
    double rate;
};

struct LogNormal {
    double mu, sigma;  // parameters of the underlying normal
};

struct PointMass {
    double value;
};

// A buyer valuation law. Immutable after construction; all queries are const
// and the object is safe to share across threads. Sampling is inverse-cdf so
// that a fixed seed reproduces the same draws on every platform.
class ValuationDistribution {
public:
    using Variant = std::variant<Uniform, Exponential, LogNormal, PointMass>;

    static ValuationDistribution uniform(double lo, double hi) {
        if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
            throw std::invalid_argument("uniform: requires finite lo < hi");
        return ValuationDistribution(Uniform{lo, hi});
    }
    static ValuationDistribution exponential(double rate) {
        if (!(std::isfinite(rate) && rate > 0.0))
            throw std::invalid_argument("exponential: requires rate > 0");
        return ValuationDistribution(Exponential{rate});
    }
    static ValuationDistribution lognormal(double mu, double sigma) {
        if (!(std::isfinite(mu) && std::isfinite(sigma) && sigma > 0.0))
            throw std::invalid_argument("lognormal: requires finite mu and sigma > 0");
        return ValuationDistribution(LogNormal{mu, sigma});
    }
    static ValuationDistribution point(double value) {
        if (!(std::isfinite(value) && value >= 0.0))
            throw std::invalid_argument("point: requires value >= 0");
        return ValuationDistribution(PointMass{value});
    }

    double cdf(double v) const {
        return std::visit(
            [v](const auto& d) -> double {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Uniform>) {
                    if (v <= d.lo) return 0.0;
                    if (v >= d.hi) return 1.0;
                    return (v - d.lo) / (d.hi - d.lo);
                } else if constexpr (std::is_same_v<D, Exponential>) {
                    if (v <= 0.0) return 0.0;
                    return -std::expm1(-d.rate * v);
                } else if constexpr (std::is_same_v<D, LogNormal>) {
                    if (v <= 0.0) return 0.0;
                    return normal_cdf((std::log(v) - d.mu) / d.sigma);
                } else {
                    return v < d.value ? 0.0 : 1.0;
                }
            },
            var_);
    }

    // Survival function 1 - F(v), computed without cancellation in the tail.
    double sf(double v) const {
        return std::visit(
            [v](const auto& d) -> double {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Uniform>) {
                    if (v <= d.lo) return 1.0;
                    if (v >= d.hi) return 0.0;
                    return (d.hi - v) / (d.hi - d.lo);
                } else if constexpr (std::is_same_v<D, Exponential>) {
                    if (v <= 0.0) return 1.0;
                    return std::exp(-d.rate * v);
                } else if constexpr (std::is_same_v<D, LogNormal>) {
                    if (v <= 0.0) return 1.0;
                    return normal_sf((std::log(v) - d.mu) / d.sigma);
                } else {
                    return v < d.value ? 1.0 : 0.0;
                }
            },
            var_);
    }

    double pdf(double v) const {
        return std::visit(
            [v](const auto& d) -> double {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Uniform>) {
                    return (v >= d.lo && v <= d.hi) ? 1.0 / (d.hi - d.lo) : 0.0;
                } else if constexpr (std::is_same_v<D, Exponential>) {
                    return v >= 0.0 ? d.rate * std::exp(-d.rate * v) : 0.0;
                } else if constexpr (std::is_same_v<D, LogNormal>) {
                    if (v <= 0.0) return 0.0;
                    const double z = (std::log(v) - d.mu) / d.sigma;
                    return std::exp(-0.5 * z * z) / (v * d.sigma * 2.5066282746310002);
                } else {
                    throw UnsupportedOperation("pdf: point mass has no density");
                }
            },
            var_);
    }

    double quantile(double p) const {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("quantile: p must be in [0, 1]");
        return std::visit(
            [p](const auto& d) -> double {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Uniform>) {
                    return d.lo + p * (d.hi - d.lo);
                } else if constexpr (std::is_same_v<D, Exponential>) {
                    return -std::log1p(-p) / d.rate;
                } else if constexpr (std::is_same_v<D, LogNormal>) {
                    if (p == 0.0) return 0.0;
                    return std::exp(d.mu + d.sigma * normal_quantile(p));
                } else {
                    return d.value;
                }
            },
            var_);
    }

    // One inverse-cdf draw. Every variant consumes exactly one uniform, so
    // mixed point/continuous profiles keep identical stream alignment.
    double sample(RandomStream& rng) const {
        const double u = rng.next_unit();
        if (std::holds_alternative<PointMass>(var_)) return std::get<PointMass>(var_).value;
        return quantile(u);
    }

    // v - (1 - F(v)) / f(v), in the algebraically simplified per-variant form
    // (avoids 0/0 in deep tails).
    double virtual_value(double v) const {
        return std::visit(
            [v, this](const auto& d) -> double {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Uniform>) {
                    if (v < d.lo || v > d.hi)
                        throw DomainError("virtual_value: zero density at v");
                    return 2.0 * v - d.hi;
                } else if constexpr (std::is_same_v<D, Exponential>) {
                    if (v < 0.0) throw DomainError("virtual_value: zero density at v");
                    return v - 1.0 / d.rate;
                } else if constexpr (std::is_same_v<D, LogNormal>) {
                    const double f = pdf(v);
                    if (!(f > 0.0)) throw DomainError("virtual_value: zero density at v");
                    return v - sf(v) / f;
                } else {
                    throw UnsupportedOperation("virtual_value: point mass has no density");
                }
            },
            var_);
    }

    // Strict monotonicity scan of the virtual value over a uniform grid.
    // Infinite upper supports are truncated at the 0.9999 quantile; a support
    // endpoint with zero density is trimmed to the 1e-4 quantile.
    bool is_regular(int grid_points = 256) const {
        if (grid_points < 2) throw std::invalid_argument("is_regular: need grid_points >= 2");
        if (std::holds_alternative<PointMass>(var_)) return true;

        double lo = support_lo();
        double hi = support_hi();
        if (!std::isfinite(hi)) hi = quantile(0.9999);
        if (!(pdf(lo) > 0.0)) lo = quantile(1e-4);

        double prev = virtual_value(lo);
        for (int i = 1; i < grid_points; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);
            const double cur = virtual_value(x);
            if (!(cur > prev)) return false;
            prev = cur;
        }
        return true;
    }

    double support_lo() const {
        return std::visit(
            [](const auto& d) -> double {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Uniform>) return d.lo;
                else if constexpr (std::is_same_v<D, Exponential>) return 0.0;
                else if constexpr (std::is_same_v<D, LogNormal>) return 0.0;
                else return d.value;
            },
            var_);
    }

    double support_hi() const {
        return std::visit(
            [](const auto& d) -> double {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Uniform>) return d.hi;
                else if constexpr (std::is_same_v<D, PointMass>) return d.value;
                else return std::numeric_limits<double>::infinity();
            },
            var_);
    }

    double median() const { return quantile(0.5); }

    bool is_continuous() const { return !std::holds_alternative<PointMass>(var_); }

    const Variant& value() const { return var_; }

    std::string kind_name() const {
        return std::visit(
            [](const auto& d) -> std::string {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Uniform>) return "uniform";
                else if constexpr (std::is_same_v<D, Exponential>) return "exponential";
                else if constexpr (std::is_same_v<D, LogNormal>) return "lognormal";
                else return "point";
            },
            var_);
    }

    nlohmann::json to_json() const {
        nlohmann::json params;
        std::visit(
            [&params](const auto& d) {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Uniform>) {
                    params = {{"lo", d.lo}, {"hi", d.hi}};
                } else if constexpr (std::is_same_v<D, Exponential>) {
                    params = {{"rate", d.rate}};
                } else if constexpr (std::is_same_v<D, LogNormal>) {
                    params = {{"mu", d.mu}, {"sigma", d.sigma}};
                } else {
                    params = {{"v", d.value}};
                }
            },
            var_);
        return {{"kind", kind_name()}, {"params", params}};
    }

    static ValuationDistribution from_json(const nlohmann::json& j) {
        require_keys(j, {"kind", "params"}, "distribution");
        const std::string kind = j.at("kind").get<std::string>();
        const nlohmann::json& p = j.at("params");
        if (kind == "uniform") {
            require_keys(p, {"lo", "hi"}, "uniform params");
            return uniform(p.at("lo").get<double>(), p.at("hi").get<double>());
        }
        if (kind == "exponential") {
            require_keys(p, {"rate"}, "exponential params");
            return exponential(p.at("rate").get<double>());
        }
        if (kind == "lognormal") {
            require_keys(p, {"mu", "sigma"}, "lognormal params");
            return lognormal(p.at("mu").get<double>(), p.at("sigma").get<double>());
        }
        if (kind == "point") {
            require_keys(p, {"v"}, "point params");
            return point(p.at("v").get<double>());
        }
        throw std::invalid_argument("distribution: unknown kind '" + kind + "'");
    }

    // Strict object schema: every listed key present, nothing else allowed.
    static void require_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                             const std::string& what) {
        if (!j.is_object()) throw std::invalid_argument(what + ": expected a JSON object");
        for (const char* k : keys)
            if (!j.contains(k)) throw std::invalid_argument(what + ": missing key '" + k + "'");
        for (const auto& [key, _] : j.items()) {
            bool known = false;
            for (const char* k : keys) known |= (key == k);
            if (!known) throw std::invalid_argument(what + ": unknown key '" + key + "'");
        }
    }

private:
    explicit ValuationDistribution(Variant v) : var_(v) {}
    Variant var_;
};

}  // namespace rppa
