#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rppa/auction.hpp"
#include "rppa/distributions.hpp"
#include "rppa/errors.hpp"
#include "rppa/prng.hpp"
#include "rppa/reserve.hpp"

namespace rppa {

// A DSP client. dists has one entry per item type (size 1 in homogeneous
// markets). demand is the minimum number of impressions to win; budget, when
// set, caps total spend; type_targets (when non-empty, size K) are per-type
// impression minima; throttle is a per-round participation probability.
struct Advertiser {
    int id = 1;
    std::vector<ValuationDistribution> dists;
    long demand = 0;
    std::optional<double> budget;
    std::vector<long> type_targets;
    std::optional<double> throttle;

    nlohmann::json to_json() const {
        nlohmann::json ds = nlohmann::json::array();
        for (const auto& d : dists) ds.push_back(d.to_json());
        nlohmann::json j = {{"id", id}, {"dists", ds}, {"demand", demand}};
        if (budget) j["budget"] = *budget;
        if (!type_targets.empty()) j["type_targets"] = type_targets;
        if (throttle) j["throttle"] = *throttle;
        return j;
    }
    static Advertiser from_json(const nlohmann::json& j) {
        Advertiser a;
        if (!j.is_object()) throw std::invalid_argument("advertiser: expected a JSON object");
        for (const auto& [key, _] : j.items()) {
            if (key != "id" && key != "dists" && key != "demand" && key != "budget" &&
                key != "type_targets" && key != "throttle")
                throw std::invalid_argument("advertiser: unknown key '" + key + "'");
        }
        a.id = j.value("id", 1);
        for (const auto& dj : j.at("dists")) a.dists.push_back(ValuationDistribution::from_json(dj));
        if (a.dists.empty()) throw std::invalid_argument("advertiser: needs at least one dist");
        a.demand = j.value("demand", 0L);
        if (a.demand < 0) throw std::invalid_argument("advertiser: demand must be >= 0");
        if (j.contains("budget")) {
            a.budget = j.at("budget").get<double>();
            if (!(*a.budget >= 0.0)) throw std::invalid_argument("advertiser: budget must be >= 0");
        }
        if (j.contains("type_targets")) a.type_targets = j.at("type_targets").get<std::vector<long>>();
        if (j.contains("throttle")) a.throttle = j.at("throttle").get<double>();
        return a;
    }
};

// Hindsight valuations v[n][k][t], stored t-major so draws happen in round
// order (round, then type, then advertiser).
class ValuationTensor {
public:
    ValuationTensor(int N, int K, long T)
        : N_(N), K_(K), T_(T), v_(static_cast<std::size_t>(N) * K * T, 0.0) {
        if (N < 1 || K < 1 || T < 1)
            throw std::invalid_argument("valuation tensor: dimensions must be positive");
    }

    static ValuationTensor draw(const std::vector<Advertiser>& advertisers, int K, long T,
                                RandomStream& rng) {
        const int N = static_cast<int>(advertisers.size());
        if (N < 1) throw std::invalid_argument("valuation tensor: no advertisers");
        for (const auto& a : advertisers)
            if (static_cast<int>(a.dists.size()) != K)
                throw DimensionMismatch("valuation tensor: advertiser " + std::to_string(a.id) +
                                        " has wrong number of per-type dists");
        ValuationTensor out(N, K, T);
        for (long t = 0; t < T; ++t)
            for (int k = 0; k < K; ++k)
                for (int n = 0; n < N; ++n)
                    out.set(n, k, t, advertisers[static_cast<std::size_t>(n)]
                                         .dists[static_cast<std::size_t>(k)]
                                         .sample(rng));
        return out;
    }

    // Homogeneous matrix from explicit rows values[n][t].
    static ValuationTensor from_rows(const std::vector<std::vector<double>>& rows) {
        const int N = static_cast<int>(rows.size());
        if (N < 1 || rows[0].empty())
            throw std::invalid_argument("valuation tensor: empty rows");
        const long T = static_cast<long>(rows[0].size());
        ValuationTensor out(N, 1, T);
        for (int n = 0; n < N; ++n) {
            if (static_cast<long>(rows[static_cast<std::size_t>(n)].size()) != T)
                throw DimensionMismatch("valuation tensor: ragged rows");
            for (long t = 0; t < T; ++t)
                out.set(n, 0, t, rows[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)]);
        }
        return out;
    }

    double at(int n, int k, long t) const { return v_[index(n, k, t)]; }
    void set(int n, int k, long t, double value) { v_[index(n, k, t)] = value; }

    int N() const { return N_; }
    int K() const { return K_; }
    long T() const { return T_; }

private:
    std::size_t index(int n, int k, long t) const {
        return (static_cast<std::size_t>(t) * K_ + static_cast<std::size_t>(k)) * N_ +
               static_cast<std::size_t>(n);
    }
    int N_;
    int K_;
    long T_;
    std::vector<double> v_;
};

// Per-round scheduling decisions: at most one winner per round, the price is
// always the quoted reserve, and a winner's valuation strictly exceeds it
// (boosted policies are the one exception and may buy below value on
// purpose; their effective valuation still clears the price).
class AllocationMatrix {
public:
    struct Round {
        std::optional<int> winner;
        int type = 0;
        double price = 0.0;
        double valuation = 0.0;
    };

    AllocationMatrix(int N, long T) : N_(N), rounds_(static_cast<std::size_t>(T)) {
        if (N < 1 || T < 1)
            throw std::invalid_argument("allocation matrix: dimensions must be positive");
    }

    void assign(long t, int n, double price, double valuation, int type = 0) {
        Round& r = rounds_[static_cast<std::size_t>(t)];
        r.winner = n;
        r.type = type;
        r.price = price;
        r.valuation = valuation;
    }
    void clear(long t) { rounds_[static_cast<std::size_t>(t)] = Round{}; }

    int x(int n, long t) const {
        const Round& r = rounds_[static_cast<std::size_t>(t)];
        return (r.winner && *r.winner == n) ? 1 : 0;
    }
    const Round& round(long t) const { return rounds_[static_cast<std::size_t>(t)]; }

    int N() const { return N_; }
    long T() const { return static_cast<long>(rounds_.size()); }

    long wins(int n) const {
        long c = 0;
        for (const Round& r : rounds_) c += (r.winner && *r.winner == n);
        return c;
    }
    long wins_of_type(int n, int k) const {
        long c = 0;
        for (const Round& r : rounds_) c += (r.winner && *r.winner == n && r.type == k);
        return c;
    }
    double spend(int n) const {
        double s = 0.0;
        for (const Round& r : rounds_)
            if (r.winner && *r.winner == n) s += r.price;
        return s;
    }
    double surplus(int n) const {
        double s = 0.0;
        for (const Round& r : rounds_)
            if (r.winner && *r.winner == n) s += r.valuation - r.price;
        return s;
    }
    long total_impressions() const {
        long c = 0;
        for (const Round& r : rounds_) c += r.winner.has_value();
        return c;
    }
    double seller_revenue() const {
        double s = 0.0;
        for (const Round& r : rounds_)
            if (r.winner) s += r.price;
        return s;
    }
    double dsp_surplus() const {
        double s = 0.0;
        for (const Round& r : rounds_)
            if (r.winner) s += r.valuation - r.price;
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json rounds = nlohmann::json::array();
        for (std::size_t t = 0; t < rounds_.size(); ++t) {
            const Round& r = rounds_[t];
            nlohmann::json rj = {{"t", t}, {"type", r.type + 1}};
            if (r.winner) {
                rj["winner"] = *r.winner + 1;
                rj["price"] = r.price;
                rj["valuation"] = r.valuation;
            }
            rounds.push_back(std::move(rj));
        }
        return rounds;
    }

private:
    int N_;
    std::vector<Round> rounds_;
};

enum class InnerRule { RoundRobin, UniformRandom, DemandWeighted };

struct PolicyOptions {
    // When non-empty (size N): advertiser n is ineligible for a round whose
    // price would push its spend past budgets[n].
    std::vector<double> budgets;
};

namespace detail {

inline bool budget_ok(const PolicyOptions& opts, int n, double price,
                      const std::vector<double>& spent) {
    if (opts.budgets.empty()) return true;
    return spent[static_cast<std::size_t>(n)] + price <=
           opts.budgets[static_cast<std::size_t>(n)] + 1e-12;
}

inline int pick_weighted(RandomStream& rng, const std::vector<int>& indices,
                         const std::vector<double>& weight) {
    double total = 0.0;
    for (int i : indices) total += weight[static_cast<std::size_t>(i)];
    const double u = rng.next_unit() * total;
    double cum = 0.0;
    for (int i : indices) {
        cum += weight[static_cast<std::size_t>(i)];
        if (u < cum) return i;
    }
    return indices.back();
}

}  // namespace detail

// Schedule the highest-valuation advertiser whenever that valuation clears
// the reserve; ties are broken uniformly at random from the policy stream.
inline AllocationMatrix allocate_hindsight_max(const ValuationTensor& vals, double q,
                                               RandomStream& rng,
                                               const PolicyOptions& opts = {}) {
    AllocationMatrix alloc(vals.N(), vals.T());
    std::vector<double> spent(static_cast<std::size_t>(vals.N()), 0.0);
    for (long t = 0; t < vals.T(); ++t) {
        double best = -std::numeric_limits<double>::infinity();
        std::vector<int> argmax;
        for (int n = 0; n < vals.N(); ++n) {
            const double v = vals.at(n, 0, t);
            if (!(v > q)) continue;
            if (!detail::budget_ok(opts, n, q, spent)) continue;
            if (v > best) {
                best = v;
                argmax.assign(1, n);
            } else if (v == best) {
                argmax.push_back(n);
            }
        }
        if (argmax.empty()) continue;
        const int winner = argmax.size() == 1
                               ? argmax[0]
                               : argmax[rng.next_below(argmax.size())];
        alloc.assign(t, winner, q, best);
        spent[static_cast<std::size_t>(winner)] += q;
    }
    return alloc;
}

// Heterogeneous variant: round t quotes the realized type's reserve and takes
// the argmax over that type's valuations.
inline AllocationMatrix allocate_hetero_hindsight(const ValuationTensor& vals,
                                                  const TypeSequence& types,
                                                  const ReservePolicy& policy, RandomStream& rng,
                                                  const PolicyOptions& opts = {}) {
    if (types.T() != vals.T())
        throw DimensionMismatch("allocate_hetero_hindsight: type sequence length mismatch");
    AllocationMatrix alloc(vals.N(), vals.T());
    std::vector<double> spent(static_cast<std::size_t>(vals.N()), 0.0);
    for (long t = 0; t < vals.T(); ++t) {
        const int k = types.types[static_cast<std::size_t>(t)];
        if (k < 0 || k >= vals.K())
            throw DimensionMismatch("allocate_hetero_hindsight: type index out of range");
        const double q = policy.reserve_for(k, vals.K());
        double best = -std::numeric_limits<double>::infinity();
        std::vector<int> argmax;
        for (int n = 0; n < vals.N(); ++n) {
            const double v = vals.at(n, k, t);
            if (!(v > q)) continue;
            if (!detail::budget_ok(opts, n, q, spent)) continue;
            if (v > best) {
                best = v;
                argmax.assign(1, n);
            } else if (v == best) {
                argmax.push_back(n);
            }
        }
        if (argmax.empty()) continue;
        const int winner = argmax.size() == 1
                               ? argmax[0]
                               : argmax[rng.next_below(argmax.size())];
        alloc.assign(t, winner, q, best, k);
        spent[static_cast<std::size_t>(winner)] += q;
    }
    return alloc;
}

// Nominate advertiser (t mod N) each round; the nominee wins iff its value
// clears the reserve. The pointer advances every round, win or not.
inline AllocationMatrix allocate_round_robin(const ValuationTensor& vals, double q,
                                             const PolicyOptions& opts = {}) {
    AllocationMatrix alloc(vals.N(), vals.T());
    std::vector<double> spent(static_cast<std::size_t>(vals.N()), 0.0);
    for (long t = 0; t < vals.T(); ++t) {
        const int n = static_cast<int>(t % vals.N());
        const double v = vals.at(n, 0, t);
        if (v > q && detail::budget_ok(opts, n, q, spent)) {
            alloc.assign(t, n, q, v);
            spent[static_cast<std::size_t>(n)] += q;
        }
    }
    return alloc;
}

// Nominate a uniformly random advertiser each round.
inline AllocationMatrix allocate_uniform_random(const ValuationTensor& vals, double q,
                                                RandomStream& rng,
                                                const PolicyOptions& opts = {}) {
    AllocationMatrix alloc(vals.N(), vals.T());
    std::vector<double> spent(static_cast<std::size_t>(vals.N()), 0.0);
    for (long t = 0; t < vals.T(); ++t) {
        const int n = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vals.N())));
        const double v = vals.at(n, 0, t);
        if (v > q && detail::budget_ok(opts, n, q, spent)) {
            alloc.assign(t, n, q, v);
            spent[static_cast<std::size_t>(n)] += q;
        }
    }
    return alloc;
}

// Nominate advertiser n with probability weight_n / sum(weight) each round.
inline AllocationMatrix allocate_weighted_nominee(const ValuationTensor& vals, double q,
                                                  const std::vector<double>& weight,
                                                  RandomStream& rng,
                                                  const PolicyOptions& opts = {}) {
    if (static_cast<int>(weight.size()) != vals.N())
        throw DimensionMismatch("allocate_weighted_nominee: weight size mismatch");
    double total = 0.0;
    for (double w : weight) {
        if (!(w >= 0.0)) throw std::invalid_argument("weights must be >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("weights must not all be zero");

    std::vector<int> all(static_cast<std::size_t>(vals.N()));
    for (int n = 0; n < vals.N(); ++n) all[static_cast<std::size_t>(n)] = n;

    AllocationMatrix alloc(vals.N(), vals.T());
    std::vector<double> spent(static_cast<std::size_t>(vals.N()), 0.0);
    for (long t = 0; t < vals.T(); ++t) {
        const int n = detail::pick_weighted(rng, all, weight);
        const double v = vals.at(n, 0, t);
        if (v > q && detail::budget_ok(opts, n, q, spent)) {
            alloc.assign(t, n, q, v);
            spent[static_cast<std::size_t>(n)] += q;
        }
    }
    return alloc;
}

// Demand-proportional nominee weights xi_n = demand_n / sum(demand).
inline std::vector<double> demand_weights(const std::vector<Advertiser>& advertisers) {
    std::vector<double> w;
    w.reserve(advertisers.size());
    double total = 0.0;
    for (const auto& a : advertisers) {
        if (a.demand < 0) throw std::invalid_argument("demand_weights: negative demand");
        total += static_cast<double>(a.demand);
        w.push_back(static_cast<double>(a.demand));
    }
    if (!(total > 0.0)) throw std::invalid_argument("demand_weights: all demands are zero");
    for (double& x : w) x /= total;
    return w;
}

// Filter-then-select: restrict each round to advertisers whose (boosted)
// value clears the reserve, then pick by the inner rule over the eligible
// set. Boost entries raise both the eligibility test (v + boost > q) and the
// demand weight (weight + boost, renormalized over the eligible set); the
// price paid stays at the reserve. The round-robin pointer advances only
// past a scheduled advertiser.
inline AllocationMatrix allocate_filtered(const ValuationTensor& vals, double q, InnerRule rule,
                                          const std::vector<double>& weight, RandomStream& rng,
                                          const std::vector<double>& boost = {},
                                          const PolicyOptions& opts = {}) {
    if (rule == InnerRule::DemandWeighted && static_cast<int>(weight.size()) != vals.N())
        throw DimensionMismatch("allocate_filtered: weight size mismatch");
    if (!boost.empty() && static_cast<int>(boost.size()) != vals.N())
        throw DimensionMismatch("allocate_filtered: boost size mismatch");
    for (double b : boost)
        if (!(b >= 0.0)) throw std::invalid_argument("allocate_filtered: boosts must be >= 0");

    std::vector<double> effective_weight = weight;
    if (!boost.empty() && rule == InnerRule::DemandWeighted)
        for (int n = 0; n < vals.N(); ++n)
            effective_weight[static_cast<std::size_t>(n)] += boost[static_cast<std::size_t>(n)];

    AllocationMatrix alloc(vals.N(), vals.T());
    std::vector<double> spent(static_cast<std::size_t>(vals.N()), 0.0);
    std::vector<int> eligible;
    int pointer = 0;
    for (long t = 0; t < vals.T(); ++t) {
        eligible.clear();
        for (int n = 0; n < vals.N(); ++n) {
            const double lift = boost.empty() ? 0.0 : boost[static_cast<std::size_t>(n)];
            if (!(vals.at(n, 0, t) + lift > q)) continue;
            if (!detail::budget_ok(opts, n, q, spent)) continue;
            eligible.push_back(n);
        }
        if (eligible.empty()) continue;

        int winner = -1;
        switch (rule) {
            case InnerRule::RoundRobin: {
                for (int step = 0; step < vals.N(); ++step) {
                    const int cand = (pointer + step) % vals.N();
                    if (std::find(eligible.begin(), eligible.end(), cand) != eligible.end()) {
                        winner = cand;
                        break;
                    }
                }
                pointer = (winner + 1) % vals.N();
                break;
            }
            case InnerRule::UniformRandom:
                winner = eligible[rng.next_below(eligible.size())];
                break;
            case InnerRule::DemandWeighted:
                winner = detail::pick_weighted(rng, eligible, effective_weight);
                break;
        }
        alloc.assign(t, winner, q, vals.at(winner, 0, t));
        spent[static_cast<std::size_t>(winner)] += q;
    }
    return alloc;
}

// Participation probability that satisfies a budget in expectation:
// xi = min(B / (q T), 1), optionally shaved by a safety margin.
inline double probabilistic_throttle(double budget, double q, long T, double safety = 0.0) {
    if (!(q > 0.0)) throw DomainError("probabilistic_throttle: q must be > 0");
    if (!(budget >= 0.0) || T < 1)
        throw std::invalid_argument("probabilistic_throttle: bad budget or T");
    if (!(safety >= 0.0 && safety < 1.0))
        throw std::invalid_argument("probabilistic_throttle: safety must be in [0, 1)");
    const double impressions_affordable = budget / q;
    const double xi = std::min(impressions_affordable / static_cast<double>(T), 1.0);
    return xi * (1.0 - safety);
}

// Budget-proportional scheduling profile across N advertisers; sums to 1.
inline std::vector<double> throttle_profile(const std::vector<double>& budgets, double q, long T) {
    if (!(q > 0.0)) throw DomainError("throttle_profile: q must be > 0");
    if (T < 1) throw std::invalid_argument("throttle_profile: T must be >= 1");
    double total = 0.0;
    for (double b : budgets) {
        if (!(b >= 0.0)) throw std::invalid_argument("throttle_profile: budgets must be >= 0");
        total += b;
    }
    if (!(total > 0.0)) throw std::invalid_argument("throttle_profile: all budgets are zero");
    std::vector<double> xi;
    xi.reserve(budgets.size());
    for (double b : budgets) xi.push_back(b / total);
    return xi;
}

enum class SchedulingPolicy {
    HindsightMax,
    RandomizedMax,
    HeteroHindsight,
    RoundRobin,
    UniformRandom,
    FilteredRoundRobin,
    FilteredRandom,
    GreedyDemand,
    LagrangianBoost,
};

inline std::string policy_name(SchedulingPolicy p) {
    switch (p) {
        case SchedulingPolicy::HindsightMax: return "hindsight-max";
        case SchedulingPolicy::RandomizedMax: return "randomized-max";
        case SchedulingPolicy::HeteroHindsight: return "hetero-hindsight";
        case SchedulingPolicy::RoundRobin: return "round-robin";
        case SchedulingPolicy::UniformRandom: return "uniform-random";
        case SchedulingPolicy::FilteredRoundRobin: return "filtered-rr";
        case SchedulingPolicy::FilteredRandom: return "filtered-random";
        case SchedulingPolicy::GreedyDemand: return "greedy-demand";
        case SchedulingPolicy::LagrangianBoost: return "lagrangian-boost";
    }
    return "unknown";
}

inline SchedulingPolicy parse_policy(const std::string& name) {
    for (SchedulingPolicy p :
         {SchedulingPolicy::HindsightMax, SchedulingPolicy::RandomizedMax,
          SchedulingPolicy::HeteroHindsight, SchedulingPolicy::RoundRobin,
          SchedulingPolicy::UniformRandom, SchedulingPolicy::FilteredRoundRobin,
          SchedulingPolicy::FilteredRandom, SchedulingPolicy::GreedyDemand,
          SchedulingPolicy::LagrangianBoost})
        if (policy_name(p) == name) return p;
    throw std::invalid_argument("unknown policy '" + name + "'");
}

// Advertisers plus the market they bid into.
struct DspMarket {
    long T = 0;
    std::uint64_t seed = 0;
    std::vector<double> type_probs{1.0};  // size K
    std::vector<Advertiser> advertisers;

    int K() const { return static_cast<int>(type_probs.size()); }
    int N() const { return static_cast<int>(advertisers.size()); }

    nlohmann::json to_json() const {
        nlohmann::json advs = nlohmann::json::array();
        for (const auto& a : advertisers) advs.push_back(a.to_json());
        return {{"T", T}, {"seed", seed}, {"type_probs", type_probs}, {"advertisers", advs}};
    }
    static DspMarket from_json(const nlohmann::json& j) {
        ValuationDistribution::require_keys(j, {"T", "seed", "type_probs", "advertisers"},
                                            "dsp market");
        DspMarket m;
        m.T = j.at("T").get<long>();
        if (m.T < 1) throw std::invalid_argument("dsp market: T must be >= 1");
        m.seed = j.at("seed").get<std::uint64_t>();
        m.type_probs = j.at("type_probs").get<std::vector<double>>();
        double sum = 0.0;
        for (double p : m.type_probs) sum += p;
        if (m.type_probs.empty() || std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("dsp market: type_probs must sum to 1");
        for (const auto& aj : j.at("advertisers")) m.advertisers.push_back(Advertiser::from_json(aj));
        if (m.advertisers.empty()) throw std::invalid_argument("dsp market: no advertisers");
        return m;
    }
};

struct ScheduleRun {
    AllocationMatrix allocation;
    SimulationReport report;
};

namespace detail {

inline PolicyOptions options_from(const std::vector<Advertiser>& advertisers) {
    PolicyOptions opts;
    bool any = false;
    for (const auto& a : advertisers) any |= a.budget.has_value();
    if (any) {
        opts.budgets.reserve(advertisers.size());
        for (const auto& a : advertisers)
            opts.budgets.push_back(a.budget.value_or(std::numeric_limits<double>::infinity()));
    }
    return opts;
}

inline SimulationReport report_from_allocation(const AllocationMatrix& alloc,
                                               const std::vector<Advertiser>& advertisers,
                                               const std::string& scenario,
                                               const std::string& q_label, std::uint64_t seed) {
    SimulationReport rep;
    rep.scenario = scenario;
    rep.q_or_policy = q_label;
    rep.rounds = alloc.T();
    rep.seed = seed;
    rep.seller_revenue_total = alloc.seller_revenue();
    rep.buyer_revenue_total = alloc.dsp_surplus();
    rep.impressions_total = alloc.total_impressions();
    rep.advertisers.resize(advertisers.size());
    for (std::size_t n = 0; n < advertisers.size(); ++n) {
        AdvertiserStats& s = rep.advertisers[n];
        s.id = advertisers[n].id;
        s.impressions = alloc.wins(static_cast<int>(n));
        s.revenue_total = alloc.surplus(static_cast<int>(n));
        s.spend = alloc.spend(static_cast<int>(n));
        s.demand_met = s.impressions >= advertisers[n].demand;
        s.budget_respected =
            !advertisers[n].budget || s.spend <= *advertisers[n].budget + 1e-9;
    }
    return rep;
}

}  // namespace detail

// Run a named policy on a seeded market. Valuations come from the valuation
// substream, nominee/tie choices from the policy substream, item types (for
// the heterogeneous policy) from the type substream; policies with the same
// seed therefore see the same hindsight valuations.
inline ScheduleRun run_scheduling_policy(SchedulingPolicy policy, const DspMarket& market,
                                         const ReservePolicy& reserve,
                                         const std::vector<double>& boost = {}) {
    RandomStream value_rng = RandomStream::substream(market.seed, stream_id::valuations);
    RandomStream policy_rng = RandomStream::substream(market.seed, stream_id::policy);
    const ValuationTensor vals = ValuationTensor::draw(market.advertisers, market.K(), market.T,
                                                       value_rng);
    const PolicyOptions opts = detail::options_from(market.advertisers);

    auto static_q = [&]() -> double {
        if (!reserve.is_static())
            throw DimensionMismatch(policy_name(policy) + ": needs a static reserve");
        return reserve.static_value();
    };
    auto require_homogeneous = [&]() {
        if (market.K() != 1)
            throw DimensionMismatch(policy_name(policy) + ": homogeneous policy, but K > 1");
    };

    std::optional<AllocationMatrix> alloc;
    switch (policy) {
        case SchedulingPolicy::HindsightMax:
        case SchedulingPolicy::RandomizedMax:
            require_homogeneous();
            alloc = allocate_hindsight_max(vals, static_q(), policy_rng, opts);
            break;
        case SchedulingPolicy::HeteroHindsight: {
            RandomStream type_rng = RandomStream::substream(market.seed, stream_id::item_types);
            const TypeSequence types = draw_type_sequence(market.type_probs, market.T, type_rng);
            alloc = allocate_hetero_hindsight(vals, types, reserve, policy_rng, opts);
            break;
        }
        case SchedulingPolicy::RoundRobin:
            require_homogeneous();
            alloc = allocate_round_robin(vals, static_q(), opts);
            break;
        case SchedulingPolicy::UniformRandom:
            require_homogeneous();
            alloc = allocate_uniform_random(vals, static_q(), policy_rng, opts);
            break;
        case SchedulingPolicy::FilteredRoundRobin:
            require_homogeneous();
            alloc = allocate_filtered(vals, static_q(), InnerRule::RoundRobin, {}, policy_rng,
                                      {}, opts);
            break;
        case SchedulingPolicy::FilteredRandom:
            require_homogeneous();
            alloc = allocate_filtered(vals, static_q(), InnerRule::UniformRandom, {}, policy_rng,
                                      {}, opts);
            break;
        case SchedulingPolicy::GreedyDemand:
            require_homogeneous();
            alloc = allocate_weighted_nominee(vals, static_q(), demand_weights(market.advertisers),
                                              policy_rng, opts);
            break;
        case SchedulingPolicy::LagrangianBoost:
            require_homogeneous();
            alloc = allocate_filtered(vals, static_q(), InnerRule::DemandWeighted,
                                      demand_weights(market.advertisers), policy_rng, boost, opts);
            break;
    }

    std::string q_label = reserve.is_static() ? std::to_string(reserve.static_value())
                                              : std::string("per-type");
    SimulationReport report = detail::report_from_allocation(*alloc, market.advertisers,
                                                             policy_name(policy), q_label,
                                                             market.seed);
    return ScheduleRun{std::move(*alloc), std::move(report)};
}

}  // namespace rppa
