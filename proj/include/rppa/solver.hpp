#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rppa/errors.hpp"
#include "rppa/program.hpp"
#include "rppa/scheduling.hpp"

namespace rppa {

inline double program_objective(const ScheduleProgram& prog, const AllocationMatrix& x) {
    double total = 0.0;
    for (long t = 0; t < prog.T; ++t) {
        const auto& r = x.round(t);
        if (r.winner)
            total += prog.surplus[static_cast<std::size_t>(*r.winner)][static_cast<std::size_t>(t)];
    }
    return total;
}

// Exact constraint check against every stored constraint family.
inline bool program_feasible(const ScheduleProgram& prog, const AllocationMatrix& x,
                             std::string* why = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (x.N() != prog.N || x.T() != prog.T) return fail("dimension mismatch");
    std::vector<long> wins(static_cast<std::size_t>(prog.N), 0);
    std::vector<double> spend(static_cast<std::size_t>(prog.N), 0.0);
    std::vector<std::vector<long>> type_wins(
        static_cast<std::size_t>(prog.N), std::vector<long>(static_cast<std::size_t>(prog.K), 0));
    for (long t = 0; t < prog.T; ++t) {
        const auto& r = x.round(t);
        if (!r.winner) continue;
        const int n = *r.winner;
        if (!prog.eligible[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)])
            return fail("ineligible winner in round " + std::to_string(t));
        ++wins[static_cast<std::size_t>(n)];
        spend[static_cast<std::size_t>(n)] += prog.price[static_cast<std::size_t>(t)];
        ++type_wins[static_cast<std::size_t>(n)]
                   [static_cast<std::size_t>(prog.round_type[static_cast<std::size_t>(t)])];
    }
    for (int n = 0; n < prog.N; ++n) {
        if (wins[static_cast<std::size_t>(n)] < prog.demand[static_cast<std::size_t>(n)])
            return fail("demand unmet for advertiser " + std::to_string(n + 1));
        if (!prog.win_cap.empty() &&
            wins[static_cast<std::size_t>(n)] > prog.win_cap[static_cast<std::size_t>(n)])
            return fail("win cap exceeded for advertiser " + std::to_string(n + 1));
        if (!prog.budget.empty() &&
            spend[static_cast<std::size_t>(n)] > prog.budget[static_cast<std::size_t>(n)] + 1e-9)
            return fail("budget exceeded for advertiser " + std::to_string(n + 1));
        if (!prog.type_target.empty())
            for (int k = 0; k < prog.K; ++k)
                if (type_wins[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] <
                    prog.type_target[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)])
                    return fail("type target unmet for advertiser " + std::to_string(n + 1));
    }
    return true;
}

struct EnumerationResult {
    bool feasible = false;
    double value = 0.0;
    std::optional<AllocationMatrix> allocation;
};

namespace detail {

struct EnumState {
    const ScheduleProgram* prog;
    std::vector<int> choice;  // -1 = unallocated
    std::vector<long> wins;
    std::vector<double> spend;
    std::vector<std::vector<long>> type_wins;
    double value = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_choice;
    bool found = false;

    long rounds_needed() const {
        long need = 0;
        for (int n = 0; n < prog->N; ++n) {
            long per_type = 0;
            if (!prog->type_target.empty())
                for (int k = 0; k < prog->K; ++k)
                    per_type += std::max(
                        0L, prog->type_target[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] -
                                type_wins[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)]);
            need += std::max(per_type,
                             std::max(0L, prog->demand[static_cast<std::size_t>(n)] -
                                              wins[static_cast<std::size_t>(n)]));
        }
        return need;
    }
};

inline void enum_rec(EnumState& st, long t) {
    const ScheduleProgram& prog = *st.prog;
    if (t == prog.T) {
        bool ok = true;
        for (int n = 0; n < prog.N && ok; ++n) {
            ok = st.wins[static_cast<std::size_t>(n)] >= prog.demand[static_cast<std::size_t>(n)];
            if (ok && !prog.type_target.empty())
                for (int k = 0; k < prog.K && ok; ++k)
                    ok = st.type_wins[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] >=
                         prog.type_target[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
        }
        if (ok && (!st.found || st.value > st.best)) {
            st.found = true;
            st.best = st.value;
            st.best_choice = st.choice;
        }
        return;
    }
    if (st.rounds_needed() > prog.T - t) return;  // demands can no longer be met

    const int k = prog.round_type[static_cast<std::size_t>(t)];
    const double price = prog.price[static_cast<std::size_t>(t)];

    st.choice[static_cast<std::size_t>(t)] = -1;
    enum_rec(st, t + 1);

    for (int n = 0; n < prog.N; ++n) {
        if (!prog.eligible[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)]) continue;
        if (!prog.win_cap.empty() &&
            st.wins[static_cast<std::size_t>(n)] + 1 > prog.win_cap[static_cast<std::size_t>(n)])
            continue;
        if (!prog.budget.empty() &&
            st.spend[static_cast<std::size_t>(n)] + price >
                prog.budget[static_cast<std::size_t>(n)] + 1e-9)
            continue;
        st.choice[static_cast<std::size_t>(t)] = n;
        ++st.wins[static_cast<std::size_t>(n)];
        st.spend[static_cast<std::size_t>(n)] += price;
        ++st.type_wins[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
        st.value += prog.surplus[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)];
        enum_rec(st, t + 1);
        st.value -= prog.surplus[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)];
        --st.type_wins[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
        st.spend[static_cast<std::size_t>(n)] -= price;
        --st.wins[static_cast<std::size_t>(n)];
        st.choice[static_cast<std::size_t>(t)] = -1;
    }
}

inline AllocationMatrix choice_to_alloc(const ScheduleProgram& prog,
                                        const std::vector<int>& choice) {
    AllocationMatrix alloc(prog.N, prog.T);
    for (long t = 0; t < prog.T; ++t) {
        const int n = choice[static_cast<std::size_t>(t)];
        if (n < 0) continue;
        const double price = prog.price[static_cast<std::size_t>(t)];
        const double w = prog.surplus[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)];
        alloc.assign(t, n, price, price + w, prog.round_type[static_cast<std::size_t>(t)]);
    }
    return alloc;
}

}  // namespace detail

// Exhaustive search over all (N+1)^T per-round choices. Refuses instances
// beyond the node bound; reports infeasibility distinctly from a zero-value
// optimum.
inline EnumerationResult enumerate_optimal(const ScheduleProgram& prog,
                                           double node_bound = 1e7) {
    prog.validate();
    double combos = 1.0;
    for (long t = 0; t < prog.T; ++t) {
        combos *= static_cast<double>(prog.N + 1);
        if (combos > node_bound)
            throw InstanceTooLarge("enumerate_optimal: (N+1)^T exceeds " +
                                   std::to_string(static_cast<long>(node_bound)));
    }

    detail::EnumState st;
    st.prog = &prog;
    st.choice.assign(static_cast<std::size_t>(prog.T), -1);
    st.wins.assign(static_cast<std::size_t>(prog.N), 0);
    st.spend.assign(static_cast<std::size_t>(prog.N), 0.0);
    st.type_wins.assign(static_cast<std::size_t>(prog.N),
                        std::vector<long>(static_cast<std::size_t>(prog.K), 0));
    detail::enum_rec(st, 0);

    EnumerationResult result;
    result.feasible = st.found;
    if (st.found) {
        result.value = st.best;
        result.allocation = detail::choice_to_alloc(prog, st.best_choice);
    }
    return result;
}

// L(x, lambda) = sum (w[n][t] + lambda_n) x[n][t] - sum lambda_n demand_n.
inline double lagrangian_value(const ScheduleProgram& prog, const std::vector<double>& lambda,
                               const AllocationMatrix& x) {
    if (static_cast<int>(lambda.size()) != prog.N)
        throw DimensionMismatch("lagrangian_value: lambda length mismatch");
    for (double l : lambda)
        if (!(l >= 0.0)) throw std::invalid_argument("lagrangian_value: lambda must be >= 0");
    double total = 0.0;
    for (long t = 0; t < prog.T; ++t) {
        const auto& r = x.round(t);
        if (r.winner)
            total += prog.surplus[static_cast<std::size_t>(*r.winner)][static_cast<std::size_t>(t)] +
                     lambda[static_cast<std::size_t>(*r.winner)];
    }
    for (int n = 0; n < prog.N; ++n)
        total -= lambda[static_cast<std::size_t>(n)] *
                 static_cast<double>(prog.demand[static_cast<std::size_t>(n)]);
    return total;
}

struct InnerMaxResult {
    AllocationMatrix allocation;
    double value = 0.0;          // integer optimum of the relaxed inner problem
    double value_relaxed = 0.0;  // LP-relaxed optimum; equal by per-round decomposition
};

// h(lambda) = max of the Lagrangian over allocations with at most one winner
// per round: schedule the advertiser maximizing the boosted surplus
// w + lambda_n (+ mu_{n,k} when per-type minima are dualized), kept only when
// that score is >= 0. The eligibility mask is not imposed here -- a large
// multiplier deliberately buys rounds below value, which is how unmet demand
// gets filled -- so the result upper-bounds the constrained optimum. The
// per-round maximum is attained at a 0/1 vertex, so the integer and
// LP-relaxed values coincide.
inline InnerMaxResult inner_max(const ScheduleProgram& prog, const std::vector<double>& lambda,
                                const std::vector<std::vector<double>>& mu = {}) {
    if (static_cast<int>(lambda.size()) != prog.N)
        throw DimensionMismatch("inner_max: lambda length mismatch");
    for (double l : lambda)
        if (!(l >= 0.0)) throw std::invalid_argument("inner_max: lambda must be >= 0");
    if (!mu.empty() && static_cast<int>(mu.size()) != prog.N)
        throw DimensionMismatch("inner_max: mu rows mismatch");

    AllocationMatrix alloc(prog.N, prog.T);
    double value = 0.0;
    for (long t = 0; t < prog.T; ++t) {
        const int k = prog.round_type[static_cast<std::size_t>(t)];
        int best_n = -1;
        double best_score = 0.0;
        for (int n = 0; n < prog.N; ++n) {
            double score = prog.surplus[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)] +
                           lambda[static_cast<std::size_t>(n)];
            if (!mu.empty())
                score += mu[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
            if (score >= 0.0 && (best_n < 0 || score > best_score)) {
                best_n = n;
                best_score = score;
            }
        }
        if (best_n >= 0) {
            const double price = prog.price[static_cast<std::size_t>(t)];
            const double w =
                prog.surplus[static_cast<std::size_t>(best_n)][static_cast<std::size_t>(t)];
            alloc.assign(t, best_n, price, price + w, k);
            value += best_score;
        }
    }
    for (int n = 0; n < prog.N; ++n) {
        value -= lambda[static_cast<std::size_t>(n)] *
                 static_cast<double>(prog.demand[static_cast<std::size_t>(n)]);
        if (!mu.empty() && !prog.type_target.empty())
            for (int k = 0; k < prog.K; ++k)
                value -= mu[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] *
                         static_cast<double>(
                             prog.type_target[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)]);
    }
    return InnerMaxResult{std::move(alloc), value, value};
}

struct LagrangianState {
    std::vector<double> lambda;
    std::vector<std::vector<double>> mu;  // empty unless type targets are dualized
    int iteration = 0;
    double step0 = 1.0;
    double last_dual = std::numeric_limits<double>::infinity();
    double best_dual = std::numeric_limits<double>::infinity();
    double best_primal = -std::numeric_limits<double>::infinity();
    std::optional<AllocationMatrix> best_primal_alloc;
};

// Projected subgradient descent step for the dual minimization: multipliers
// grow where demand is unmet and shrink (clamped at zero) where it is
// exceeded. step defaults to step0 / iteration.
inline LagrangianState subgradient_step(LagrangianState state, const ScheduleProgram& prog,
                                        const AllocationMatrix& x_of_lambda,
                                        std::optional<double> step = std::nullopt) {
    const double s = step.value_or(state.step0 / std::max(1, state.iteration));
    if (!(s > 0.0)) throw std::invalid_argument("subgradient_step: step must be > 0");
    for (int n = 0; n < prog.N; ++n) {
        const double g = static_cast<double>(x_of_lambda.wins(n)) -
                         static_cast<double>(prog.demand[static_cast<std::size_t>(n)]);
        state.lambda[static_cast<std::size_t>(n)] =
            std::max(0.0, state.lambda[static_cast<std::size_t>(n)] - s * g);
    }
    if (!state.mu.empty() && !prog.type_target.empty())
        for (int n = 0; n < prog.N; ++n)
            for (int k = 0; k < prog.K; ++k) {
                const double g =
                    static_cast<double>(x_of_lambda.wins_of_type(n, k)) -
                    static_cast<double>(
                        prog.type_target[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)]);
                auto& m = state.mu[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
                m = std::max(0.0, m - s * g);
            }
    ++state.iteration;
    return state;
}

// Greedy feasibility repair: drop ineligible wins, trim cap/budget
// violations (dropping the lowest surplus wins first), then fill unmet
// per-type and overall demands with the advertiser's best eligible rounds,
// evicting a round's winner only when the evictee stays feasible. Returns
// nothing when the pass cannot reach feasibility.
inline std::optional<AllocationMatrix> repair_primal(const ScheduleProgram& prog,
                                                     const AllocationMatrix& x) {
    AllocationMatrix alloc = x;
    for (long t = 0; t < prog.T; ++t) {
        const auto& r = alloc.round(t);
        if (r.winner &&
            !prog.eligible[static_cast<std::size_t>(*r.winner)][static_cast<std::size_t>(t)])
            alloc.clear(t);
    }
    std::vector<long> wins(static_cast<std::size_t>(prog.N), 0);
    std::vector<double> spend(static_cast<std::size_t>(prog.N), 0.0);
    std::vector<std::vector<long>> type_wins(
        static_cast<std::size_t>(prog.N), std::vector<long>(static_cast<std::size_t>(prog.K), 0));
    for (long t = 0; t < prog.T; ++t) {
        const auto& r = alloc.round(t);
        if (!r.winner) continue;
        ++wins[static_cast<std::size_t>(*r.winner)];
        spend[static_cast<std::size_t>(*r.winner)] += prog.price[static_cast<std::size_t>(t)];
        ++type_wins[static_cast<std::size_t>(*r.winner)]
                   [static_cast<std::size_t>(prog.round_type[static_cast<std::size_t>(t)])];
    }

    auto cap_of = [&](int n) {
        return prog.win_cap.empty() ? std::numeric_limits<long>::max()
                                    : prog.win_cap[static_cast<std::size_t>(n)];
    };
    auto budget_of = [&](int n) {
        return prog.budget.empty() ? std::numeric_limits<double>::infinity()
                                   : prog.budget[static_cast<std::size_t>(n)];
    };
    auto surplus_at = [&](int n, long t) {
        return prog.surplus[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)];
    };
    auto drop = [&](int n, long t) {
        alloc.clear(t);
        --wins[static_cast<std::size_t>(n)];
        spend[static_cast<std::size_t>(n)] -= prog.price[static_cast<std::size_t>(t)];
        --type_wins[static_cast<std::size_t>(n)]
                   [static_cast<std::size_t>(prog.round_type[static_cast<std::size_t>(t)])];
    };
    auto take = [&](int n, long t) {
        alloc.assign(t, n, prog.price[static_cast<std::size_t>(t)],
                     prog.price[static_cast<std::size_t>(t)] + surplus_at(n, t),
                     prog.round_type[static_cast<std::size_t>(t)]);
        ++wins[static_cast<std::size_t>(n)];
        spend[static_cast<std::size_t>(n)] += prog.price[static_cast<std::size_t>(t)];
        ++type_wins[static_cast<std::size_t>(n)]
                   [static_cast<std::size_t>(prog.round_type[static_cast<std::size_t>(t)])];
    };

    // Trim cap and budget violations.
    for (int n = 0; n < prog.N; ++n) {
        while (wins[static_cast<std::size_t>(n)] > cap_of(n) ||
               spend[static_cast<std::size_t>(n)] > budget_of(n) + 1e-9) {
            long worst_t = -1;
            for (long t = 0; t < prog.T; ++t) {
                const auto& r = alloc.round(t);
                if (!r.winner || *r.winner != n) continue;
                if (worst_t < 0 || surplus_at(n, t) < surplus_at(n, worst_t)) worst_t = t;
            }
            if (worst_t < 0) break;
            drop(n, worst_t);
        }
    }

    // tk < 0 means "any type".
    auto fill = [&](int n, long needed, int tk) -> bool {
        if (needed <= 0) return true;
        std::vector<long> candidates;
        for (long t = 0; t < prog.T; ++t) {
            if (tk >= 0 && prog.round_type[static_cast<std::size_t>(t)] != tk) continue;
            if (!prog.eligible[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)]) continue;
            const auto& r = alloc.round(t);
            if (r.winner && *r.winner == n) continue;
            candidates.push_back(t);
        }
        std::sort(candidates.begin(), candidates.end(), [&](long a, long b) {
            const double da = surplus_at(n, a), db = surplus_at(n, b);
            if (da != db) return da > db;
            return a < b;
        });
        for (long t : candidates) {
            if (needed <= 0) break;
            if (wins[static_cast<std::size_t>(n)] + 1 > cap_of(n)) return false;
            if (spend[static_cast<std::size_t>(n)] + prog.price[static_cast<std::size_t>(t)] >
                budget_of(n) + 1e-9)
                continue;
            const auto& r = alloc.round(t);
            if (r.winner) {
                const int m = *r.winner;
                const int k = prog.round_type[static_cast<std::size_t>(t)];
                const bool evictable =
                    wins[static_cast<std::size_t>(m)] - 1 >=
                        prog.demand[static_cast<std::size_t>(m)] &&
                    (prog.type_target.empty() ||
                     type_wins[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] - 1 >=
                         prog.type_target[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)]);
                if (!evictable) continue;
                drop(m, t);
            }
            take(n, t);
            --needed;
        }
        return needed <= 0;
    };

    // Per-type minima first (they are the tighter constraints), then overall
    // demands; advertisers with the largest deficit go first.
    if (!prog.type_target.empty()) {
        std::vector<std::pair<long, std::pair<int, int>>> deficits;
        for (int n = 0; n < prog.N; ++n)
            for (int k = 0; k < prog.K; ++k) {
                const long d =
                    prog.type_target[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] -
                    type_wins[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
                if (d > 0) deficits.push_back({d, {n, k}});
            }
        std::sort(deficits.begin(), deficits.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        for (const auto& [d, nk] : deficits) {
            const long live =
                prog.type_target[static_cast<std::size_t>(nk.first)]
                                [static_cast<std::size_t>(nk.second)] -
                type_wins[static_cast<std::size_t>(nk.first)][static_cast<std::size_t>(nk.second)];
            if (!fill(nk.first, live, nk.second)) return std::nullopt;
        }
    }
    {
        std::vector<std::pair<long, int>> deficits;
        for (int n = 0; n < prog.N; ++n) {
            const long d = prog.demand[static_cast<std::size_t>(n)] - wins[static_cast<std::size_t>(n)];
            if (d > 0) deficits.push_back({d, n});
        }
        std::sort(deficits.begin(), deficits.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        for (const auto& [d, n] : deficits) {
            const long live = prog.demand[static_cast<std::size_t>(n)] - wins[static_cast<std::size_t>(n)];
            if (!fill(n, live, -1)) return std::nullopt;
        }
    }

    // Improvement sweep: feasibility is settled, so fill leftover rounds and
    // upgrade winners wherever a strictly better eligible advertiser has
    // cap/budget headroom and the evictee stays feasible.
    bool improved = true;
    while (improved) {
        improved = false;
        for (long t = 0; t < prog.T; ++t) {
            const auto& r = alloc.round(t);
            const int incumbent = r.winner ? *r.winner : -1;
            const double current = incumbent >= 0 ? surplus_at(incumbent, t) : 0.0;
            int best_n = -1;
            double best_gain = 1e-12;
            for (int n = 0; n < prog.N; ++n) {
                if (n == incumbent) continue;
                if (!prog.eligible[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)])
                    continue;
                if (wins[static_cast<std::size_t>(n)] + 1 > cap_of(n)) continue;
                if (spend[static_cast<std::size_t>(n)] + prog.price[static_cast<std::size_t>(t)] >
                    budget_of(n) + 1e-9)
                    continue;
                const double gain = surplus_at(n, t) - current;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_n = n;
                }
            }
            if (best_n < 0) continue;
            if (incumbent >= 0) {
                const int k = prog.round_type[static_cast<std::size_t>(t)];
                const bool evictable =
                    wins[static_cast<std::size_t>(incumbent)] - 1 >=
                        prog.demand[static_cast<std::size_t>(incumbent)] &&
                    (prog.type_target.empty() ||
                     type_wins[static_cast<std::size_t>(incumbent)][static_cast<std::size_t>(k)] -
                             1 >=
                         prog.type_target[static_cast<std::size_t>(incumbent)]
                                         [static_cast<std::size_t>(k)]);
                if (!evictable) continue;
                drop(incumbent, t);
            }
            take(best_n, t);
            improved = true;
        }
    }

    if (!program_feasible(prog, alloc)) return std::nullopt;
    return alloc;
}

struct DualSolveResult {
    double dual_bound = std::numeric_limits<double>::infinity();
    std::vector<double> lambda;  // multipliers at the best dual value
    bool has_primal = false;
    double primal_value = -std::numeric_limits<double>::infinity();
    std::optional<AllocationMatrix> primal;
    double gap = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

// Subgradient descent on the dual with feasibility repair each iteration.
// The default step scale is (initial dual - initial repaired primal) divided
// by the total demand, and the schedule is step0 / k.
inline DualSolveResult solve_dual(const ScheduleProgram& prog, int max_iters = 200,
                                  std::optional<double> s0 = std::nullopt) {
    prog.validate();
    DualSolveResult result;
    result.lambda.assign(static_cast<std::size_t>(prog.N), 0.0);

    const bool dualize_types = !prog.type_target.empty();
    LagrangianState state;
    state.lambda.assign(static_cast<std::size_t>(prog.N), 0.0);
    if (dualize_types)
        state.mu.assign(static_cast<std::size_t>(prog.N),
                        std::vector<double>(static_cast<std::size_t>(prog.K), 0.0));

    auto evaluate = [&](const LagrangianState& s) { return inner_max(prog, s.lambda, s.mu); };

    InnerMaxResult first = evaluate(state);
    state.best_dual = state.last_dual = first.value;
    result.dual_bound = first.value;
    result.iterations = 1;
    if (auto repaired = repair_primal(prog, first.allocation)) {
        state.best_primal = program_objective(prog, *repaired);
        state.best_primal_alloc = std::move(repaired);
    }

    if (!prog.has_demands()) {
        // Nothing to dualize: the first inner maximum is already the
        // unconstrained optimum (repair only trims cap violations).
        result.has_primal = state.best_primal_alloc.has_value();
        if (result.has_primal) {
            result.primal_value = state.best_primal;
            result.primal = state.best_primal_alloc;
            result.gap = result.dual_bound - result.primal_value;
        }
        return result;
    }

    auto gap_closed = [&]() {
        return state.best_primal_alloc &&
               state.best_dual - state.best_primal <=
                   1e-12 * std::max(1.0, std::abs(state.best_dual));
    };

    if (s0) {
        state.step0 = *s0;
    } else {
        const double denom = std::max(1.0, static_cast<double>(prog.total_demand()));
        const double spread = state.best_primal_alloc
                                  ? first.value - state.best_primal
                                  : std::max(1.0, std::abs(first.value));
        state.step0 = spread > 0.0 ? spread / denom : 1.0 / denom;
    }

    state.iteration = 1;
    InnerMaxResult current = std::move(first);
    for (int k = 1; k < max_iters && !gap_closed(); ++k) {
        state = subgradient_step(std::move(state), prog, current.allocation);
        current = evaluate(state);
        state.last_dual = current.value;
        if (current.value < state.best_dual) {
            state.best_dual = current.value;
            result.lambda = state.lambda;
        }
        if (auto repaired = repair_primal(prog, current.allocation)) {
            const double value = program_objective(prog, *repaired);
            if (value > state.best_primal) {
                state.best_primal = value;
                state.best_primal_alloc = std::move(repaired);
            }
        }
        ++result.iterations;
    }

    result.dual_bound = state.best_dual;
    result.has_primal = state.best_primal_alloc.has_value();
    if (result.has_primal) {
        result.primal_value = state.best_primal;
        result.primal = state.best_primal_alloc;
        result.gap = result.dual_bound - result.primal_value;
    }
    return result;
}

}  // namespace rppa
