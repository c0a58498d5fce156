#pragma once

#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rppa/auction.hpp"
#include "rppa/errors.hpp"
#include "rppa/experiments.hpp"
#include "rppa/program.hpp"
#include "rppa/reserve.hpp"
#include "rppa/scheduling.hpp"
#include "rppa/solver.hpp"

namespace rppa::cli {

// Exit codes: 0 success, 1 domain error raised while computing, 2 usage
// error (bad flags, missing or malformed config files).
inline constexpr int exit_ok = 0;
inline constexpr int exit_domain_error = 1;
inline constexpr int exit_usage_error = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open '" + path + "' (check the path)");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("cannot parse '" + path + "': " + e.what());
    }
}

inline nlohmann::json parse_json_arg(const std::string& text, const std::string& what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("cannot parse " + what + ": " + e.what());
    }
}

inline void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + out_path + "'");
    out << text;
}

inline std::string simulation_csv(const SimulationReport& r) {
    std::string out = "# seed=" + std::to_string(r.seed) + "\n";
    out += "scenario_id,T,q_or_policy,seller_rev_total,seller_rev_per_round,buyer_rev_total,"
           "impressions\n";
    out += r.scenario + "," + std::to_string(r.rounds) + "," + r.q_or_policy + "," +
           format_g6(r.seller_revenue_total) + "," + format_g6(r.seller_revenue_per_round()) +
           "," + format_g6(r.buyer_revenue_total) + "," + std::to_string(r.impressions_total) +
           "\n";
    return out;
}

inline std::string schedule_csv(const SimulationReport& r) {
    std::string out = "# seed=" + std::to_string(r.seed) + "\n";
    out += "# policy=" + r.scenario + " T=" + std::to_string(r.rounds) +
           " q=" + r.q_or_policy +
           " seller_rev_per_round=" + format_g6(r.seller_revenue_per_round()) +
           " dsp_surplus_total=" + format_g6(r.buyer_revenue_total) + "\n";
    out += "adv_id,impressions,revenue_per_round,demand_met,budget_spent\n";
    for (const auto& a : r.advertisers) {
        out += std::to_string(a.id) + "," + std::to_string(a.impressions) + "," +
               format_g6(r.rounds > 0 ? a.revenue_total / static_cast<double>(r.rounds) : 0.0) +
               "," + (a.demand_met ? "1" : "0") + "," + format_g6(a.spend) + "\n";
    }
    return out;
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw UsageError("cannot parse " + what + ": bad number '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError(what + " is empty");
    return out;
}

}  // namespace detail

inline int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"repeated posted-price auctions: reserves, simulation, scheduling, solving"};
    app.require_subcommand(1);

    std::string out_path;
    std::string format = "csv";
    app.add_option("--out", out_path, "output file (stdout when omitted)")->capture_default_str();
    app.add_option("--format", format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    // reserve: optimal price and per-round revenues for one distribution.
    auto* reserve_cmd = app.add_subcommand("reserve", "optimal reserve price and revenues");
    std::string dist_text, dist_file;
    double tol = 1e-9;
    long horizon = 1;
    reserve_cmd->add_option("--dist", dist_text, "distribution JSON literal");
    reserve_cmd->add_option("--dist-file", dist_file, "path to a distribution JSON file");
    reserve_cmd->add_option("--tol", tol, "residual tolerance")->capture_default_str();
    reserve_cmd->add_option("--T", horizon, "number of rounds")->capture_default_str();

    // simulate: run a MarketConfig.
    auto* simulate_cmd = app.add_subcommand("simulate", "run a repeated auction market config");
    std::string sim_config;
    std::optional<std::uint64_t> seed_override;
    simulate_cmd->add_option("--config", sim_config, "market config JSON file")->required();
    simulate_cmd->add_option("--seed", seed_override, "override the config seed");

    // schedule: run a DSP scheduling policy.
    auto* schedule_cmd = app.add_subcommand("schedule", "run an advertiser-scheduling policy");
    std::string sched_config, policy_name_arg, q_list_text = "", boost_text = "";
    double static_q = 1.0;
    schedule_cmd->add_option("--config", sched_config, "advertiser market JSON file")->required();
    schedule_cmd
        ->add_option("--policy", policy_name_arg,
                     "hindsight-max | randomized-max | hetero-hindsight | round-robin | "
                     "uniform-random | filtered-rr | filtered-random | greedy-demand | "
                     "lagrangian-boost")
        ->required();
    auto* qopt = schedule_cmd->add_option("--q", static_q, "static reserve price");
    schedule_cmd->add_option("--q-per-type", q_list_text,
                             "comma-separated per-type reserves (hetero-hindsight)");
    schedule_cmd->add_option("--boost", boost_text,
                             "comma-separated per-advertiser boosts (lagrangian-boost)");

    // solve: enumeration oracle or Lagrangian dual on a program instance.
    auto* solve_cmd = app.add_subcommand("solve", "solve a scheduling program instance");
    std::string instance_path, method = "dual";
    int iters = 200;
    std::optional<double> s0;
    std::optional<std::uint64_t> solve_seed;
    solve_cmd->add_option("--instance", instance_path, "program instance JSON file")->required();
    solve_cmd->add_option("--method", method, "enumerate | dual")
        ->check(CLI::IsMember({"enumerate", "dual"}))
        ->capture_default_str();
    solve_cmd->add_option("--iters", iters, "subgradient iterations")->capture_default_str();
    solve_cmd->add_option("--s0", s0, "initial step size (default: scale-aware)");
    solve_cmd->add_option("--seed", solve_seed,
                          "recorded in the output (both methods are deterministic)");

    // experiments: table reproductions.
    auto* experiments_cmd = app.add_subcommand("experiments", "reproduce the numerical studies");
    auto* exp_run = experiments_cmd->add_subcommand("run", "run one experiment (or all)");
    auto* exp_list = experiments_cmd->add_subcommand("list", "list experiment ids");
    std::string experiment_id;
    std::uint64_t experiment_seed = experiments::default_seed;
    int jobs = 1;
    exp_run->add_option("--id", experiment_id, "experiment id, or 'all'")->required();
    exp_run->add_option("--seed", experiment_seed, "experiment seed")->capture_default_str();
    exp_run->add_option("--jobs", jobs, "parallel experiments when running all")
        ->capture_default_str();

    // Let --out/--format be given after the subcommand name.
    for (CLI::App* sub : {reserve_cmd, simulate_cmd, schedule_cmd, solve_cmd, experiments_cmd,
                          exp_run, exp_list})
        sub->fallthrough();

    try {
        // CLI11 parses a mutable copy in reverse order.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try {
            app.parse(reversed);
        } catch (const CLI::CallForHelp& e) {
            std::cout << app.help();
            return exit_ok;
        } catch (const CLI::ParseError& e) {
            throw UsageError(std::string(e.what()) + " (see --help)");
        }

        if (reserve_cmd->parsed()) {
            if (dist_text.empty() == dist_file.empty())
                throw UsageError("pass exactly one of --dist or --dist-file");
            const nlohmann::json dj = dist_text.empty()
                                          ? detail::load_json_file(dist_file)
                                          : detail::parse_json_arg(dist_text, "--dist");
            ValuationDistribution dist = [&] {
                try {
                    return ValuationDistribution::from_json(dj);
                } catch (const std::invalid_argument& e) {
                    throw UsageError(e.what());
                }
            }();
            const double q = optimal_reserve(dist, tol);
            const double seller = seller_expected_revenue(dist, q, horizon);
            const double buyer = buyer_expected_revenue(dist, q, horizon);
            if (format == "json") {
                const nlohmann::json out = {{"dist", dist.to_json()},
                                            {"q_star", q},
                                            {"T", horizon},
                                            {"seller_per_round", seller / horizon},
                                            {"buyer_per_round", buyer / horizon},
                                            {"seller_total", seller},
                                            {"buyer_total", buyer}};
                detail::emit(out.dump(2) + "\n", out_path);
            } else {
                std::string csv = "dist,q_star,T,seller_per_round,buyer_per_round\n";
                csv += dist.kind_name() + "," + format_g6(q) + "," + std::to_string(horizon) +
                       "," + format_g6(seller / horizon) + "," + format_g6(buyer / horizon) + "\n";
                detail::emit(csv, out_path);
            }
            return exit_ok;
        }

        if (simulate_cmd->parsed()) {
            nlohmann::json cj = detail::load_json_file(sim_config);
            MarketConfig config = [&] {
                try {
                    return MarketConfig::from_json(cj);
                } catch (const std::invalid_argument& e) {
                    throw UsageError(std::string("config: ") + e.what());
                }
            }();
            if (seed_override) config.seed = *seed_override;
            const SimulationReport report = config.profile.K() == 1 && config.policy.is_static()
                                                ? simulate_rppa_single_buyer(config)
                                                : simulate_rppa_hetero(config);
            detail::emit(format == "json" ? report.to_json().dump(2) + "\n"
                                          : detail::simulation_csv(report),
                         out_path);
            return exit_ok;
        }

        if (schedule_cmd->parsed()) {
            nlohmann::json mj = detail::load_json_file(sched_config);
            DspMarket market = [&] {
                try {
                    return DspMarket::from_json(mj);
                } catch (const std::invalid_argument& e) {
                    throw UsageError(std::string("config: ") + e.what());
                }
            }();
            SchedulingPolicy policy = [&] {
                try {
                    return parse_policy(policy_name_arg);
                } catch (const std::invalid_argument& e) {
                    throw UsageError(e.what());
                }
            }();
            ReservePolicy reserve_policy = [&]() -> ReservePolicy {
                if (!q_list_text.empty())
                    return ReservePolicy::per_type(
                        detail::parse_double_list(q_list_text, "--q-per-type"));
                if (qopt->count() == 0 && policy != SchedulingPolicy::HeteroHindsight)
                    throw UsageError("pass --q (or --q-per-type for hetero-hindsight)");
                return ReservePolicy::static_price(static_q);
            }();
            std::vector<double> boost;
            if (!boost_text.empty()) boost = detail::parse_double_list(boost_text, "--boost");
            const auto run = run_scheduling_policy(policy, market, reserve_policy, boost);
            if (format == "json") {
                nlohmann::json out = run.report.to_json();
                out["allocation"] = run.allocation.to_json();
                detail::emit(out.dump(2) + "\n", out_path);
            } else {
                detail::emit(detail::schedule_csv(run.report), out_path);
            }
            return exit_ok;
        }

        if (solve_cmd->parsed()) {
            nlohmann::json pj = detail::load_json_file(instance_path);
            ScheduleProgram program = [&] {
                try {
                    return ScheduleProgram::from_json(pj);
                } catch (const std::invalid_argument& e) {
                    throw UsageError(std::string("instance: ") + e.what());
                } catch (const DimensionMismatch& e) {
                    throw UsageError(std::string("instance: ") + e.what());
                }
            }();
            nlohmann::json out;
            out["method"] = method;
            if (solve_seed) out["seed"] = *solve_seed;
            if (method == "enumerate") {
                const auto result = enumerate_optimal(program);
                out["status"] = result.feasible ? "optimal" : "infeasible";
                if (result.feasible) {
                    out["dual_bound"] = result.value;
                    out["primal_value"] = result.value;
                    out["gap"] = 0.0;
                    out["lambda"] = nlohmann::json::array();
                    out["allocation"] = result.allocation->to_json();
                }
            } else {
                const auto result = solve_dual(program, iters, s0);
                out["status"] = result.has_primal ? "bounded" : "dual-bound-only";
                out["dual_bound"] = result.dual_bound;
                out["lambda"] = result.lambda;
                out["iterations"] = result.iterations;
                if (result.has_primal) {
                    out["primal_value"] = result.primal_value;
                    out["gap"] = result.gap;
                    out["allocation"] = result.primal->to_json();
                }
            }
            detail::emit(out.dump(2) + "\n", out_path);
            return exit_ok;
        }

        if (experiments_cmd->parsed()) {
            if (exp_list->parsed()) {
                std::string text;
                for (const auto& id : experiments::experiment_ids()) text += id + "\n";
                detail::emit(text, out_path);
                return exit_ok;
            }
            if (!exp_run->parsed()) throw UsageError("experiments: use 'run' or 'list'");
            std::vector<std::string> ids;
            if (experiment_id == "all")
                ids = experiments::experiment_ids();
            else
                ids.push_back(experiment_id);

            std::vector<ExperimentReport> reports(ids.size());
            if (jobs > 1 && ids.size() > 1) {
                std::vector<std::future<ExperimentReport>> futures;
                futures.reserve(ids.size());
                for (const auto& id : ids)
                    futures.push_back(std::async(std::launch::async, [&, id] {
                        return experiments::run_experiment(id, experiment_seed);
                    }));
                for (std::size_t i = 0; i < futures.size(); ++i) reports[i] = futures[i].get();
            } else {
                for (std::size_t i = 0; i < ids.size(); ++i)
                    reports[i] = experiments::run_experiment(ids[i], experiment_seed);
            }

            if (format == "json") {
                nlohmann::json out = nlohmann::json::array();
                for (const auto& r : reports) out.push_back(r.to_json());
                detail::emit(out.dump(2) + "\n", out_path);
            } else {
                std::string text;
                for (std::size_t i = 0; i < reports.size(); ++i) {
                    const std::string csv = reports[i].to_csv();
                    if (i == 0) {
                        text += csv;
                    } else {
                        // keep each block's seed line but only one column header
                        const auto seed_end = csv.find('\n');
                        const auto header_end = csv.find('\n', seed_end + 1);
                        text += csv.substr(0, seed_end + 1) + csv.substr(header_end + 1);
                    }
                }
                detail::emit(text, out_path);
            }
            return exit_ok;
        }

        throw UsageError("no subcommand given (see --help)");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage_error;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_domain_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_domain_error;
    }
}

inline int dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args);
}

}  // namespace rppa::cli
