// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// Routing/speed planner. Server speeds are eliminated analytically (power
// rises with speed, so each server runs at its minimal feasible speed given
// the routing), reducing the problem to the product of per-application
// routing simplices. That reduced problem is nonconvex and is attacked by
// multi-start pattern search over pairwise probability transfers, which keeps
// iterates exactly on the simplices and re-evaluates only the two servers a
// transfer touches.

#ifndef RQFARM_SOLVER_HPP
#define RQFARM_SOLVER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rqfarm/model.hpp"
#include "rqfarm/rq.hpp"

namespace rqfarm {

struct SolveOptions {
    std::size_t max_iterations = 400; // sweep budget per restart
    std::size_t restarts = 32;
    double tolerance = 1e-9;          // relative objective change
    std::uint64_t seed = 1;
    double margin = kStabilityMargin;
    std::size_t threads = 0;          // 0: hardware concurrency
    // extra starting points, e.g. incumbents from a neighbouring sweep cell
    std::vector<StaticPolicy> warm_starts;
    // per-server SLA overrides; empty keeps the config values
    std::optional<double> delta_override;
    std::optional<double> epsilon_override;
};

enum class SolveStatus { OptimalLocal, Infeasible, IterationLimit };

std::string to_string(SolveStatus s);

struct ServerPlan {
    int server_id = 0;
    bool used = false;       // receives any flow
    bool feasible = true;
    double arrival_rate = 0.0;
    double arrival_variability = 0.0;
    double workload_variability = 0.0;
    double demand_rate = 0.0;
    double speed = 0.0;
    double bound = 0.0;          // worst-case response bound at the chosen speed
    double power_draw = 0.0;
    double floor_at_max = 0.0;   // feasibility floor at the speed cap
};

struct SolveResult {
    StaticPolicy policy;
    double objective = 0.0;  // total busy power at the planned speeds
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<ServerPlan> per_server;
    std::size_t restarts_used = 0;
    std::uint64_t evaluations = 0;

    std::string to_json(const SystemSpec& system) const;
};

SolveResult solve_m2(const SystemSpec& system, const SolveOptions& options);

struct MinMaxResult {
    double value = 0.0;  // min over routings of the largest 2*arrival variability
    StaticPolicy policy; // argmin routing (speeds filled with the floor)
};

// Smallest achievable worst-server value of twice the aggregated arrival
// variability parameter; any SLA threshold below it is infeasible for every
// routing and speed assignment.
MinMaxResult feasibility_minmax(const SystemSpec& system, double epsilon,
                                const SolveOptions& options);

struct ServerCheck {
    int server_id = 0;
    bool used = false;
    bool stable = false;          // speed above the offered demand rate
    bool speed_in_range = false;
    bool sla_ok = false;          // quadratic residual nonpositive
    double quadratic_residual = 0.0;
    double bound = 0.0;           // +inf when unstable
    double power_draw = 0.0;
    ServerAggregate aggregate;
};

struct PolicyCheck {
    bool pass = false;
    bool routing_ok = false;
    std::vector<ServerCheck> servers;
    double total_power = 0.0;

    std::string to_json(const SystemSpec& system) const;
};

// Validates an externally supplied policy against every planning constraint.
PolicyCheck check_policy(const SystemSpec& system, const StaticPolicy& policy);

// Random instance in the style of the reference tables, J servers hosting
// I applications; every application is hosted somewhere.
SystemSpec make_random_system(std::size_t n_apps, std::size_t n_servers, std::uint64_t seed);

} // namespace rqfarm

#endif
