// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// Closed-form robust-queueing layer: probability budget -> service-level
// constant, uncertainty-set membership checks, thinning of per-application
// arrival streams by a routing probability, superposition into per-server
// aggregates, the worst-case response-time bound, and the equivalent
// quadratic speed constraint with its analytic minimal feasible speed.

#ifndef RQFARM_RQ_HPP
#define RQFARM_RQ_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rqfarm/model.hpp"

namespace rqfarm {

// Parameters of a one-sided CLT-shaped uncertainty set for a single stream
// of positive primitives (inter-arrival times or per-job work).
// The variability parameter is gamma * sigma; gamma stays unset on thinned
// flows until a server context binds its service-level constant.
struct UncertaintyParams {
    double rate = 0.0;   // primitives per unit time (arrivals) or per work unit
    double sigma = 0.0;  // std dev of one primitive
    std::optional<double> gamma;
    static constexpr int tail_coefficient = 2;

    double variability() const;   // gamma * sigma; throws if gamma unset
    UncertaintyParams with_gamma(double g) const;
    void validate() const;
};

// Service-level constant: the normal quantile at sqrt(1 - epsilon), splitting
// the probability budget evenly between the arrival and workload sets.
double gamma_from_epsilon(double epsilon);

struct Membership {
    bool inside = true;
    // 1-based index of the first violated constraint, scanning k upward;
    // family 1 = sums ending at the last element, family 2 = sums ending
    // one element earlier (workload sets only).
    int family = 0;
    std::size_t k = 0;
};

Membership check_membership_arrival(std::span<const double> gaps,
                                    const UncertaintyParams& params,
                                    double tol = 1e-9);
Membership check_membership_workload(std::span<const double> works,
                                     const UncertaintyParams& params,
                                     double tol = 1e-9);

// Arrival-side parameters of the flow of one application into one server
// when each request is kept independently with probability p.
// The retained-gap mean scales by 1/p and its variance by 1/(p(2-p)).
UncertaintyParams thin(const ApplicationSpec& app, double p);

// Routing shares below this are structural zeros everywhere (the thinned
// variance diverges as p -> 0).
constexpr double kMinRoutingShare = 1e-9;

// Merged arrival and workload description of one server.
struct ServerAggregate {
    double arrival_rate = 0.0;          // merged arrivals per unit time
    double arrival_variability = 0.0;   // variability parameter of merged gaps
    double mean_workload = 0.0;         // mean work per merged job
    double workload_variability = 0.0;  // gamma_level * workload_sigma
    double workload_sigma = 0.0;        // std dev of merged per-job work
    double demand_rate = 0.0;           // offered work per unit time
    double gamma_level = 0.0;           // service-level constant bound to this server
};

struct FlowShare {
    const ApplicationSpec* app = nullptr;
    double p = 0.0;
};

ServerAggregate superpose(std::span<const FlowShare> flows, double gamma_level);

// Worst-case response-time upper bound at busy speed x (requires x above the
// offered demand rate).
double response_time_bound(const ServerAggregate& agg, double speed);

// Coefficients of a*x^2 + b*x + c <= 0, the speed form of the SLA bound
// "response_time_bound(agg, x) <= delta" for x above stability_floor.
// c >= 0 always, so with a < 0 both roots are real.
struct SlaQuadratic {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double stability_floor = 0.0;  // offered demand rate
};

SlaQuadratic sla_quadratic(const ServerAggregate& agg, double delta);

// Structural checks every SLA quadratic must satisfy; returns the violated
// invariant by name, or nullptr when the coefficients are consistent.
const char* quadratic_invariant_violation(const SlaQuadratic& q);

// Relative stability margin: feasible speeds must exceed
// stability_floor * (1 + kStabilityMargin).
constexpr double kStabilityMargin = 1e-6;

struct MinSpeed {
    bool feasible = false;
    double speed = 0.0;     // chosen speed within the box when feasible
    double required = 0.0;  // minimal speed satisfying the constraint,
                            // ignoring the upper box edge (infinity if none)
};

MinSpeed min_feasible_speed(const SlaQuadratic& q, double speed_min, double speed_max);
MinSpeed min_feasible_speed(const SlaQuadratic& q, const ServerSpec& server);

// Lower bound on the SLA left-hand side at speed x; decreasing in x with
// limit 2 * arrival_variability, so no speed can meet a threshold below that.
double feasibility_floor(const ServerAggregate& agg, double speed);

// Aggregate for one server under a routing matrix; structural zeros skipped.
// Returns nothing when the server receives no flow.
std::optional<ServerAggregate> server_aggregate(const SystemSpec& system,
                                                const std::vector<std::vector<double>>& routing,
                                                std::size_t j, double gamma_level);

} // namespace rqfarm

#endif
