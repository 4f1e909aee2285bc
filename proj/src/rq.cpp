// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.

#include "rqfarm/rq.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rqfarm/normal.hpp"

namespace rqfarm {

double UncertaintyParams::variability() const
{
    if (!gamma) throw std::logic_error("UncertaintyParams: gamma is unbound");
    return *gamma * sigma;
}

UncertaintyParams UncertaintyParams::with_gamma(double g) const
{
    UncertaintyParams out = *this;
    out.gamma = g;
    return out;
}

void UncertaintyParams::validate() const
{
    if (!(rate > 0.0)) throw std::domain_error("UncertaintyParams: rate must be positive");
    if (sigma < 0.0) throw std::domain_error("UncertaintyParams: sigma must be nonnegative");
    if (gamma && !(*gamma > 0.0)) {
        throw std::domain_error("UncertaintyParams: gamma must be positive when bound");
    }
}

double gamma_from_epsilon(double epsilon)
{
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw std::domain_error("gamma_from_epsilon: epsilon must lie in (0,1)");
    }
    return normal_quantile(std::sqrt(1.0 - epsilon));
}

Membership check_membership_arrival(std::span<const double> gaps,
                                    const UncertaintyParams& params, double tol)
{
    const std::size_t n = gaps.size();
    const double mean = 1.0 / params.rate;
    const double cap = params.variability();
    // scan k upward via suffix sums
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + gaps[i];
    for (std::size_t k = 1; k <= n; ++k) {
        const double m = static_cast<double>(n - k + 1);
        const double dev = suffix[k - 1] - m * mean;
        if (dev < -cap * std::sqrt(m) - tol) {
            return Membership{false, 1, k};
        }
    }
    return Membership{};
}

Membership check_membership_workload(std::span<const double> works,
                                     const UncertaintyParams& params, double tol)
{
    const std::size_t n = works.size();
    const double mean = 1.0 / params.rate;
    const double cap = params.variability();
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + works[i];
    for (std::size_t k = 1; k <= n; ++k) {
        const double m = static_cast<double>(n - k + 1);
        const double dev = suffix[k - 1] - m * mean;
        if (dev > cap * std::sqrt(m) + tol) {
            return Membership{false, 1, k};
        }
    }
    // sums that stop one element before the end
    for (std::size_t k = 1; k + 1 <= n; ++k) {
        const double m = static_cast<double>(n - k);
        const double dev = (suffix[k - 1] - works[n - 1]) - m * mean;
        if (dev > cap * std::sqrt(m) + tol) {
            return Membership{false, 2, k};
        }
    }
    return Membership{};
}

UncertaintyParams thin(const ApplicationSpec& app, double p)
{
    if (!(p > 0.0) || p > 1.0) {
        throw std::domain_error("thin: routing probability must lie in (0,1]");
    }
    UncertaintyParams out;
    out.rate = app.arrival_rate * p;
    out.sigma = app.sigma_arrival / std::sqrt(p * (2.0 - p));
    return out;
}

ServerAggregate superpose(std::span<const FlowShare> flows, double gamma_level)
{
    if (!(gamma_level > 0.0)) {
        throw std::domain_error("superpose: gamma_level must be positive");
    }
    double rate = 0.0;       // sum of thinned arrival rates
    double va = 0.0;         // sum of p/(2-p) * arrival scov
    double work_mean = 0.0;  // arrival-rate-weighted mean work
    double work_msq = 0.0;   // arrival-rate-weighted (sigma^2 + mean^2) of work
    double demand = 0.0;
    for (const FlowShare& f : flows) {
        if (f.p <= kMinRoutingShare) continue;
        if (f.p > 1.0) throw std::domain_error("superpose: routing probability above 1");
        const ApplicationSpec& app = *f.app;
        const double lam = app.arrival_rate * f.p;
        rate += lam;
        va += f.p / (2.0 - f.p) * app.arrival_scov;
        work_mean += lam * app.mean_work;
        work_msq += lam * (app.sigma_work * app.sigma_work + app.mean_work * app.mean_work);
        demand += app.demand_rate * f.p;
    }
    if (!(rate > 0.0)) {
        throw std::domain_error("superpose: server receives no flow");
    }
    ServerAggregate agg;
    agg.arrival_rate = rate;
    agg.arrival_variability = gamma_level / rate * std::sqrt(va);
    agg.mean_workload = work_mean / rate;
    // mixture variance: E[sigma_i^2 + (mean - mean_i)^2] over flows
    const double var = work_msq / rate - agg.mean_workload * agg.mean_workload;
    agg.workload_sigma = std::sqrt(std::max(var, 0.0));
    agg.workload_variability = gamma_level * agg.workload_sigma;
    agg.demand_rate = demand;
    agg.gamma_level = gamma_level;
    return agg;
}

double response_time_bound(const ServerAggregate& agg, double speed)
{
    if (!(speed > agg.demand_rate)) {
        throw std::domain_error("response_time_bound: speed must exceed the offered demand rate");
    }
    const double rho = agg.demand_rate / speed;
    const double g = agg.arrival_variability + agg.workload_variability / speed;
    return agg.arrival_rate * g * g / (2.0 * (1.0 - rho)) + (2.0 - rho) / agg.arrival_rate;
}

SlaQuadratic sla_quadratic(const ServerAggregate& agg, double delta)
{
    if (!(delta >= 0.0)) throw std::domain_error("sla_quadratic: delta must be nonnegative");
    const double l = agg.arrival_rate;
    const double ga = agg.arrival_variability;
    const double gs = agg.workload_variability;
    const double om = agg.demand_rate;
    SlaQuadratic q;
    q.a = l * l * ga * ga + 4.0 - 2.0 * l * delta;
    q.b = 2.0 * (l * l * ga * gs + om * l * delta - 3.0 * om);
    q.c = l * l * gs * gs + 2.0 * om * om;
    q.stability_floor = om;
    return q;
}

const char* quadratic_invariant_violation(const SlaQuadratic& q)
{
    if (q.c < 0.0) {
        return "constant term must be nonnegative: zero speed can never satisfy "
               "the response bound";
    }
    if (q.a < 0.0 && q.b * q.b - 4.0 * q.a * q.c < 0.0) {
        return "concave speed quadratic must have real roots";
    }
    if (q.stability_floor < 0.0) {
        return "stability floor must be nonnegative";
    }
    return nullptr;
}

namespace {

// Numerically stable real roots of a*x^2 + b*x + c with a != 0, D >= 0.
void quadratic_roots(double a, double b, double disc, double c, double& lo, double& hi)
{
    const double sq = std::sqrt(disc);
    const double t = -0.5 * (b + std::copysign(sq, b));
    double r1, r2;
    if (t != 0.0) {
        r1 = t / a;
        r2 = c / t;
    } else {  // b == 0
        r1 = sq / (2.0 * a);
        r2 = -r1;
    }
    lo = std::min(r1, r2);
    hi = std::max(r1, r2);
}

} // namespace

MinSpeed min_feasible_speed(const SlaQuadratic& q, double speed_min, double speed_max)
{
    MinSpeed out;
    out.required = std::numeric_limits<double>::infinity();
    const double floor = std::max(speed_min, q.stability_floor * (1.0 + kStabilityMargin));

    const double disc = q.b * q.b - 4.0 * q.a * q.c;
    if (q.a < 0.0) {
        // concave, c >= 0 forces real roots; feasible region is x >= upper root
        assert(disc >= 0.0 && "concave SLA quadratic must have real roots");
        double lo, hi;
        quadratic_roots(q.a, q.b, disc, q.c, lo, hi);
        out.required = std::max(hi, q.stability_floor * (1.0 + kStabilityMargin));
        const double x = std::max(hi, floor);
        if (x <= speed_max) {
            out.feasible = true;
            out.speed = x;
        }
        return out;
    }
    if (q.a == 0.0) {
        if (q.b < 0.0) {
            const double root = -q.c / q.b;
            out.required = std::max(root, q.stability_floor * (1.0 + kStabilityMargin));
            const double x = std::max(root, floor);
            if (x <= speed_max) {
                out.feasible = true;
                out.speed = x;
            }
        } else if (q.c <= 0.0 && floor <= speed_max) {
            out.required = q.stability_floor * (1.0 + kStabilityMargin);
            out.feasible = true;
            out.speed = floor;
        }
        return out;
    }
    // convex: the parabola must dip below zero inside the box and above the
    // stability floor
    if (disc < 0.0) return out;
    double lo, hi;
    quadratic_roots(q.a, q.b, disc, q.c, lo, hi);
    if (hi <= q.stability_floor) return out;  // dip lies in the unstable region
    out.required = std::max(lo, q.stability_floor * (1.0 + kStabilityMargin));
    const double x = std::max(lo, floor);
    if (x <= std::min(hi, speed_max)) {
        out.feasible = true;
        out.speed = x;
    }
    return out;
}

MinSpeed min_feasible_speed(const SlaQuadratic& q, const ServerSpec& server)
{
    return min_feasible_speed(q, server.speed_min, server.speed_max);
}

double feasibility_floor(const ServerAggregate& agg, double speed)
{
    if (!(speed > 0.0)) throw std::domain_error("feasibility_floor: speed must be positive");
    // AM-GM bound on the SLA left-hand side; the residual term is
    // demand/(arrival_rate*x), i.e. mean_workload/x.
    return 2.0 * (agg.arrival_variability + agg.workload_variability / speed) +
           agg.mean_workload / speed;
}

std::optional<ServerAggregate> server_aggregate(const SystemSpec& system,
                                                const std::vector<std::vector<double>>& routing,
                                                std::size_t j, double gamma_level)
{
    std::vector<FlowShare> flows;
    for (std::size_t i = 0; i < system.n_apps(); ++i) {
        if (!system.hosts(j, i)) continue;
        const double p = routing[i][j];
        if (p > kMinRoutingShare) flows.push_back({&system.applications[i], p});
    }
    if (flows.empty()) return std::nullopt;
    return superpose(flows, gamma_level);
}

} // namespace rqfarm
