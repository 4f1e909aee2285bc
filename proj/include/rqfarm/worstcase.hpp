// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// Finite-horizon worst-case machinery for a single station: extremal
// gap/work sequences that realize the worst response-time bound over the
// uncertainty sets, the analytic finite-horizon worst value, and brute-force
// oracles that maximize the coupled FCFS objective directly over the sets.

#ifndef RQFARM_WORSTCASE_HPP
#define RQFARM_WORSTCASE_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rqfarm {

struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FCFS response time of every job when job n arrives gaps[n-1] after job n-1
// (gaps[0] is the arrival time of the first job and does not affect
// responses) and requires works[n-1]/speed time units of service.
std::vector<double> fcfs_response_times(std::span<const double> gaps,
                                        std::span<const double> works,
                                        double speed = 1.0);

// Worst-case objective realized by a trace: twice the FCFS response of the
// last job minus its own work (at unit speed).
double coupled_worst_objective(std::span<const double> gaps, std::span<const double> works);

struct FiniteWorst {
    double value = 0.0;
    std::size_t argmax_k = 0;  // 1-based index attaining the maximum
};

// Closed-form worst value of the coupled objective over the uncertainty
// sets for a horizon of n jobs.
FiniteWorst finite_horizon_worst(std::size_t n, double lambda, double mu,
                                 double gamma_a, double gamma_s);

struct ExtremalTrace {
    std::size_t n = 0;
    std::vector<double> gaps;   // in the arrival set, binding constraints tight
    std::vector<double> works;  // in the workload set, tight at argmax_k
    double lambda = 0.0, mu = 0.0, gamma_a = 0.0, gamma_s = 0.0;
    std::size_t argmax_k = 0;
    double worst_value = 0.0;   // objective the trace achieves
};

// Builds a trace inside both uncertainty sets whose coupled objective equals
// the finite-horizon worst value exactly. The first gap carries no weight and
// is set to the mean. Throws ConstructionError when the gap formula would go
// negative (requires gamma_a*(sqrt(n-i+1)-sqrt(n-i)) <= 1/lambda for i >= 2).
ExtremalTrace build_extremal(std::size_t n, double lambda, double mu,
                             double gamma_a, double gamma_s);

// Work sequence from the published closed forms. It satisfies the two-sum
// identity at every k <= n-1 but lies outside the workload set for n >= 3
// (the identity over all k is unsatisfiable inside the set); kept so the
// verification command can report the discrepancy instead of hiding it.
std::vector<double> printed_extremal_works(std::size_t n, double mu, double gamma_s);

// Two-sum value sum_{i=k}^{n-1} X_i + sum_{i=k}^{n} X_i of a work sequence.
double two_sum(std::span<const double> works, std::size_t k);

// Target value of the two-sum identity at k.
double two_sum_target(std::size_t n, std::size_t k, double mu, double gamma_s);

// Maximizes the coupled objective over both uncertainty sets restricted to
// nonnegative primitives: exact extreme-point evaluation for n <= 4, grids
// at n in {5,6}. Throws std::invalid_argument beyond the guard.
double brute_force_worst_fcfs(std::size_t n, double lambda, double mu,
                              double gamma_a, double gamma_s,
                              std::size_t grid_resolution = 9);

// Infinite-horizon closed-form bound the finite values converge under.
double response_bound_infinite(double lambda, double mu, double gamma_a, double gamma_s);

} // namespace rqfarm

#endif
