// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// Discrete-event simulation of the routed farm: renewal arrivals per
// application, probabilistic routing, equal-share processor sharing at a
// fixed busy speed with an idle floor speed, per-job response times, energy
// accounting and tail statistics over replications.

#ifndef RQFARM_SIM_HPP
#define RQFARM_SIM_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rqfarm/model.hpp"

namespace rqfarm {

struct SimOptions {
    double horizon = 1e5;       // arrivals admitted strictly before this time
    double warmup = 1e4;        // jobs arriving before this are not counted
    std::size_t replications = 10;
    std::uint64_t seed = 1;
    double series_bucket = 0.0; // >0: collect per-bucket speed/power series
    std::size_t threads = 0;    // 0: hardware concurrency
};

struct ServerMetrics {
    int server_id = 0;
    std::uint64_t arrivals = 0;       // all jobs routed here
    std::uint64_t counted_jobs = 0;   // completed jobs that arrived after warmup
    std::uint64_t violations = 0;     // counted jobs with response >= threshold
    double violation_probability = 0.0;
    double wilson_low = 0.0;
    double wilson_high = 1.0;
    double violation_stderr = 0.0;    // across replications
    double mean_response = 0.0;
    double busy_fraction = 0.0;
    double mean_speed_alltime = 0.0;  // busy speed weighted by busy time, floor otherwise
    double mean_speed_busy = 0.0;     // = policy speed whenever the server works
    double average_power = 0.0;       // energy per unit time
    double power_stderr = 0.0;        // across replications
};

struct SeriesPoint {
    double t0 = 0.0;
    std::size_t server = 0;
    double mean_speed = 0.0;
    double mean_power = 0.0;
};

struct SimReport {
    std::vector<ServerMetrics> servers;
    double total_average_power = 0.0;
    double total_power_stderr = 0.0;
    double horizon = 0.0;
    double warmup = 0.0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    std::uint64_t total_jobs = 0;
    // empirical routing fractions, completed-work conservation residual and
    // the per-replication totals used for the stderr fields
    std::vector<std::vector<double>> routing_fraction;
    double max_work_residual = 0.0;
    std::vector<double> per_replication_power;
    std::vector<SeriesPoint> series;

    std::string to_json() const;
};

// Runs the event simulation; replications execute in parallel on independent
// streams and merge deterministically.
SimReport simulate(const SystemSpec& system, const StaticPolicy& policy,
                   const SimOptions& options);

// Single station, fixed speed, shared trace: per-job response times under
// processor sharing and FCFS. gaps[0] is the arrival time of the first job.
// ps_final[i] is job i's response when the arrival stream stops after job i
// (the horizon-final coupling the two-disciplines bound is stated for);
// ps[i] is its response in the fully shared trace, which later arrivals
// stretch further.
struct CoupledResponses {
    std::vector<double> ps;
    std::vector<double> ps_final;
    std::vector<double> fcfs;
};

CoupledResponses simulate_coupled_disciplines(std::span<const double> gaps,
                                              std::span<const double> works, double speed);

struct TailEstimate {
    double probability = 0.0;
    double wilson_low = 0.0;
    double wilson_high = 1.0;
    std::uint64_t count = 0;
    std::uint64_t total = 0;
};

// Fraction of samples at or above the threshold with a 95% Wilson interval.
// Throws std::invalid_argument on an empty sample.
TailEstimate empirical_tail(std::span<const double> samples, double threshold);
TailEstimate wilson_interval(std::uint64_t count, std::uint64_t total);

} // namespace rqfarm

#endif
