// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// Domain model for the server-farm planner: application arrival/workload
// distributions, server descriptions (speed range, cubic power curve, SLA),
// static routing+speed policies, and the JSON config / policy file formats.

#ifndef RQFARM_MODEL_HPP
#define RQFARM_MODEL_HPP

#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rqfarm {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DistFamily { Lognormal, Exponential };

// A positive distribution parameterized by mean and squared coefficient of
// variation. Log-normal parameters are always derived, never user-supplied.
struct DistributionSpec {
    DistFamily family = DistFamily::Lognormal;
    double mean = 1.0;
    double scov = 1.0;

    double variance() const { return scov * mean * mean; }
    double sigma() const;

    // Log-space parameters (log-normal family only).
    double log_mean() const;
    double log_sigma() const;

    template <class Rng>
    double sample(Rng& rng) const
    {
        if (family == DistFamily::Exponential) {
            return std::exponential_distribution<double>(1.0 / mean)(rng);
        }
        return std::exp(log_mean() + log_sigma() * std::normal_distribution<double>()(rng));
    }

    void validate(const std::string& who) const;
};

struct ApplicationSpec {
    int id = 0;
    DistributionSpec interarrival;
    DistributionSpec workload;

    // Derived quantities, filled by finalize().
    double arrival_rate = 0.0;     // jobs per unit time
    double sigma_arrival = 0.0;    // std dev of inter-arrival time
    double arrival_scov = 0.0;     // squared coefficient of variation of gaps
    double mean_work = 0.0;        // work units per job
    double sigma_work = 0.0;       // std dev of per-job work
    double demand_rate = 0.0;      // offered work per unit time

    void finalize();
    void validate() const;
};

// Offered work per unit time of one application.
double instant_demand(const ApplicationSpec& app);

struct ServerSpec {
    int id = 0;
    double speed_min = 0.0;
    double speed_max = 0.0;
    double power_base = 0.0;   // consumed at any speed, including idle
    double power_coeff = 0.0;
    double power_exponent = 3.0;
    std::vector<int> apps;     // application ids this server can host
    double sla_threshold = 0.0;
    double sla_epsilon = 0.0;

    void validate() const;
};

// Electrical power drawn at a given speed.
double power(const ServerSpec& server, double speed);

struct SystemSpec {
    std::vector<ApplicationSpec> applications;
    std::vector<ServerSpec> servers;

    // eligible[i] lists server indices that host application i (the spec's
    // set of candidate servers per application); filled by finalize().
    std::vector<std::vector<std::size_t>> eligible;

    std::size_t n_apps() const { return applications.size(); }
    std::size_t n_servers() const { return servers.size(); }

    std::size_t app_index(int id) const;
    std::size_t server_index(int id) const;

    // True when server j hosts application i (indices, not ids).
    bool hosts(std::size_t j, std::size_t i) const;

    void finalize();
    void validate() const;
};

struct StaticPolicy {
    // routing[i][j]: probability that a request of application i goes to
    // server j; structural zeros where the server does not host the app.
    std::vector<std::vector<double>> routing;
    std::vector<double> speeds;

    void validate(const SystemSpec& system, double tol = 1e-9) const;
};

SystemSpec load_system(const std::string& config_text);
SystemSpec load_system_file(const std::string& path);
std::string serialize_system(const SystemSpec& system);

StaticPolicy load_policy(const std::string& policy_text);
StaticPolicy load_policy_file(const std::string& path);
std::string serialize_policy(const StaticPolicy& policy);

} // namespace rqfarm

#endif
