// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.

#include "rqfarm/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rqfarm {

using nlohmann::json;

double DistributionSpec::sigma() const
{
    return mean * std::sqrt(scov);
}

double DistributionSpec::log_sigma() const
{
    return std::sqrt(std::log1p(scov));
}

double DistributionSpec::log_mean() const
{
    return std::log(mean) - 0.5 * std::log1p(scov);
}

void DistributionSpec::validate(const std::string& who) const
{
    if (!(mean > 0.0) || !std::isfinite(mean)) {
        throw ConfigError(who + ": mean must be positive and finite");
    }
    if (!(scov > 0.0) || !std::isfinite(scov)) {
        throw ConfigError(who + ": scov must be positive and finite");
    }
    if (family == DistFamily::Exponential && std::abs(scov - 1.0) > 1e-12) {
        throw ConfigError(who + ": exponential requires scov = 1");
    }
}

void ApplicationSpec::finalize()
{
    arrival_rate = 1.0 / interarrival.mean;
    sigma_arrival = interarrival.sigma();
    arrival_scov = interarrival.scov;
    mean_work = workload.mean;
    sigma_work = workload.sigma();
    demand_rate = workload.mean / interarrival.mean;
}

void ApplicationSpec::validate() const
{
    const std::string who = "application " + std::to_string(id);
    interarrival.validate(who + " interarrival");
    workload.validate(who + " workload");
    if (!std::isfinite(demand_rate) || !(demand_rate > 0.0)) {
        throw ConfigError(who + ": instant demand rate must be positive and finite");
    }
}

double instant_demand(const ApplicationSpec& app)
{
    return app.demand_rate;
}

void ServerSpec::validate() const
{
    const std::string who = "server " + std::to_string(id);
    if (!(speed_min > 0.0) || !(speed_min < speed_max)) {
        throw ConfigError(who + ": speed range requires 0 < speed_min < speed_max");
    }
    if (power_base < 0.0) {
        throw ConfigError(who + ": power_base must be nonnegative");
    }
    if (!(power_coeff > 0.0)) {
        throw ConfigError(who + ": power_coeff must be positive");
    }
    if (apps.empty()) {
        throw ConfigError(who + ": app set must be non-empty");
    }
    if (!(sla_epsilon > 0.0) || !(sla_epsilon < 1.0)) {
        throw ConfigError(who + ": sla_epsilon must lie in (0,1)");
    }
    if (!(sla_threshold > 0.0)) {
        throw ConfigError(who + ": sla_threshold must be positive");
    }
}

double power(const ServerSpec& server, double speed)
{
    return server.power_base + server.power_coeff * std::pow(speed, server.power_exponent);
}

std::size_t SystemSpec::app_index(int id) const
{
    for (std::size_t i = 0; i < applications.size(); ++i) {
        if (applications[i].id == id) return i;
    }
    throw ConfigError("unknown application id " + std::to_string(id));
}

std::size_t SystemSpec::server_index(int id) const
{
    for (std::size_t j = 0; j < servers.size(); ++j) {
        if (servers[j].id == id) return j;
    }
    throw ConfigError("unknown server id " + std::to_string(id));
}

bool SystemSpec::hosts(std::size_t j, std::size_t i) const
{
    const auto& list = eligible[i];
    return std::find(list.begin(), list.end(), j) != list.end();
}

void SystemSpec::finalize()
{
    for (auto& app : applications) app.finalize();
    eligible.assign(applications.size(), {});
    for (std::size_t j = 0; j < servers.size(); ++j) {
        for (int app_id : servers[j].apps) {
            eligible[app_index(app_id)].push_back(j);
        }
    }
    for (auto& list : eligible) std::sort(list.begin(), list.end());
}

void SystemSpec::validate() const
{
    if (applications.empty()) throw ConfigError("no applications defined");
    if (servers.empty()) throw ConfigError("no servers defined");
    for (const auto& app : applications) app.validate();
    for (const auto& server : servers) server.validate();
    for (std::size_t i = 0; i < applications.size(); ++i) {
        for (std::size_t k = i + 1; k < applications.size(); ++k) {
            if (applications[i].id == applications[k].id) {
                throw ConfigError("duplicate application id " + std::to_string(applications[i].id));
            }
        }
        if (eligible[i].empty()) {
            throw ConfigError("application " + std::to_string(applications[i].id) +
                              " is hosted by no server; its routing row cannot sum to 1");
        }
    }
    for (std::size_t j = 0; j < servers.size(); ++j) {
        for (std::size_t k = j + 1; k < servers.size(); ++k) {
            if (servers[j].id == servers[k].id) {
                throw ConfigError("duplicate server id " + std::to_string(servers[j].id));
            }
        }
    }
}

void StaticPolicy::validate(const SystemSpec& system, double tol) const
{
    const std::size_t I = system.n_apps();
    const std::size_t J = system.n_servers();
    if (routing.size() != I || speeds.size() != J) {
        throw std::invalid_argument("policy dimensions do not match the system");
    }
    for (std::size_t i = 0; i < I; ++i) {
        if (routing[i].size() != J) {
            throw std::invalid_argument("policy routing row has wrong length");
        }
        double row = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            double p = routing[i][j];
            if (p < -tol || p > 1.0 + tol) {
                throw ConfigError("routing probability out of [0,1] for application " +
                                  std::to_string(system.applications[i].id));
            }
            if (p > tol && !system.hosts(j, i)) {
                throw ConfigError("routing sends application " +
                                  std::to_string(system.applications[i].id) + " to server " +
                                  std::to_string(system.servers[j].id) + " which does not host it");
            }
            row += p;
        }
        if (std::abs(row - 1.0) > tol) {
            throw ConfigError("routing row for application " +
                              std::to_string(system.applications[i].id) + " sums to " +
                              std::to_string(row) + ", not 1");
        }
    }
    for (std::size_t j = 0; j < J; ++j) {
        const auto& s = system.servers[j];
        if (speeds[j] < s.speed_min - tol || speeds[j] > s.speed_max + tol) {
            throw ConfigError("speed for server " + std::to_string(s.id) +
                              " is outside its allowed range");
        }
    }
}

namespace {

DistFamily parse_family(const std::string& name, const std::string& who)
{
    if (name == "lognormal" || name == "Lognormal") return DistFamily::Lognormal;
    if (name == "exponential" || name == "Exponential") return DistFamily::Exponential;
    throw ConfigError(who + ": unknown distribution family '" + name + "'");
}

std::string family_name(DistFamily f)
{
    return f == DistFamily::Lognormal ? "lognormal" : "exponential";
}

DistributionSpec parse_distribution(const json& node, const std::string& who)
{
    DistributionSpec d;
    if (!node.is_object() || !node.contains("family") || !node.contains("mean") ||
        !node.contains("scov")) {
        throw ConfigError(who + ": distribution needs family, mean and scov");
    }
    d.family = parse_family(node.at("family").get<std::string>(), who);
    d.mean = node.at("mean").get<double>();
    d.scov = node.at("scov").get<double>();
    return d;
}

} // namespace

SystemSpec load_system(const std::string& config_text)
{
    json doc;
    try {
        doc = json::parse(config_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    SystemSpec sys;
    try {
        for (const auto& node : doc.at("applications")) {
            ApplicationSpec app;
            app.id = node.contains("id") ? node.at("id").get<int>()
                                         : static_cast<int>(sys.applications.size()) + 1;
            const std::string who = "application " + std::to_string(app.id);
            app.interarrival = parse_distribution(node.at("interarrival"), who + " interarrival");
            app.workload = parse_distribution(node.at("workload"), who + " workload");
            sys.applications.push_back(app);
        }
        for (const auto& node : doc.at("servers")) {
            ServerSpec s;
            s.id = node.contains("id") ? node.at("id").get<int>()
                                       : static_cast<int>(sys.servers.size()) + 1;
            s.speed_min = node.at("speed_min").get<double>();
            s.speed_max = node.at("speed_max").get<double>();
            s.power_base = node.at("power_base").get<double>();
            s.power_coeff = node.at("power_coeff").get<double>();
            s.power_exponent = node.value("power_exponent", 3.0);
            s.apps = node.at("apps").get<std::vector<int>>();
            s.sla_threshold = node.at("sla_threshold").get<double>();
            s.sla_epsilon = node.at("sla_epsilon").get<double>();
            sys.servers.push_back(s);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    sys.finalize();
    sys.validate();
    return sys;
}

SystemSpec load_system_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_system(buf.str());
}

std::string serialize_system(const SystemSpec& system)
{
    json doc;
    doc["applications"] = json::array();
    for (const auto& app : system.applications) {
        doc["applications"].push_back({
            {"id", app.id},
            {"interarrival", {{"family", family_name(app.interarrival.family)},
                              {"mean", app.interarrival.mean},
                              {"scov", app.interarrival.scov}}},
            {"workload", {{"family", family_name(app.workload.family)},
                          {"mean", app.workload.mean},
                          {"scov", app.workload.scov}}},
        });
    }
    doc["servers"] = json::array();
    for (const auto& s : system.servers) {
        doc["servers"].push_back({
            {"id", s.id},
            {"speed_min", s.speed_min},
            {"speed_max", s.speed_max},
            {"power_base", s.power_base},
            {"power_coeff", s.power_coeff},
            {"power_exponent", s.power_exponent},
            {"apps", s.apps},
            {"sla_threshold", s.sla_threshold},
            {"sla_epsilon", s.sla_epsilon},
        });
    }
    return doc.dump(2);
}

StaticPolicy load_policy(const std::string& policy_text)
{
    json doc;
    try {
        doc = json::parse(policy_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("policy parse error: ") + e.what());
    }
    StaticPolicy p;
    try {
        p.routing = doc.at("routing").get<std::vector<std::vector<double>>>();
        p.speeds = doc.at("speeds").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("policy parse error: ") + e.what());
    }
    return p;
}

StaticPolicy load_policy_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open policy file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_policy(buf.str());
}

std::string serialize_policy(const StaticPolicy& policy)
{
    json doc;
    doc["routing"] = policy.routing;
    doc["speeds"] = policy.speeds;
    return doc.dump(2);
}

} // namespace rqfarm
