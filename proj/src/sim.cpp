// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.

#include "rqfarm/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace rqfarm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PendingJob {
    double done_at_drain;  // drain-clock reading at which the job completes
    double arrival_time;
    double work;

    bool operator>(const PendingJob& o) const { return done_at_drain > o.done_at_drain; }
};

// Equal-share processor sharing at two speed levels, tracked through a
// virtual drain clock: every active job loses work at speed/N, so a job
// entering when the clock reads V completes when the clock reaches V + work.
// The clock resets whenever the server empties, which keeps it well scaled.
struct ServerSim {
    double busy_speed = 1.0;
    double idle_speed = 1.0;
    double busy_power = 0.0;
    double idle_power = 0.0;
    double threshold = 0.0;  // SLA response-time threshold

    std::priority_queue<PendingJob, std::vector<PendingJob>, std::greater<PendingJob>> active;
    double drain = 0.0;
    double next_completion = kInf;
    double last_event = 0.0;

    double busy_time = 0.0;
    double idle_time = 0.0;
    double energy = 0.0;
    double injected_work = 0.0;
    double completed_work = 0.0;
    std::uint64_t arrivals = 0;
    std::uint64_t departures = 0;
    std::uint64_t counted = 0;
    std::uint64_t violations = 0;
    double response_sum = 0.0;

    void advance_to(double now)
    {
        const double dt = now - last_event;
        if (dt > 0.0) {
            if (!active.empty()) {
                drain += dt * busy_speed / static_cast<double>(active.size());
                busy_time += dt;
                energy += busy_power * dt;
            } else {
                idle_time += dt;
                energy += idle_power * dt;
            }
            last_event = now;
        }
    }

    void refresh_next_completion(double now)
    {
        if (active.empty()) {
            next_completion = kInf;
            return;
        }
        const double remaining = std::max(active.top().done_at_drain - drain, 0.0);
        next_completion = now + remaining * static_cast<double>(active.size()) / busy_speed;
    }

    void arrive(double now, double work)
    {
        advance_to(now);
        active.push(PendingJob{drain + work, now, work});
        ++arrivals;
        injected_work += work;
        refresh_next_completion(now);
    }

    void complete(double now, double warmup)
    {
        advance_to(now);
        const PendingJob job = active.top();
        active.pop();
        drain = job.done_at_drain;  // lands exactly on the finish line
        ++departures;
        completed_work += job.work;
        const double response = now - job.arrival_time;
        if (job.arrival_time > warmup) {
            ++counted;
            response_sum += response;
            if (response >= threshold) ++violations;
        }
        if (active.empty()) drain = 0.0;
        refresh_next_completion(now);
    }
};

struct AppStream {
    DistributionSpec gap;
    DistributionSpec work;
    std::mt19937_64 rng;
    double next_arrival = 0.0;

    void prime() { next_arrival = gap.sample(rng); }
    double pop_work_and_advance()
    {
        const double w = work.sample(rng);
        next_arrival += gap.sample(rng);
        return w;
    }
};

struct RoutingRow {
    std::vector<std::size_t> servers;
    std::vector<double> cumulative;

    std::size_t pick(double u) const
    {
        for (std::size_t k = 0; k + 1 < cumulative.size(); ++k) {
            if (u < cumulative[k]) return servers[k];
        }
        return servers.back();
    }
};

struct RepResult {
    std::vector<ServerSim> servers;
    std::vector<std::vector<std::uint64_t>> flow_counts;
    double elapsed = 0.0;
    double total_energy = 0.0;
    std::vector<SeriesPoint> series;
};

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t rep, std::uint64_t kind,
                          std::uint64_t index)
{
    // splitmix64 over a combined label
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (rep * 131ULL + kind * 17ULL + index + 1ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RepResult run_replication(const SystemSpec& system, const StaticPolicy& policy,
                          const SimOptions& opt, std::size_t rep, bool collect_series)
{
    const std::size_t I = system.n_apps();
    const std::size_t J = system.n_servers();

    RepResult out;
    out.servers.resize(J);
    out.flow_counts.assign(I, std::vector<std::uint64_t>(J, 0));

    for (std::size_t j = 0; j < J; ++j) {
        const ServerSpec& s = system.servers[j];
        ServerSim& sim = out.servers[j];
        sim.busy_speed = policy.speeds[j];
        sim.idle_speed = s.speed_min;
        sim.busy_power = power(s, policy.speeds[j]);
        sim.idle_power = power(s, s.speed_min);
        sim.threshold = s.sla_threshold;
    }

    std::vector<AppStream> apps(I);
    for (std::size_t i = 0; i < I; ++i) {
        apps[i].gap = system.applications[i].interarrival;
        apps[i].work = system.applications[i].workload;
        apps[i].rng.seed(stream_seed(opt.seed, rep, 0, i));
        apps[i].prime();
    }
    std::mt19937_64 router(stream_seed(opt.seed, rep, 1, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<RoutingRow> rows(I);
    for (std::size_t i = 0; i < I; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            if (policy.routing[i][j] > 0.0) {
                acc += policy.routing[i][j];
                rows[i].servers.push_back(j);
                rows[i].cumulative.push_back(acc);
            }
        }
    }

    const bool series_on = collect_series && opt.series_bucket > 0.0;
    std::vector<std::vector<double>> bucket_busy, bucket_time;
    std::vector<double> last_seen;
    std::size_t n_buckets = 0;
    if (series_on) {
        n_buckets = static_cast<std::size_t>(std::ceil(opt.horizon / opt.series_bucket)) + 2;
        bucket_busy.assign(J, std::vector<double>(n_buckets, 0.0));
        bucket_time.assign(J, std::vector<double>(n_buckets, 0.0));
        last_seen.assign(J, 0.0);
    }
    // charge [last_seen, now) to buckets under the server's pre-event state
    auto record_series = [&](std::size_t j, double now) {
        const bool busy = !out.servers[j].active.empty();
        double t0 = last_seen[j];
        while (t0 < now) {
            const std::size_t b =
                std::min(static_cast<std::size_t>(t0 / opt.series_bucket), n_buckets - 1);
            const double edge = (static_cast<double>(b) + 1.0) * opt.series_bucket;
            const double t1 = std::min(now, edge);
            bucket_time[j][b] += t1 - t0;
            if (busy) bucket_busy[j][b] += t1 - t0;
            t0 = t1;
        }
        last_seen[j] = now;
    };

    double now = 0.0;
    while (true) {
        double t_arr = kInf;
        std::size_t arr_app = 0;
        for (std::size_t i = 0; i < I; ++i) {
            if (apps[i].next_arrival < t_arr) {
                t_arr = apps[i].next_arrival;
                arr_app = i;
            }
        }
        if (t_arr >= opt.horizon) t_arr = kInf;  // admissions stop at the horizon

        double t_done = kInf;
        std::size_t done_server = 0;
        for (std::size_t j = 0; j < J; ++j) {
            if (out.servers[j].next_completion < t_done) {
                t_done = out.servers[j].next_completion;
                done_server = j;
            }
        }

        if (t_arr == kInf && t_done == kInf) break;

        if (t_done <= t_arr) {
            now = t_done;
            if (series_on) record_series(done_server, now);
            out.servers[done_server].complete(now, opt.warmup);
        } else {
            now = t_arr;
            const double w = apps[arr_app].pop_work_and_advance();
            const std::size_t j = rows[arr_app].pick(unit(router));
            if (series_on) record_series(j, now);
            out.servers[j].arrive(now, w);
            ++out.flow_counts[arr_app][j];
        }
    }

    out.elapsed = now;
    for (std::size_t j = 0; j < J; ++j) {
        ServerSim& sim = out.servers[j];
        sim.advance_to(now);
        if (series_on) record_series(j, now);
        if (sim.arrivals != sim.departures || !sim.active.empty()) {
            throw std::logic_error("simulate: job count bookkeeping failed to close");
        }
        const double scale = std::max(1.0, sim.injected_work);
        if (std::abs(sim.injected_work - sim.completed_work) > 1e-6 * scale) {
            throw std::logic_error("simulate: work conservation violated");
        }
        out.total_energy += sim.energy;
    }

    if (series_on) {
        for (std::size_t j = 0; j < J; ++j) {
            const ServerSim& sim = out.servers[j];
            for (std::size_t b = 0; b < n_buckets; ++b) {
                if (bucket_time[j][b] <= 0.0) continue;
                const double frac = bucket_busy[j][b] / bucket_time[j][b];
                SeriesPoint pt;
                pt.t0 = static_cast<double>(b) * opt.series_bucket;
                pt.server = j;
                pt.mean_speed = frac * sim.busy_speed + (1.0 - frac) * sim.idle_speed;
                pt.mean_power = frac * sim.busy_power + (1.0 - frac) * sim.idle_power;
                out.series.push_back(pt);
            }
        }
    }
    return out;
}

double sample_stderr(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / double(v.size() - 1) / double(v.size()));
}

} // namespace

SimReport simulate(const SystemSpec& system, const StaticPolicy& policy,
                   const SimOptions& options)
{
    if (!(options.horizon > 0.0)) {
        throw std::invalid_argument("simulate: horizon must be positive");
    }
    if (options.warmup < 0.0 || options.warmup >= options.horizon) {
        throw std::invalid_argument("simulate: warmup must lie in [0, horizon)");
    }
    if (options.replications == 0) {
        throw std::invalid_argument("simulate: need at least one replication");
    }
    policy.validate(system);

    const std::size_t J = system.n_servers();
    const std::size_t I = system.n_apps();
    const std::size_t R = options.replications;

    std::size_t workers = options.threads ? options.threads : std::thread::hardware_concurrency();
    workers = std::max<std::size_t>(1, std::min(workers, R));

    std::vector<std::future<RepResult>> futures;
    futures.reserve(R);
    if (workers <= 1) {
        for (std::size_t r = 0; r < R; ++r) {
            futures.push_back(std::async(std::launch::deferred, run_replication,
                                         std::cref(system), std::cref(policy),
                                         std::cref(options), r, r == 0));
        }
    } else {
        for (std::size_t r = 0; r < R; ++r) {
            futures.push_back(std::async(std::launch::async, run_replication,
                                         std::cref(system), std::cref(policy),
                                         std::cref(options), r, r == 0));
        }
    }
    std::vector<RepResult> reps;
    reps.reserve(R);
    for (auto& f : futures) reps.push_back(f.get());

    SimReport rep;
    rep.servers.resize(J);
    rep.horizon = options.horizon;
    rep.warmup = options.warmup;
    rep.replications = R;
    rep.seed = options.seed;
    rep.routing_fraction.assign(I, std::vector<double>(J, 0.0));
    rep.series = reps.front().series;

    std::vector<double> rep_power(R, 0.0);
    std::vector<std::vector<double>> rep_viol(J, std::vector<double>(R, 0.0));
    std::vector<std::vector<double>> rep_pow(J, std::vector<double>(R, 0.0));
    std::vector<std::uint64_t> app_totals(I, 0);

    double elapsed_total = 0.0;
    double max_residual = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
        const RepResult& rr = reps[r];
        elapsed_total += rr.elapsed;
        rep_power[r] = rr.total_energy / rr.elapsed;
        double injected = 0.0, completed = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const ServerSim& s = rr.servers[j];
            ServerMetrics& m = rep.servers[j];
            m.arrivals += s.arrivals;
            m.counted_jobs += s.counted;
            m.violations += s.violations;
            m.mean_response += s.response_sum;   // sums for now
            m.busy_fraction += s.busy_time;      // times for now
            m.average_power += s.energy;         // energy for now
            rep_viol[j][r] = s.counted ? double(s.violations) / double(s.counted) : 0.0;
            rep_pow[j][r] = s.energy / rr.elapsed;
            injected += s.injected_work;
            completed += s.completed_work;
        }
        max_residual = std::max(
            max_residual, std::abs(injected - completed) / std::max(1.0, injected));
        for (std::size_t i = 0; i < I; ++i) {
            for (std::size_t j = 0; j < J; ++j) {
                rep.routing_fraction[i][j] += double(rr.flow_counts[i][j]);
                app_totals[i] += rr.flow_counts[i][j];
            }
        }
    }
    rep.max_work_residual = max_residual;

    double total_energy = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        ServerMetrics& m = rep.servers[j];
        m.server_id = system.servers[j].id;
        m.mean_response = m.counted_jobs ? m.mean_response / double(m.counted_jobs) : 0.0;
        m.busy_fraction /= elapsed_total;
        m.mean_speed_busy = policy.speeds[j];
        m.mean_speed_alltime = m.busy_fraction * policy.speeds[j] +
                               (1.0 - m.busy_fraction) * system.servers[j].speed_min;
        total_energy += m.average_power;
        m.average_power /= elapsed_total;
        if (m.counted_jobs) {
            m.violation_probability = double(m.violations) / double(m.counted_jobs);
            const auto w = wilson_interval(m.violations, m.counted_jobs);
            m.wilson_low = w.wilson_low;
            m.wilson_high = w.wilson_high;
        }
        m.violation_stderr = sample_stderr(rep_viol[j]);
        m.power_stderr = sample_stderr(rep_pow[j]);
        rep.total_jobs += m.arrivals;
    }
    rep.total_average_power = total_energy / elapsed_total;
    rep.total_power_stderr = sample_stderr(rep_power);
    rep.per_replication_power = rep_power;

    for (std::size_t i = 0; i < I; ++i) {
        for (std::size_t j = 0; j < J; ++j) {
            rep.routing_fraction[i][j] =
                app_totals[i] ? rep.routing_fraction[i][j] / double(app_totals[i]) : 0.0;
        }
    }
    return rep;
}

CoupledResponses simulate_coupled_disciplines(std::span<const double> gaps,
                                              std::span<const double> works, double speed)
{
    const std::size_t n = works.size();
    CoupledResponses out;
    out.ps.assign(n, 0.0);
    out.ps_final.assign(n, 0.0);
    out.fcfs.assign(n, 0.0);

    // FCFS by the waiting-time recursion
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wait = i == 0 ? 0.0 : std::max(prev - gaps[i], 0.0);
        out.fcfs[i] = wait + works[i] / speed;
        prev = out.fcfs[i];
    }

    // PS on the identical trace via the drain clock; at each arrival the
    // horizon-final response falls out of a rollout of the current backlog
    // with no further arrivals.
    struct Entry {
        double threshold;
        std::size_t index;
        bool operator>(const Entry& o) const { return threshold > o.threshold; }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> active;
    std::vector<double> arrival(n);
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t += gaps[i];
        arrival[i] = t;
    }
    std::vector<double> remaining;  // scratch for the rollouts
    double drain = 0.0, now = 0.0;
    std::size_t next = 0;
    while (next < n || !active.empty()) {
        const double t_arr = next < n ? arrival[next] : kInf;
        double t_done = kInf;
        if (!active.empty()) {
            t_done = now + std::max(active.top().threshold - drain, 0.0) *
                               static_cast<double>(active.size()) / speed;
        }
        if (t_done <= t_arr) {
            drain = active.top().threshold;
            const std::size_t idx = active.top().index;
            active.pop();
            out.ps[idx] = t_done - arrival[idx];
            now = t_done;
            if (active.empty()) drain = 0.0;
        } else {
            if (!active.empty()) {
                drain += (t_arr - now) * speed / static_cast<double>(active.size());
            }
            now = t_arr;
            active.push(Entry{drain + works[next], next});

            // rollout: drain everything now in the system, nobody else comes
            remaining.clear();
            {
                auto copy = active;  // small queues; fine to copy
                while (!copy.empty()) {
                    remaining.push_back(copy.top().threshold - drain);
                    copy.pop();
                }
            }
            const double mine = works[next];
            double elapsed = 0.0, level = 0.0;
            const std::size_t m = remaining.size();
            for (std::size_t r = 0; r < m; ++r) {
                elapsed += (remaining[r] - level) * static_cast<double>(m - r) / speed;
                level = remaining[r];
                if (remaining[r] >= mine - 1e-15) break;
            }
            out.ps_final[next] = elapsed;
            ++next;
        }
    }
    return out;
}

TailEstimate wilson_interval(std::uint64_t count, std::uint64_t total)
{
    if (total == 0) throw std::invalid_argument("wilson_interval: empty sample");
    constexpr double z = 1.959963984540054;  // 97.5% normal quantile
    const double n = static_cast<double>(total);
    const double phat = static_cast<double>(count) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = phat + z2 / (2.0 * n);
    const double spread = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    TailEstimate e;
    e.count = count;
    e.total = total;
    e.probability = phat;
    e.wilson_low = std::max(0.0, (center - spread) / denom);
    e.wilson_high = std::min(1.0, (center + spread) / denom);
    return e;
}

TailEstimate empirical_tail(std::span<const double> samples, double threshold)
{
    if (samples.empty()) throw std::invalid_argument("empirical_tail: empty sample");
    std::uint64_t k = 0;
    for (double s : samples) {
        if (s >= threshold) ++k;
    }
    return wilson_interval(k, samples.size());
}

std::string SimReport::to_json() const
{
    nlohmann::json doc;
    doc["horizon"] = horizon;
    doc["warmup"] = warmup;
    doc["replications"] = replications;
    doc["seed"] = seed;
    doc["total_average_power"] = total_average_power;
    doc["total_power_stderr"] = total_power_stderr;
    doc["total_jobs"] = total_jobs;
    doc["servers"] = nlohmann::json::array();
    for (const auto& m : servers) {
        doc["servers"].push_back({
            {"server", m.server_id},
            {"arrivals", m.arrivals},
            {"jobs", m.counted_jobs},
            {"violations", m.violations},
            {"violation_probability", m.violation_probability},
            {"wilson_low", m.wilson_low},
            {"wilson_high", m.wilson_high},
            {"violation_stderr", m.violation_stderr},
            {"mean_response", m.mean_response},
            {"busy_fraction", m.busy_fraction},
            {"mean_speed_alltime", m.mean_speed_alltime},
            {"mean_speed_busy", m.mean_speed_busy},
            {"average_power", m.average_power},
            {"power_stderr", m.power_stderr},
        });
    }
    doc["routing_fraction"] = routing_fraction;
    return doc.dump(2);
}

} // namespace rqfarm
