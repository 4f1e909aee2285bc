// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.

#include "rqfarm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <thread>

#include "json.hpp"

namespace rqfarm {

namespace {

constexpr double kBigPenalty = 1e10;
constexpr double kStepFloor = 1e-7;

struct AppData {
    double lambda = 0.0;
    double arrival_scov = 0.0;
    double mean_work = 0.0;
    double work_msq = 0.0;  // sigma^2 + mean^2 of per-job work
    double demand = 0.0;
};

// Running per-server sums over incoming flows; enough to rebuild the
// aggregate in O(1) after a transfer touches one flow.
struct ServerSums {
    double lam = 0.0;   // sum lambda_i p
    double va = 0.0;    // sum p/(2-p) * arrival scov
    double om = 0.0;    // sum demand_i p
    double wm = 0.0;    // sum lambda_i p * mean_work_i
    double wmsq = 0.0;  // sum lambda_i p * (sigma_i^2 + mean_i^2)
};

struct ServerEval {
    double cost = 0.0;       // power, or penalty when infeasible
    double score = 0.0;      // 2 * arrival variability (min-max objective)
    double speed = 0.0;
    bool used = false;
    bool feasible = true;
};

enum class Objective { TotalPower, MinMaxVariability };

class ReducedProblem {
public:
    ReducedProblem(const SystemSpec& system, const SolveOptions& opt, Objective kind)
        : system_(system), kind_(kind)
    {
        const std::size_t I = system.n_apps();
        apps_.resize(I);
        for (std::size_t i = 0; i < I; ++i) {
            const ApplicationSpec& a = system.applications[i];
            apps_[i] = {a.arrival_rate, a.arrival_scov, a.mean_work,
                        a.sigma_work * a.sigma_work + a.mean_work * a.mean_work,
                        a.demand_rate};
        }
        offsets_.resize(I + 1, 0);
        for (std::size_t i = 0; i < I; ++i) {
            offsets_[i + 1] = offsets_[i] + system.eligible[i].size();
        }
        delta_.resize(system.n_servers());
        gamma_.resize(system.n_servers());
        for (std::size_t j = 0; j < system.n_servers(); ++j) {
            const ServerSpec& s = system.servers[j];
            delta_[j] = opt.delta_override.value_or(s.sla_threshold);
            gamma_[j] = gamma_from_epsilon(opt.epsilon_override.value_or(s.sla_epsilon));
        }
    }

    std::size_t n_vars() const { return offsets_.back(); }
    std::size_t var_index(std::size_t i, std::size_t slot) const { return offsets_[i] + slot; }
    const std::vector<std::size_t>& slots(std::size_t i) const { return system_.eligible[i]; }

    // flow contribution of application i at share p
    ServerSums contribution(std::size_t i, double p) const
    {
        if (p <= kMinRoutingShare) return {};
        const AppData& a = apps_[i];
        return {a.lambda * p, p / (2.0 - p) * a.arrival_scov, a.demand * p,
                a.lambda * p * a.mean_work, a.lambda * p * a.work_msq};
    }

    ServerEval evaluate(std::size_t j, const ServerSums& s) const
    {
        const ServerSpec& srv = system_.servers[j];
        ServerEval e;
        if (s.lam <= kMinRoutingShare) {
            // no incoming flow: the server only ever idles at its floor speed
            e.cost = kind_ == Objective::TotalPower ? power(srv, srv.speed_min) : 0.0;
            e.score = 0.0;
            e.speed = srv.speed_min;
            e.used = false;
            return e;
        }
        e.used = true;
        ServerAggregate agg = aggregate_from(j, s);
        e.score = 2.0 * agg.arrival_variability;
        if (kind_ == Objective::MinMaxVariability) {
            e.speed = srv.speed_min;
            e.cost = 0.0;
            return e;
        }
        const SlaQuadratic q = sla_quadratic(agg, delta_[j]);
        const MinSpeed ms = min_feasible_speed(q, srv);
        if (ms.feasible) {
            e.speed = ms.speed;
            e.cost = power(srv, ms.speed);
        } else {
            e.feasible = false;
            e.speed = srv.speed_max;
            e.cost = kBigPenalty + infeasibility_residual(q, srv, agg.demand_rate);
        }
        return e;
    }

    ServerAggregate aggregate_from(std::size_t j, const ServerSums& s) const
    {
        ServerAggregate agg;
        agg.arrival_rate = s.lam;
        agg.gamma_level = gamma_[j];
        agg.arrival_variability = gamma_[j] / s.lam * std::sqrt(std::max(s.va, 0.0));
        agg.mean_workload = s.wm / s.lam;
        const double var = s.wmsq / s.lam - agg.mean_workload * agg.mean_workload;
        agg.workload_sigma = std::sqrt(std::max(var, 0.0));
        agg.workload_variability = gamma_[j] * agg.workload_sigma;
        agg.demand_rate = s.om;
        return agg;
    }

    double delta(std::size_t j) const { return delta_[j]; }
    double gamma(std::size_t j) const { return gamma_[j]; }
    const SystemSpec& system() const { return system_; }

private:
    // Smallest violation of the speed quadratic over the admissible box,
    // in 1/speed coordinates where the residual is convex; drives descent
    // toward feasibility.
    static double infeasibility_residual(const SlaQuadratic& q, const ServerSpec& srv,
                                         double demand)
    {
        const double floor = std::max(srv.speed_min, demand * (1.0 + kStabilityMargin));
        if (floor >= srv.speed_max) {
            return kBigPenalty * (1.0 + demand / srv.speed_max);
        }
        const double ulo = 1.0 / srv.speed_max;
        const double uhi = 1.0 / floor;
        double u = ulo;
        if (q.c > 0.0) u = std::clamp(-q.b / (2.0 * q.c), ulo, uhi);
        double best = q.a + q.b * u + q.c * u * u;
        for (double cand : {ulo, uhi}) {
            best = std::min(best, q.a + q.b * cand + q.c * cand * cand);
        }
        return std::max(best, 0.0);
    }

    const SystemSpec& system_;
    Objective kind_;
    std::vector<AppData> apps_;
    std::vector<std::size_t> offsets_;
    std::vector<double> delta_;
    std::vector<double> gamma_;
};

// Mutable search state: packed routing shares plus cached per-server sums
// and evaluations.
class SearchState {
public:
    SearchState(const ReducedProblem& prob, double softmax_tau = 0.0)
        : prob_(prob), tau_(softmax_tau)
    {
        sums_.resize(prob.system().n_servers());
        evals_.resize(prob.system().n_servers());
        packed_.assign(prob.n_vars(), 0.0);
    }

    void set_tau(double tau) { tau_ = tau; }

    void load(const std::vector<double>& packed)
    {
        packed_ = packed;
        rebuild();
    }

    void rebuild()
    {
        const SystemSpec& sys = prob_.system();
        std::fill(sums_.begin(), sums_.end(), ServerSums{});
        for (std::size_t i = 0; i < sys.n_apps(); ++i) {
            const auto& elig = prob_.slots(i);
            for (std::size_t k = 0; k < elig.size(); ++k) {
                add_into(sums_[elig[k]], prob_.contribution(i, packed_[prob_.var_index(i, k)]));
            }
        }
        for (std::size_t j = 0; j < sums_.size(); ++j) {
            evals_[j] = prob_.evaluate(j, sums_[j]);
        }
    }

    // objective under the current mode
    double objective() const
    {
        double total = 0.0;
        if (tau_ <= 0.0) {
            bool any = false;
            double vmax = 0.0;
            for (const auto& e : evals_) {
                total += e.cost;
                if (e.used) {
                    vmax = any ? std::max(vmax, e.score) : e.score;
                    any = true;
                }
            }
            if (is_minmax()) return any ? vmax : 0.0;
            return total;
        }
        // smoothed maximum of the per-server scores
        double vmax = -std::numeric_limits<double>::infinity();
        for (const auto& e : evals_) {
            if (e.used) vmax = std::max(vmax, e.score);
        }
        double acc = 0.0;
        for (const auto& e : evals_) {
            if (e.used) acc += std::exp((e.score - vmax) / tau_);
        }
        return vmax + tau_ * std::log(acc);
    }

    bool all_feasible() const
    {
        for (const auto& e : evals_) {
            if (!e.feasible) return false;
        }
        return true;
    }

    // Attempt to move mass t of application i from slot a to slot b; commits
    // and returns true when the objective improves by more than tol.
    bool try_transfer(std::size_t i, std::size_t a, std::size_t b, double t, double tol)
    {
        const std::size_t va = prob_.var_index(i, a);
        const std::size_t vb = prob_.var_index(i, b);
        const double pa = packed_[va];
        if (pa < t) return false;
        const std::size_t ja = prob_.slots(i)[a];
        const std::size_t jb = prob_.slots(i)[b];
        const double pa_new = (pa - t < kMinRoutingShare) ? 0.0 : pa - t;
        const double moved = pa - pa_new;
        const double pb_new = packed_[vb] + moved;

        ServerSums sa = sums_[ja];
        sub_from(sa, prob_.contribution(i, pa));
        add_into(sa, prob_.contribution(i, pa_new));
        ServerSums sb = sums_[jb];
        sub_from(sb, prob_.contribution(i, packed_[vb]));
        add_into(sb, prob_.contribution(i, pb_new));

        const ServerEval ea = prob_.evaluate(ja, sa);
        const ServerEval eb = prob_.evaluate(jb, sb);
        ++evaluations;

        if (is_minmax()) {
            const double before = objective();
            const ServerEval keep_a = evals_[ja];
            const ServerEval keep_b = evals_[jb];
            evals_[ja] = ea;
            evals_[jb] = eb;
            const double after = objective();
            if (!(after - before < -tol)) {
                evals_[ja] = keep_a;
                evals_[jb] = keep_b;
                return false;
            }
            sums_[ja] = sa;
            sums_[jb] = sb;
            packed_[va] = pa_new;
            packed_[vb] = pb_new;
            return true;
        }

        const double delta = ea.cost + eb.cost - evals_[ja].cost - evals_[jb].cost;
        if (!(delta < -tol)) return false;
        sums_[ja] = sa;
        sums_[jb] = sb;
        evals_[ja] = ea;
        evals_[jb] = eb;
        packed_[va] = pa_new;
        packed_[vb] = pb_new;
        return true;
    }

    const std::vector<double>& packed() const { return packed_; }
    const ServerEval& eval(std::size_t j) const { return evals_[j]; }
    std::uint64_t evaluations = 0;

private:
    bool is_minmax() const { return mode_minmax_; }

public:
    void set_minmax(bool on) { mode_minmax_ = on; }

private:
    static void add_into(ServerSums& s, const ServerSums& d)
    {
        s.lam += d.lam;
        s.va += d.va;
        s.om += d.om;
        s.wm += d.wm;
        s.wmsq += d.wmsq;
    }
    static void sub_from(ServerSums& s, const ServerSums& d)
    {
        s.lam -= d.lam;
        s.va -= d.va;
        s.om -= d.om;
        s.wm -= d.wm;
        s.wmsq -= d.wmsq;
    }

    const ReducedProblem& prob_;
    double tau_ = 0.0;
    bool mode_minmax_ = false;
    std::vector<double> packed_;
    std::vector<ServerSums> sums_;
    std::vector<ServerEval> evals_;
};

struct DescentOutcome {
    std::vector<double> packed;
    double objective = 0.0;
    bool feasible = false;
    bool converged = false;
    std::uint64_t evaluations = 0;
};

// Greedy pairwise-transfer descent with a halving step ladder.
DescentOutcome descend(const ReducedProblem& prob, SearchState& state,
                       std::vector<double> start, std::size_t sweep_budget, double tol)
{
    state.load(start);
    const SystemSpec& sys = prob.system();
    double step = 0.5;
    std::size_t sweeps = 0;
    std::size_t commits = 0;
    double current = state.objective();

    while (step >= kStepFloor && sweeps < sweep_budget) {
        bool improved_at_level = false;
        while (sweeps < sweep_budget) {
            bool improved = false;
            for (std::size_t i = 0; i < sys.n_apps(); ++i) {
                const std::size_t m = prob.slots(i).size();
                if (m < 2) continue;
                for (std::size_t a = 0; a < m; ++a) {
                    const double pa = state.packed()[prob.var_index(i, a)];
                    if (pa <= 0.0) continue;
                    const double t = std::min(step, pa);
                    for (std::size_t b = 0; b < m; ++b) {
                        if (b == a) continue;
                        if (state.try_transfer(i, a, b, t,
                                               tol * std::max(1.0, std::abs(current)))) {
                            improved = true;
                            if (++commits % 4096 == 0) state.rebuild();
                        }
                    }
                }
            }
            ++sweeps;
            if (!improved) break;
            improved_at_level = true;
            current = state.objective();
        }
        (void)improved_at_level;
        step *= 0.5;
    }

    state.rebuild();
    DescentOutcome out;
    out.packed = state.packed();
    out.objective = state.objective();
    out.feasible = state.all_feasible();
    out.converged = step < kStepFloor;
    out.evaluations = state.evaluations;
    return out;
}

std::vector<double> dirichlet_start(const ReducedProblem& prob, std::mt19937_64& rng,
                                    double alpha)
{
    std::vector<double> packed(prob.n_vars(), 0.0);
    std::gamma_distribution<double> g(alpha, 1.0);
    const SystemSpec& sys = prob.system();
    for (std::size_t i = 0; i < sys.n_apps(); ++i) {
        const std::size_t m = prob.slots(i).size();
        double total = 0.0;
        std::vector<double> w(m);
        for (std::size_t k = 0; k < m; ++k) {
            w[k] = std::max(g(rng), 1e-12);
            total += w[k];
        }
        for (std::size_t k = 0; k < m; ++k) {
            packed[prob.var_index(i, k)] = w[k] / total;
        }
    }
    return packed;
}

std::vector<double> pack_policy(const ReducedProblem& prob, const StaticPolicy& policy)
{
    std::vector<double> packed(prob.n_vars(), 0.0);
    const SystemSpec& sys = prob.system();
    for (std::size_t i = 0; i < sys.n_apps(); ++i) {
        const auto& elig = prob.slots(i);
        double total = 0.0;
        for (std::size_t k = 0; k < elig.size(); ++k) total += policy.routing[i][elig[k]];
        for (std::size_t k = 0; k < elig.size(); ++k) {
            packed[prob.var_index(i, k)] =
                total > 0.0 ? policy.routing[i][elig[k]] / total : 1.0 / double(elig.size());
        }
    }
    return packed;
}

void normalize_rows(const ReducedProblem& prob, std::vector<double>& packed)
{
    const SystemSpec& sys = prob.system();
    for (std::size_t i = 0; i < sys.n_apps(); ++i) {
        const std::size_t m = prob.slots(i).size();
        double total = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            double& p = packed[prob.var_index(i, k)];
            if (p < kMinRoutingShare) p = 0.0;
            total += p;
        }
        for (std::size_t k = 0; k < m; ++k) packed[prob.var_index(i, k)] /= total;
    }
}

StaticPolicy unpack_policy(const ReducedProblem& prob, const std::vector<double>& packed,
                           const std::vector<double>& speeds)
{
    const SystemSpec& sys = prob.system();
    StaticPolicy policy;
    policy.routing.assign(sys.n_apps(), std::vector<double>(sys.n_servers(), 0.0));
    for (std::size_t i = 0; i < sys.n_apps(); ++i) {
        const auto& elig = prob.slots(i);
        for (std::size_t k = 0; k < elig.size(); ++k) {
            policy.routing[i][elig[k]] = packed[prob.var_index(i, k)];
        }
    }
    policy.speeds = speeds;
    return policy;
}

bool lexicographically_before(const std::vector<double>& a, const std::vector<double>& b)
{
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] != b[k]) return a[k] < b[k];
    }
    return false;
}

struct Incumbent {
    DescentOutcome outcome;
    bool valid = false;
};

// best-of merge: feasibility first, then objective, ties by lexicographic
// routing for reproducibility
void merge_incumbent(Incumbent& best, const DescentOutcome& cand, double tol)
{
    if (!best.valid) {
        best = {cand, true};
        return;
    }
    const DescentOutcome& cur = best.outcome;
    if (cand.feasible != cur.feasible) {
        if (cand.feasible) best.outcome = cand;
        return;
    }
    const double scale = std::max({1.0, std::abs(cand.objective), std::abs(cur.objective)});
    if (cand.objective < cur.objective - tol * scale) {
        best.outcome = cand;
    } else if (std::abs(cand.objective - cur.objective) <= tol * scale &&
               lexicographically_before(cand.packed, cur.packed)) {
        best.outcome = cand;
    }
}

std::vector<DescentOutcome> run_restarts(const ReducedProblem& prob, const SolveOptions& opt,
                                         bool minmax_mode,
                                         const std::vector<std::vector<double>>& extra_starts)
{
    const double alphas[3] = {0.3, 1.0, 3.0};
    const std::size_t R = opt.restarts + extra_starts.size();

    auto one = [&](std::size_t r) {
        SearchState state(prob);
        state.set_minmax(minmax_mode);
        std::vector<double> start;
        if (r < opt.restarts) {
            std::mt19937_64 rng(opt.seed * 0x9e3779b97f4a7c15ULL + r * 1315423911ULL + 1ULL);
            start = dirichlet_start(prob, rng, alphas[r % 3]);
        } else {
            start = extra_starts[r - opt.restarts];
        }
        if (!minmax_mode) {
            return descend(prob, state, start, opt.max_iterations, opt.tolerance);
        }
        // smoothed maximum with a cooling temperature, final pass on the
        // true maximum
        state.load(start);
        const double scale = std::max(state.objective(), 1e-6);
        DescentOutcome out;
        std::vector<double> cur = start;
        for (double tau : {0.3 * scale, 0.1 * scale, 0.03 * scale, 0.01 * scale, 0.0}) {
            state.set_tau(tau);
            out = descend(prob, state, cur, opt.max_iterations, opt.tolerance);
            cur = out.packed;
        }
        return out;
    };

    std::size_t workers = opt.threads ? opt.threads : std::thread::hardware_concurrency();
    workers = std::max<std::size_t>(1, std::min(workers, R));
    std::vector<DescentOutcome> outcomes(R);
    if (workers <= 1) {
        for (std::size_t r = 0; r < R; ++r) outcomes[r] = one(r);
    } else {
        std::atomic<std::size_t> cursor{0};
        auto pump = [&]() {
            while (true) {
                const std::size_t r = cursor.fetch_add(1);
                if (r >= R) break;
                outcomes[r] = one(r);
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w + 1 < workers; ++w) pool.emplace_back(pump);
        pump();
        for (auto& t : pool) t.join();
    }
    return outcomes;
}

} // namespace

std::string to_string(SolveStatus s)
{
    switch (s) {
        case SolveStatus::OptimalLocal: return "optimal-local";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

SolveResult solve_m2(const SystemSpec& system, const SolveOptions& options)
{
    ReducedProblem prob(system, options, Objective::TotalPower);

    std::vector<std::vector<double>> extra;
    for (const auto& w : options.warm_starts) extra.push_back(pack_policy(prob, w));

    const auto outcomes = run_restarts(prob, options, false, extra);
    Incumbent best;
    std::uint64_t evals = 0;
    for (const auto& o : outcomes) {
        evals += o.evaluations;
        merge_incumbent(best, o, options.tolerance);
    }

    DescentOutcome chosen = best.outcome;
    normalize_rows(prob, chosen.packed);

    // final exact evaluation at the chosen routing
    SearchState state(prob);
    state.load(chosen.packed);

    SolveResult result;
    result.restarts_used = outcomes.size();
    result.evaluations = evals;

    const std::size_t J = system.n_servers();
    std::vector<double> speeds(J);
    double objective = 0.0;
    bool feasible = true;
    result.per_server.resize(J);
    const auto routing = unpack_policy(prob, chosen.packed, speeds).routing;
    for (std::size_t j = 0; j < J; ++j) {
        const ServerEval& e = state.eval(j);
        ServerPlan& plan = result.per_server[j];
        plan.server_id = system.servers[j].id;
        plan.used = e.used;
        plan.feasible = e.feasible;
        plan.speed = e.speed;
        speeds[j] = e.speed;
        plan.power_draw = power(system.servers[j], e.speed);
        if (e.used) {
            const auto agg = server_aggregate(system, routing, j, prob.gamma(j));
            if (agg) {
                plan.arrival_rate = agg->arrival_rate;
                plan.arrival_variability = agg->arrival_variability;
                plan.workload_variability = agg->workload_variability;
                plan.demand_rate = agg->demand_rate;
                plan.floor_at_max =
                    feasibility_floor(*agg, system.servers[j].speed_max);
                if (e.feasible) plan.bound = response_time_bound(*agg, e.speed);
            }
        }
        feasible = feasible && e.feasible;
        objective += plan.power_draw;
    }

    result.policy = unpack_policy(prob, chosen.packed, speeds);
    result.objective = objective;
    if (!feasible) {
        result.status = SolveStatus::Infeasible;
    } else if (chosen.converged) {
        result.status = SolveStatus::OptimalLocal;
    } else {
        result.status = SolveStatus::IterationLimit;
    }
    return result;
}

MinMaxResult feasibility_minmax(const SystemSpec& system, double epsilon,
                                const SolveOptions& options)
{
    SolveOptions opt = options;
    opt.epsilon_override = epsilon;
    ReducedProblem prob(system, opt, Objective::MinMaxVariability);

    const auto outcomes = run_restarts(prob, opt, true, {});
    Incumbent best;
    for (const auto& o : outcomes) merge_incumbent(best, o, opt.tolerance);

    DescentOutcome chosen = best.outcome;
    normalize_rows(prob, chosen.packed);

    SearchState state(prob);
    state.set_minmax(true);
    state.load(chosen.packed);

    MinMaxResult result;
    result.value = state.objective();
    std::vector<double> speeds(system.n_servers());
    for (std::size_t j = 0; j < system.n_servers(); ++j) {
        speeds[j] = system.servers[j].speed_min;
    }
    result.policy = unpack_policy(prob, chosen.packed, speeds);
    return result;
}

PolicyCheck check_policy(const SystemSpec& system, const StaticPolicy& policy)
{
    const std::size_t I = system.n_apps();
    const std::size_t J = system.n_servers();
    if (policy.routing.size() != I || policy.speeds.size() != J) {
        throw std::invalid_argument("check_policy: policy dimensions do not match the system");
    }
    for (const auto& row : policy.routing) {
        if (row.size() != J) {
            throw std::invalid_argument("check_policy: routing row length mismatch");
        }
    }

    PolicyCheck check;
    check.routing_ok = true;
    try {
        policy.validate(system);
    } catch (const std::exception&) {
        check.routing_ok = false;
    }

    check.servers.resize(J);
    bool all_ok = true;
    for (std::size_t j = 0; j < J; ++j) {
        const ServerSpec& srv = system.servers[j];
        ServerCheck& sc = check.servers[j];
        sc.server_id = srv.id;
        const double x = policy.speeds[j];
        sc.speed_in_range = x >= srv.speed_min - 1e-9 && x <= srv.speed_max + 1e-9;
        sc.power_draw = power(srv, x);
        check.total_power += sc.power_draw;

        const double gamma = gamma_from_epsilon(srv.sla_epsilon);
        const auto agg = server_aggregate(system, policy.routing, j, gamma);
        if (!agg) {
            sc.used = false;
            sc.stable = true;
            sc.sla_ok = true;  // no flow, nothing to violate
            all_ok = all_ok && sc.speed_in_range;
            continue;
        }
        sc.used = true;
        sc.aggregate = *agg;
        sc.stable = x > agg->demand_rate;
        const SlaQuadratic q = sla_quadratic(*agg, srv.sla_threshold);
        sc.quadratic_residual = q.a * x * x + q.b * x + q.c;
        sc.sla_ok = sc.stable && sc.quadratic_residual <= 1e-6 * std::max(1.0, std::abs(q.c));
        if (sc.stable) sc.bound = response_time_bound(*agg, x);
        else sc.bound = std::numeric_limits<double>::infinity();
        all_ok = all_ok && sc.speed_in_range && sc.stable && sc.sla_ok;
    }
    check.pass = all_ok && check.routing_ok;
    return check;
}

SystemSpec make_random_system(std::size_t n_apps, std::size_t n_servers, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SystemSpec sys;
    for (std::size_t i = 0; i < n_apps; ++i) {
        ApplicationSpec app;
        app.id = static_cast<int>(i) + 1;
        const bool exponential = unit(rng) < 0.2;
        app.interarrival.family =
            exponential ? DistFamily::Exponential : DistFamily::Lognormal;
        app.interarrival.mean = 0.1 + 0.4 * unit(rng);
        app.interarrival.scov = exponential ? 1.0 : 0.8 + 1.2 * unit(rng);
        app.workload.family = DistFamily::Lognormal;
        app.workload.mean = 2.0 + 8.0 * unit(rng);
        app.workload.scov = 0.5 + 1.5 * unit(rng);
        sys.applications.push_back(app);
    }
    for (std::size_t j = 0; j < n_servers; ++j) {
        ServerSpec s;
        s.id = static_cast<int>(j) + 1;
        s.speed_min = 5.0 + 5.0 * unit(rng);
        s.speed_max = 99.0 + 6.0 * unit(rng);
        s.power_base = 150.0 + 550.0 * unit(rng);
        s.power_coeff = 0.2 + 0.8 * unit(rng);
        s.power_exponent = 3.0;
        s.sla_threshold = 4.0;
        s.sla_epsilon = 0.01;
        const std::size_t count = 1 + static_cast<std::size_t>(unit(rng) * 3.0) % 3;
        while (s.apps.size() < count) {
            const int id = 1 + static_cast<int>(unit(rng) * double(n_apps));
            if (std::find(s.apps.begin(), s.apps.end(), id) == s.apps.end() &&
                id <= static_cast<int>(n_apps)) {
                s.apps.push_back(id);
            }
        }
        std::sort(s.apps.begin(), s.apps.end());
        sys.servers.push_back(s);
    }
    // make sure every application is hosted somewhere
    for (std::size_t i = 0; i < n_apps; ++i) {
        bool hosted = false;
        for (const auto& s : sys.servers) {
            if (std::find(s.apps.begin(), s.apps.end(), int(i) + 1) != s.apps.end()) {
                hosted = true;
                break;
            }
        }
        if (!hosted) {
            auto& s = sys.servers[i % n_servers];
            s.apps.push_back(int(i) + 1);
            std::sort(s.apps.begin(), s.apps.end());
        }
    }
    sys.finalize();
    sys.validate();
    return sys;
}

std::string SolveResult::to_json(const SystemSpec& system) const
{
    nlohmann::json doc;
    doc["status"] = rqfarm::to_string(status);
    doc["objective"] = objective;
    doc["restarts"] = restarts_used;
    doc["evaluations"] = evaluations;
    doc["policy"] = {{"routing", policy.routing}, {"speeds", policy.speeds}};
    doc["servers"] = nlohmann::json::array();
    for (const auto& p : per_server) {
        doc["servers"].push_back({
            {"server", p.server_id},
            {"used", p.used},
            {"feasible", p.feasible},
            {"arrival_rate", p.arrival_rate},
            {"arrival_variability", p.arrival_variability},
            {"workload_variability", p.workload_variability},
            {"demand_rate", p.demand_rate},
            {"speed", p.speed},
            {"bound", p.bound},
            {"power", p.power_draw},
            {"floor_at_max_speed", p.floor_at_max},
            {"sla_threshold", system.servers[&p - per_server.data()].sla_threshold},
        });
    }
    return doc.dump(2);
}

std::string PolicyCheck::to_json(const SystemSpec& system) const
{
    (void)system;
    nlohmann::json doc;
    doc["pass"] = pass;
    doc["routing_ok"] = routing_ok;
    doc["total_power"] = total_power;
    doc["servers"] = nlohmann::json::array();
    for (const auto& s : servers) {
        doc["servers"].push_back({
            {"server", s.server_id},
            {"used", s.used},
            {"stable", s.stable},
            {"speed_in_range", s.speed_in_range},
            {"sla_ok", s.sla_ok},
            {"quadratic_residual", s.quadratic_residual},
            {"bound", s.bound},
            {"power", s.power_draw},
        });
    }
    return doc.dump(2);
}

} // namespace rqfarm
