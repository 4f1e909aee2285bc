// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.

#include "rqfarm/worstcase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rqfarm {

std::vector<double> fcfs_response_times(std::span<const double> gaps,
                                        std::span<const double> works, double speed)
{
    const std::size_t n = works.size();
    std::vector<double> resp(n);
    double prev = 0.0;  // response of the previous job
    for (std::size_t i = 0; i < n; ++i) {
        const double wait = i == 0 ? 0.0 : std::max(prev - gaps[i], 0.0);
        resp[i] = wait + works[i] / speed;
        prev = resp[i];
    }
    return resp;
}

double coupled_worst_objective(std::span<const double> gaps, std::span<const double> works)
{
    const auto resp = fcfs_response_times(gaps, works, 1.0);
    return 2.0 * resp.back() - works.back();
}

double two_sum(std::span<const double> works, std::size_t k)
{
    const std::size_t n = works.size();
    double s = 0.0;
    for (std::size_t i = k; i <= n; ++i) {
        s += works[i - 1];
        if (i <= n - 1) s += works[i - 1];
    }
    return s;
}

double two_sum_target(std::size_t n, std::size_t k, double mu, double gamma_s)
{
    const double l = static_cast<double>(n - k);
    return (2.0 * l + 1.0) / mu + gamma_s * (std::sqrt(l + 1.0) + std::sqrt(l));
}

FiniteWorst finite_horizon_worst(std::size_t n, double lambda, double mu,
                                 double gamma_a, double gamma_s)
{
    FiniteWorst best{-std::numeric_limits<double>::infinity(), 0};
    for (std::size_t k = 1; k <= n; ++k) {
        const double l = static_cast<double>(n - k);
        const double v = two_sum_target(n, k, mu, gamma_s) -
                         2.0 * (l / lambda - gamma_a * std::sqrt(l));
        if (v > best.value) best = {v, k};
    }
    return best;
}

ExtremalTrace build_extremal(std::size_t n, double lambda, double mu,
                             double gamma_a, double gamma_s)
{
    if (n == 0) throw ConstructionError("build_extremal: horizon must be positive");
    for (std::size_t i = 2; i <= n; ++i) {
        const double step = std::sqrt(double(n - i + 1)) - std::sqrt(double(n - i));
        if (gamma_a * step > 1.0 / lambda + 1e-12) {
            throw ConstructionError("build_extremal: gap formula would be negative at index " +
                                    std::to_string(i));
        }
    }

    const FiniteWorst worst = finite_horizon_worst(n, lambda, mu, gamma_a, gamma_s);
    const std::size_t kstar = worst.argmax_k;
    const double l = static_cast<double>(n - kstar);

    ExtremalTrace t;
    t.n = n;
    t.lambda = lambda;
    t.mu = mu;
    t.gamma_a = gamma_a;
    t.gamma_s = gamma_s;
    t.argmax_k = kstar;
    t.worst_value = worst.value;

    // Gaps: every suffix sum starting at index >= 2 sits on the set boundary;
    // the first gap is irrelevant to responses and stays at the mean.
    t.gaps.assign(n, 1.0 / lambda);
    for (std::size_t i = 2; i <= n; ++i) {
        t.gaps[i - 1] =
            1.0 / lambda -
            gamma_a * (std::sqrt(double(n - i + 1)) - std::sqrt(double(n - i)));
    }

    // Works: both workload-set families are tight at k*; mass before k* stays
    // at the mean, the band k*..n-1 splits its tight sum evenly, and the last
    // job tops the full-sum constraint up.
    t.works.assign(n, 1.0 / mu);
    if (l > 0.0) {
        const double band = 1.0 / mu + gamma_s / std::sqrt(l);
        for (std::size_t i = kstar; i <= n - 1; ++i) t.works[i - 1] = band;
    }
    t.works[n - 1] = 1.0 / mu + gamma_s * (std::sqrt(l + 1.0) - std::sqrt(l));
    return t;
}

std::vector<double> printed_extremal_works(std::size_t n, double mu, double gamma_s)
{
    std::vector<double> w(n, 1.0 / mu);
    for (std::size_t i = 1; i + 2 <= n; ++i) {
        w[i - 1] = 1.0 / mu + 0.5 * gamma_s *
                   (std::sqrt(double(n - i + 1)) - std::sqrt(double(n - i - 1)));
    }
    if (n >= 2) {
        w[n - 2] = 1.0 / mu + 0.5 * gamma_s *
                   (1.0 + std::sqrt(2.0) + std::sqrt(double(n - 1)) - std::sqrt(double(n)));
    }
    w[n - 1] = 1.0 / mu + gamma_s * (std::sqrt(double(n)) - std::sqrt(double(n - 1)));
    return w;
}

double response_bound_infinite(double lambda, double mu, double gamma_a, double gamma_s)
{
    const double rho = lambda / mu;
    const double g = gamma_a + gamma_s;
    return g * g * lambda / (2.0 * (1.0 - rho)) + (2.0 - rho) / lambda;
}

namespace {

// Upper caps of the workload set in suffix-sum space:
// full sums  y_m = sum_{i=m}^{n} X_i <= cap_full(m)
// short sums y_m - y_n             <= cap_short(m), m <= n-1
double cap_full(std::size_t n, std::size_t m, double mu, double gs)
{
    const double u = static_cast<double>(n - m + 1);
    return u / mu + gs * std::sqrt(u);
}

double cap_short(std::size_t n, std::size_t m, double mu, double gs)
{
    const double u = static_cast<double>(n - m);
    return u / mu + gs * std::sqrt(u);
}

// Lower bound of the arrival set on the suffix sum starting at m.
double gap_floor(std::size_t n, std::size_t m, double lambda, double ga)
{
    const double u = static_cast<double>(n - m + 1);
    return u / lambda - ga * std::sqrt(u);
}

// Least possible sum_{i=k+1}^n T_i with nonnegative gaps: the binding
// constraint is the largest floor over suffixes contained in that range.
double min_tail_gaps(std::size_t n, std::size_t k, double lambda, double ga)
{
    double lo = 0.0;
    for (std::size_t m = k + 1; m <= n; ++m) {
        lo = std::max(lo, gap_floor(n, m, lambda, ga));
    }
    return lo;
}

// Exact max of the two-sum 2*y_k - y_n over the workload set with X >= 0,
// by enumerating the corner values of the reduced two-variable program.
double max_two_sum_exact(std::size_t n, std::size_t k, double mu, double gs)
{
    if (k == n) return cap_full(n, n, mu, gs);  // the last work alone
    const double vmax = cap_full(n, n, mu, gs);
    double best = -std::numeric_limits<double>::infinity();
    const double corners[3] = {0.0, cap_full(n, k, mu, gs) - cap_short(n, k, mu, gs), vmax};
    for (double v : corners) {
        if (v < 0.0 || v > vmax) continue;
        const double yk = std::min(cap_full(n, k, mu, gs), cap_short(n, k, mu, gs) + v);
        best = std::max(best, 2.0 * yk - v);
    }
    return best;
}

bool works_in_set(std::span<const double> x, std::size_t n, double mu, double gs)
{
    double full = 0.0;
    for (std::size_t m = n; m >= 1; --m) {
        full += x[m - 1];
        if (full > cap_full(n, m, mu, gs) + 1e-12) return false;
        if (m <= n - 1 && full - x[n - 1] > cap_short(n, m, mu, gs) + 1e-12) return false;
    }
    return true;
}

} // namespace

double brute_force_worst_fcfs(std::size_t n, double lambda, double mu,
                              double gamma_a, double gamma_s,
                              std::size_t grid_resolution)
{
    if (n == 0 || n > 6) {
        throw std::invalid_argument("brute_force_worst_fcfs: horizon must be in 1..6");
    }
    if (grid_resolution < 2) {
        throw std::invalid_argument("brute_force_worst_fcfs: resolution must be >= 2");
    }
    double guard = 1.0;
    for (std::size_t i = 0; i < n; ++i) guard *= static_cast<double>(grid_resolution);
    if (guard > 5e7) {
        throw std::invalid_argument("brute_force_worst_fcfs: grid too large");
    }

    // Least tail gap sums are exact corner values in both regimes.
    std::vector<double> tail_min(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        tail_min[k] = min_tail_gaps(n, k, lambda, gamma_a);
    }

    double best = -std::numeric_limits<double>::infinity();
    if (n <= 4) {
        for (std::size_t k = 1; k <= n; ++k) {
            best = std::max(best, max_two_sum_exact(n, k, mu, gamma_s) - 2.0 * tail_min[k]);
        }
        return best;
    }

    // Grid fallback: exhaust work vectors on a lattice, keep set members.
    const double xmax = 1.0 / mu + gamma_s * std::sqrt(static_cast<double>(n));
    const double step = xmax / static_cast<double>(grid_resolution - 1);
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> x(n, 0.0);
    while (true) {
        for (std::size_t i = 0; i < n; ++i) x[i] = step * static_cast<double>(idx[i]);
        if (works_in_set(x, n, mu, gamma_s)) {
            // evaluate every k for this member
            double run = 0.0;
            for (std::size_t k = n; k >= 1; --k) {
                run += x[k - 1];
                const double two = 2.0 * run - x[n - 1];
                best = std::max(best, two - 2.0 * tail_min[k]);
            }
        }
        std::size_t d = 0;
        while (d < n && ++idx[d] == grid_resolution) {
            idx[d] = 0;
            ++d;
        }
        if (d == n) break;
    }
    return best;
}

} // namespace rqfarm
