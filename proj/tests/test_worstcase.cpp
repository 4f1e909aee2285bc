// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.

#include "doctest.h"

#include <cmath>
#include <random>

#include "rqfarm/rq.hpp"
#include "rqfarm/worstcase.hpp"

using namespace rqfarm;

namespace {

UncertaintyParams gap_params(double lambda, double gamma_a)
{
    UncertaintyParams p;
    p.rate = lambda;
    p.sigma = gamma_a;  // gamma = 1 so variability == gamma_a
    p.gamma = 1.0;
    return p;
}

UncertaintyParams work_params(double mu, double gamma_s)
{
    UncertaintyParams p;
    p.rate = mu;
    p.sigma = gamma_s;
    p.gamma = 1.0;
    return p;
}

} // namespace

TEST_CASE("FCFS recursion equals the explicit max form")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng() % 8;
        std::vector<double> gaps(n), works(n);
        for (std::size_t i = 0; i < n; ++i) {
            gaps[i] = unit(rng);
            works[i] = unit(rng) * 2.0;
        }
        const auto resp = fcfs_response_times(gaps, works, 1.0);
        for (std::size_t m = 1; m <= n; ++m) {
            double best = -1e300;
            for (std::size_t k = 1; k <= m; ++k) {
                double v = 0.0;
                for (std::size_t i = k; i <= m; ++i) v += works[i - 1];
                for (std::size_t i = k + 1; i <= m; ++i) v -= gaps[i - 1];
                best = std::max(best, v);
            }
            CHECK(resp[m - 1] == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("single-job horizon collapses to the boundary work")
{
    const auto t = build_extremal(1, 1.0, 2.0, 0.3, 0.7);
    REQUIRE(t.works.size() == 1);
    CHECK(t.works[0] == doctest::Approx(0.5 + 0.7).epsilon(1e-15));
    CHECK(t.worst_value == doctest::Approx(0.5 + 0.7).epsilon(1e-15));
}

TEST_CASE("extremal gaps: suffix constraints are tight from the second job on")
{
    const std::size_t n = 6;
    const double lambda = 1.3, ga = 0.5;
    const auto t = build_extremal(n, lambda, 2.6, ga, 0.4);
    CHECK(check_membership_arrival(t.gaps, gap_params(lambda, ga)).inside);

    for (std::size_t k = 2; k <= n; ++k) {
        double sum = 0.0;
        for (std::size_t i = k; i <= n; ++i) sum += t.gaps[i - 1];
        const double m = double(n - k + 1);
        const double slack = sum - (m / lambda - ga * std::sqrt(m));
        CHECK(std::abs(slack) < 1e-9);
    }
}

TEST_CASE("extremal works: both families tight at the binding index")
{
    const std::size_t n = 6;
    const double lambda = 1.0, mu = 1.4, ga = 0.4, gs = 0.6;
    const auto t = build_extremal(n, lambda, mu, ga, gs);
    CHECK(check_membership_workload(t.works, work_params(mu, gs)).inside);

    const std::size_t k = t.argmax_k;
    double full = 0.0, short_sum = 0.0;
    for (std::size_t i = k; i <= n; ++i) full += t.works[i - 1];
    for (std::size_t i = k; i + 1 <= n; ++i) short_sum += t.works[i - 1];
    const double lf = double(n - k + 1);
    const double ls = double(n - k);
    CHECK(std::abs(full - (lf / mu + gs * std::sqrt(lf))) < 1e-9);
    if (k < n) {
        CHECK(std::abs(short_sum - (ls / mu + gs * std::sqrt(ls))) < 1e-9);
    }
}

TEST_CASE("the first gap has no influence on the achieved value")
{
    const auto t = build_extremal(5, 1.0, 1.5, 0.5, 0.5);
    const double base = coupled_worst_objective(t.gaps, t.works);
    for (double first : {0.0, 0.3, 10.0}) {
        auto gaps = t.gaps;
        gaps[0] = first;
        CHECK(coupled_worst_objective(gaps, t.works) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("negative gap construction is rejected")
{
    // gamma_a large enough that the final-step decrement exceeds the mean gap
    CHECK_THROWS_AS(build_extremal(4, 2.0, 4.0, 1.0, 0.1), ConstructionError);
}

TEST_CASE("published work formulas: identity below the horizon edge, then infeasible")
{
    const double mu = 1.3, gs = 0.7;
    for (std::size_t n : {2, 3, 4, 5, 6}) {
        const auto printed = printed_extremal_works(n, mu, gs);
        for (std::size_t k = 1; k + 1 <= n; ++k) {
            CHECK(two_sum(printed, k) ==
                  doctest::Approx(two_sum_target(n, k, mu, gs)).epsilon(1e-12));
        }
        const bool inside = check_membership_workload(printed, work_params(mu, gs)).inside;
        if (n <= 2) {
            CHECK(inside);
        } else {
            // the printed closed forms overfill the short-sum constraint at
            // k = n-1 once n >= 3; the corrected construction is used instead
            CHECK_FALSE(inside);
        }
    }
}

TEST_CASE("zero-variability worst case is the deterministic backlog")
{
    const std::size_t n = 5;
    const double lambda = 2.0, mu = 2.5;
    const auto w = finite_horizon_worst(n, lambda, mu, 0.0, 0.0);
    double expect = -1e300;
    for (std::size_t k = 1; k <= n; ++k) {
        expect = std::max(expect, 1.0 / mu + 2.0 * double(n - k) * (1.0 / mu - 1.0 / lambda));
    }
    CHECK(w.value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("worst-case chain on random draws")
{
    std::mt19937_64 rng(500);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        const double lambda = 0.5 + 2.5 * unit(rng);
        const double rho = 0.1 + 0.85 * unit(rng);
        const double mu = lambda / rho;
        const double ga = std::min(0.99 / lambda, (0.05 + 1.45 * unit(rng)) / lambda);
        const double gs = (0.05 + 1.45 * unit(rng)) / mu;

        const auto worst = finite_horizon_worst(n, lambda, mu, ga, gs);
        const auto trace = build_extremal(n, lambda, mu, ga, gs);
        const double achieved = coupled_worst_objective(trace.gaps, trace.works);
        CHECK(achieved ==
              doctest::Approx(worst.value).epsilon(1e-9));

        const double brute = brute_force_worst_fcfs(n, lambda, mu, ga, gs, 9);
        CHECK(brute <= worst.value + 1e-9);
        CHECK(worst.value <= response_bound_infinite(lambda, mu, ga, gs) + 1e-9);

        // exact extreme-point evaluation at small horizons
        if (n <= 4) {
            CHECK(brute == doctest::Approx(worst.value).epsilon(1e-9));
        }
    }
}

TEST_CASE("grid oracle approaches the analytic value at coarse tolerance")
{
    const std::size_t n = 5;
    const double lambda = 1.0, mu = 1.6, ga = 0.4, gs = 0.5;
    const auto worst = finite_horizon_worst(n, lambda, mu, ga, gs);
    const double xmax = 1.0 / mu + gs * std::sqrt(double(n));
    const std::size_t res = 17;
    const double brute = brute_force_worst_fcfs(n, lambda, mu, ga, gs, res);
    CHECK(brute <= worst.value + 1e-9);
    const double spacing = xmax / double(res - 1);
    CHECK(worst.value - brute <= 2.0 * double(n) * spacing);
}

TEST_CASE("resource guard rejects oversized grids")
{
    CHECK_THROWS_AS(brute_force_worst_fcfs(7, 1.0, 2.0, 0.1, 0.1, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(brute_force_worst_fcfs(6, 1.0, 2.0, 0.1, 0.1, 100),
                    std::invalid_argument);
}
