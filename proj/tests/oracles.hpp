// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// Test-only oracles, independent of the implementation paths they check.

#ifndef RQFARM_TESTS_ORACLES_HPP
#define RQFARM_TESTS_ORACLES_HPP

#include <cmath>
#include <random>
#include <vector>

#include "rqfarm/model.hpp"
#include "rqfarm/normal.hpp"

namespace rqfarm::testing {

// Normal quantile by plain bisection on the erfc-based CDF; the production
// path uses a rational approximation instead.
inline double quantile_by_bisection(double p)
{
    double lo = -12.0, hi = 12.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (normal_cdf(mid) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// One draw of the geometric-weighted gap series sum_k T_k (1-p)^(k-1) that
// the thinning transform models; truncated once the weight is negligible.
template <class Rng>
double sample_thinned_gap_series(const DistributionSpec& gap, double p, Rng& rng)
{
    double weight = 1.0;
    double acc = 0.0;
    while (weight > 1e-9) {
        acc += weight * gap.sample(rng);
        weight *= 1.0 - p;
    }
    return acc;
}

struct MomentStats {
    double mean = 0.0;
    double variance = 0.0;
    double mean_se = 0.0;
    double variance_se = 0.0;
};

// Mean/variance with batch-means standard errors.
inline MomentStats batched_moments(const std::vector<double>& x, std::size_t batches = 50)
{
    const std::size_t n = x.size();
    const std::size_t per = n / batches;
    std::vector<double> bm(batches, 0.0), bv(batches, 0.0);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= double(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= double(n - 1);
    for (std::size_t b = 0; b < batches; ++b) {
        double m = 0.0;
        for (std::size_t i = b * per; i < (b + 1) * per; ++i) m += x[i];
        m /= double(per);
        double sv = 0.0;
        for (std::size_t i = b * per; i < (b + 1) * per; ++i) sv += (x[i] - m) * (x[i] - m);
        bm[b] = m;
        bv[b] = sv / double(per - 1);
    }
    auto se = [&](const std::vector<double>& v) {
        double m = 0.0;
        for (double e : v) m += e;
        m /= double(v.size());
        double ss = 0.0;
        for (double e : v) ss += (e - m) * (e - m);
        return std::sqrt(ss / double(v.size() - 1) / double(v.size()));
    };
    return {mean, var, se(bm), se(bv)};
}

} // namespace rqfarm::testing

#endif
