#pragma once

// Test-only reference computations. Nothing here calls into the library's
// numerical paths, so these stay independent of what they check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "lilate/core.hpp"

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 20000) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Bernoulli log-likelihood minus ridge/2*||beta||^2, row-major design without
// the intercept column.
inline double logistic_objective(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                                 const std::vector<double>& beta, double ridge) {
    double ll = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double eta = beta[0];
        for (std::size_t j = 0; j < rows[i].size(); ++j) eta += beta[j + 1] * rows[i][j];
        // log sigma(eta) and log(1 - sigma(eta)) written out directly
        const double log_p = -std::log1p(std::exp(-eta));
        const double log_q = -std::log1p(std::exp(eta));
        ll += y[i] ? log_p : log_q;
    }
    double pen = 0.0;
    for (double b : beta) pen += b * b;
    return ll - 0.5 * ridge * pen;
}

inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> at, double h = 1e-5) {
    std::vector<double> g(at.size());
    for (std::size_t j = 0; j < at.size(); ++j) {
        const double keep = at[j];
        at[j] = keep + h;
        const double up = f(at);
        at[j] = keep - h;
        const double down = f(at);
        at[j] = keep;
        g[j] = (up - down) / (2.0 * h);
    }
    return g;
}

// Plain respondent-only Wald ratio computed row by row.
inline double wald(const lilate::Dataset& ds) {
    double n[2] = {0, 0}, sy[2] = {0, 0}, sd[2] = {0, 0};
    for (const auto& o : ds.observations) {
        if (o.r != 1) continue;
        n[o.z] += 1;
        sy[o.z] += *o.y;
        sd[o.z] += o.d;
    }
    return (sy[1] / n[1] - sy[0] / n[0]) / (sd[1] / n[1] - sd[0] / n[0]);
}

// Random dataset with full response, no covariates, and a guaranteed
// first stage (compliers present in both arms).
inline lilate::Dataset random_full_response(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> norm(0.0, 1.0);
    lilate::Dataset ds;
    const double pa = 0.1 + 0.3 * unif(rng);
    const double pn = 0.1 + 0.3 * unif(rng);
    const double shift = 3.0 * norm(rng);
    for (std::size_t i = 0; i < n; ++i) {
        lilate::Observation o;
        o.z = i % 2 == 0 ? 1 : (unif(rng) < 0.5);
        const double u = unif(rng);
        o.d = u < pa ? 1 : (u < pa + pn ? 0 : o.z);
        o.r = 1;
        o.y = shift + 0.7 * o.d + norm(rng);
        ds.observations.push_back(o);
    }
    // pin all four (z,d) cells
    ds.observations[0].z = 1; ds.observations[0].d = 1;
    ds.observations[1].z = 0; ds.observations[1].d = 0;
    ds.observations[2].z = 1; ds.observations[2].d = 0;
    ds.observations[3].z = 0; ds.observations[3].d = 1;
    return ds;
}

}  // namespace oracle
