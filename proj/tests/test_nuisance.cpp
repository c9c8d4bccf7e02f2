#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lilate/dgp.hpp"
#include "lilate/error.hpp"
#include "lilate/nuisance.hpp"
#include "oracles.hpp"

using namespace lilate;
using namespace lilate::nuisance;

namespace {

struct Design {
    ColumnMatrix x;
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    std::vector<std::string> names;
};

Design random_design(std::mt19937_64& rng, std::size_t n, std::size_t k, double signal) {
    std::normal_distribution<double> norm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Design d;
    d.x = ColumnMatrix(n, k);
    std::vector<double> beta(k + 1);
    for (auto& b : beta) b = signal * norm(rng);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(k);
        double eta = beta[0];
        for (std::size_t j = 0; j < k; ++j) {
            row[j] = norm(rng);
            d.x(i, j) = row[j];
            eta += beta[j + 1] * row[j];
        }
        d.rows.push_back(row);
        d.y.push_back(unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0);
    }
    for (std::size_t j = 0; j < k; ++j) d.names.push_back("x" + std::to_string(j + 1));
    return d;
}

}  // namespace

TEST_CASE("intercept-only fit reproduces the label mean") {
    std::vector<int> y(100, 0);
    for (int i = 0; i < 64; ++i) y[i] = 1;
    const ColumnMatrix x(100, 0);
    const auto m = fit_logistic(x, y, {});
    CHECK(m.converged);
    CHECK(m.predict({}) == doctest::Approx(0.64).epsilon(1e-10));
    CHECK(m.coefficients[0] == doctest::Approx(std::log(0.64 / 0.36)).epsilon(1e-10));
}

TEST_CASE("score matches a finite-difference gradient of an independent log-likelihood") {
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> norm(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 1 + trial % 4;
        const double ridge = trial % 3 == 0 ? 0.0 : 0.1 * (trial % 5);
        auto d = random_design(rng, 60 + 7 * trial, k, 0.8);
        std::vector<double> at(k + 1);
        for (auto& b : at) b = 0.5 * norm(rng);
        auto f = [&](const std::vector<double>& b) { return oracle::logistic_objective(d.rows, d.y, b, ridge); };
        const auto fd = oracle::central_difference(f, at);
        const auto score = penalized_score(d.x, d.y, at, ridge);
        CHECK(penalized_loglik(d.x, d.y, at, ridge) == doctest::Approx(f(at)).epsilon(1e-12));
        for (std::size_t j = 0; j <= k; ++j) {
            CHECK(std::abs(score[j] - fd[j]) <= 1e-5 * std::max(1.0, std::abs(fd[j])));
        }
        // at the fitted optimum the same oracle gradient vanishes
        LogisticOptions opts;
        opts.ridge = ridge;
        const auto m = fit_logistic(d.x, d.y, d.names, opts);
        REQUIRE(m.converged);
        const auto fd_opt = oracle::central_difference(f, m.coefficients);
        for (double g : fd_opt) CHECK(std::abs(g) < 1e-5);
    }
}

TEST_CASE("the objective trace is non-decreasing") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        auto d = random_design(rng, 200, 3, 1.5);
        const auto m = fit_logistic(d.x, d.y, d.names);
        REQUIRE(m.objective_trace.size() >= 1);
        for (std::size_t t = 1; t < m.objective_trace.size(); ++t) {
            // equal up to rounding of the objective itself
            const double slack = 8.0 * 2.220446049250313e-16 * std::abs(m.objective_trace[t - 1]);
            CHECK(m.objective_trace[t] >= m.objective_trace[t - 1] - slack);
        }
        CHECK(m.iterations + 1 == static_cast<int>(m.objective_trace.size()));
    }
}

TEST_CASE("single-class labels: diagnostic without ridge, finite fit with ridge") {
    std::vector<int> y(50, 1);
    ColumnMatrix x(50, 1);
    for (std::size_t i = 0; i < 50; ++i) x(i, 0) = static_cast<double>(i) / 10.0;
    const std::vector<std::string> names = {"a"};
    const auto bare = fit_logistic(x, y, names);
    CHECK_FALSE(bare.converged);
    CHECK(bare.diagnostic.find("single class") != std::string::npos);

    LogisticOptions opts;
    opts.ridge = 1.0;
    const auto m = fit_logistic(x, y, names, opts);
    CHECK(m.converged);
    for (double c : m.coefficients) CHECK(std::isfinite(c));
    const double p = m.predict(std::vector<double>{1.0});
    CHECK(p > 0.0);
    CHECK(p < 1.0);
}

TEST_CASE("perfect separation is reported, not looped on") {
    ColumnMatrix x(40, 1);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        x(i, 0) = static_cast<double>(i) - 19.5;
        y[i] = x(i, 0) > 0.0;
    }
    const std::vector<std::string> names = {"a"};
    const auto m = fit_logistic(x, y, names);
    CHECK_FALSE(m.converged);
    CHECK(m.diagnostic.find("separation") != std::string::npos);
    CHECK(m.iterations < 100);
}

TEST_CASE("rank-deficient design names the collinear column") {
    std::mt19937_64 rng(3);
    auto d = random_design(rng, 100, 2, 0.5);
    d.x.append_copy_of(1);
    d.names.push_back("x2_copy");
    try {
        fit_logistic(d.x, d.y, d.names);
        FAIL("expected rank_deficient");
    } catch (const Error& e) {
        CHECK(e.code() == "rank_deficient");
        CHECK(std::string(e.what()).find("x2_copy") != std::string::npos);
    }
}

TEST_CASE("a duplicated column leaves ridge-stabilized predictions unchanged") {
    std::mt19937_64 rng(4);
    auto d = random_design(rng, 500, 2, 0.7);
    LogisticOptions opts;
    opts.ridge = 1e-6;
    const auto base = fit_logistic(d.x, d.y, d.names, opts);
    auto dup = d;
    dup.x.append_copy_of(0);
    dup.names.push_back("x1_copy");
    const auto wide = fit_logistic(dup.x, dup.y, dup.names, opts);
    REQUIRE(base.converged);
    REQUIRE(wide.converged);
    for (std::size_t i = 0; i < 500; ++i) {
        const auto r = d.x.row(i);
        const auto rw = dup.x.row(i);
        CHECK(std::abs(base.predict(r) - wide.predict(rw)) < 1e-5);
    }
}

TEST_CASE("predict checks dimensions and stays inside the unit interval") {
    LogisticModel m;
    m.coefficients = {0.0, 0.0};
    CHECK(m.predict(std::vector<double>{3.0}) == 0.5);
    CHECK_THROWS_AS(m.predict(std::vector<double>{}), Error);
    m.coefficients = {800.0, 0.0};
    const double p = m.predict(std::vector<double>{0.0});
    CHECK(p < 1.0);
    NuisanceFits fits;
    CHECK(fits.trim(p).value == 0.99);
    CHECK(fits.trim(p).trimmed);
    CHECK(fits.trim(1e-9).value == 0.01);
    CHECK_FALSE(fits.trim(0.4).trimmed);
}

TEST_CASE("fitted treatment propensities are calibrated against the known index") {
    dgp::ParametricDgpConfig c;
    c.errors = dgp::ComplierShiftErrors{0.4, 1.0};
    c.gamma0 = 0.3;
    c.gamma1 = 0.5;
    c.alpha_x = {0.2, 0.0};
    c.beta_x = {0.5, -0.3};
    c.gamma_x = {0.1, 0.4};
    c.n = 100000;
    c.seed = 8;
    const auto s = dgp::simulate(c);
    const auto fits = fit_all(s.dataset, NuisanceOptions{});
    double err0 = 0.0, err1 = 0.0;
    const std::size_t n = s.dataset.size();
    for (const auto& o : s.dataset.observations) {
        const double index = c.beta0 + 0.5 * o.x[0] - 0.3 * o.x[1];
        err0 += std::abs(fits.p_d_given_z0.predict(o.x) - oracle::normal_cdf(index));
        err1 += std::abs(fits.p_d_given_z1.predict(o.x) - oracle::normal_cdf(index + c.beta1));
    }
    CHECK(err0 / n < 0.02);
    CHECK(err1 / n < 0.02);
    CHECK(fits.p_z.predict(std::vector<double>{0.0, 0.0}) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("fit_all: models are fitted on their own subsamples") {
    std::mt19937_64 rng(21);
    Dataset ds;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 4000; ++i) {
        Observation o;
        o.z = unif(rng) < 0.4;
        o.d = unif(rng) < (o.z ? 0.7 : 0.2);
        o.r = unif(rng) < 0.3 + 0.2 * o.z + 0.3 * o.d;
        if (o.r) o.y = unif(rng);
        ds.observations.push_back(o);
    }
    double nz = 0, n1 = 0, d1 = 0, n10 = 0, r10 = 0;
    for (const auto& o : ds.observations) {
        nz += o.z;
        if (o.z == 1) {
            n1 += 1;
            d1 += o.d;
            if (o.d == 0) {
                n10 += 1;
                r10 += o.r;
            }
        }
    }
    const auto fits = fit_all(ds, NuisanceOptions{});
    CHECK(fits.p_z.predict({}) == doctest::Approx(nz / 4000).epsilon(1e-9));
    CHECK(fits.p_d_given_z1.predict({}) == doctest::Approx(d1 / n1).epsilon(1e-9));
    CHECK(fits.response(1, 0, {}).value == doctest::Approx(r10 / n10).epsilon(1e-9));
}

TEST_CASE("fit_all: an empty (z,d) cell is an error naming the cell") {
    Dataset ds;
    for (int i = 0; i < 40; ++i) {
        Observation o;
        o.z = i % 2;
        o.d = o.z;  // no (0,1) and no (1,0) rows
        o.r = i % 3 != 0;
        if (o.r) o.y = 1.0;
        ds.observations.push_back(o);
    }
    try {
        fit_all(ds, NuisanceOptions{});
        FAIL("expected empty_cell");
    } catch (const Error& e) {
        CHECK(e.code() == "empty_cell");
        CHECK(std::string(e.what()).find("empty cell (0,1)") != std::string::npos);
    }
    const auto fits = fit_all(ds, NuisanceOptions{}, ResponseModels::nonempty_cells);
    CHECK(fits.has_response(0, 0));
    CHECK_FALSE(fits.has_response(0, 1));
    CHECK_THROWS_AS(fits.response(0, 1, {}), Error);
}

TEST_CASE("fit_all: single-class response cells fall back to the ridge and stay trimmed") {
    Dataset ds;
    ds.covariate_names = {"a"};
    std::mt19937_64 rng(2);
    std::normal_distribution<double> norm(0.0, 1.0);
    for (int i = 0; i < 400; ++i) {
        Observation o;
        o.z = i % 2;
        o.d = (i / 2) % 2;
        o.r = 1;
        o.y = norm(rng);
        o.x = {norm(rng)};
        ds.observations.push_back(o);
    }
    const auto fits = fit_all(ds, NuisanceOptions{});
    for (int z = 0; z <= 1; ++z) {
        for (int d = 0; d <= 1; ++d) {
            CHECK(fits.q[z][d]->diagnostic.find("fallback ridge") != std::string::npos);
            for (double a : {-3.0, 0.0, 3.0}) {
                const auto p = fits.response(z, d, std::vector<double>{a});
                CHECK(p.value >= 0.01);
                CHECK(p.value <= 0.99);
            }
        }
    }
}
