#include "lilate/inference.hpp"

#include <algorithm>
#include <cmath>

#include "lilate/error.hpp"
#include "lilate/parallel.hpp"
#include "lilate/random.hpp"

namespace lilate::inference {

double quantile_p_value(std::span<const double> estimates, std::size_t replicates) {
    const std::size_t b = replicates ? replicates : estimates.size();
    if (estimates.empty() || b == 0) return 1.0;
    std::size_t at_or_below = 0, at_or_above = 0;
    for (double e : estimates) {
        at_or_below += e <= 0.0;
        at_or_above += e >= 0.0;
    }
    const double m = static_cast<double>(estimates.size());
    const double p = 2.0 * std::min(at_or_below / m, at_or_above / m);
    return std::clamp(p, 1.0 / static_cast<double>(b), 1.0);
}

namespace {

Dataset resample(const Dataset& dataset, Rng& rng) {
    Dataset out;
    out.covariate_names = dataset.covariate_names;
    const std::size_t n = dataset.size();
    out.observations.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.observations.push_back(dataset.observations[rng.index(n)]);
    return out;
}

std::string failure_code(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return err->code();
    return "exception";
}

}  // namespace

BootstrapResult bootstrap(const Dataset& dataset, estimators::EstimatorId id, const BootstrapOptions& options) {
    if (options.replicates < kMinBootstrapReplicates) {
        throw Error("invalid_argument", "bootstrap needs at least 99 replicates");
    }
    if (id == estimators::EstimatorId::oracle) {
        throw Error("oracle_requires_latent", "the oracle estimator cannot be bootstrapped from observed data");
    }
    BootstrapResult result;
    result.id = id;
    result.seed = options.seed;
    result.replicates = options.replicates;
    result.point = estimators::estimate(dataset, id, options.estimator).point;

    std::vector<std::optional<double>> estimates(options.replicates);
    std::vector<std::string> failures(options.replicates);
    parallel_for(options.replicates, options.threads, [&](std::size_t r) {
        Rng rng(options.seed, r);
        try {
            const Dataset sample = resample(dataset, rng);
            estimates[r] = estimators::estimate(sample, id, options.estimator).point;
        } catch (const std::exception& e) {
            failures[r] = failure_code(e);
        }
    });

    std::vector<double> ok;
    ok.reserve(options.replicates);
    for (std::size_t r = 0; r < options.replicates; ++r) {
        if (estimates[r]) ok.push_back(*estimates[r]);
        else ++result.failure_reasons[failures[r]];
    }
    result.failed_replicates = options.replicates - ok.size();
    result.valid = result.failed_replicates * 10 < options.replicates;

    if (ok.size() >= 2) {
        double mean = 0.0;
        for (double e : ok) mean += e;
        mean /= static_cast<double>(ok.size());
        double ss = 0.0;
        for (double e : ok) ss += (e - mean) * (e - mean);
        result.standard_error = std::sqrt(ss / static_cast<double>(ok.size() - 1));
    }
    result.p_value = quantile_p_value(ok, options.replicates);
    result.replicate_estimates = std::move(estimates);
    return result;
}

EstimatorSummary summarize(estimators::EstimatorId id, std::span<const std::optional<double>> estimates,
                           double truth) {
    EstimatorSummary s;
    s.id = id;
    double sum = 0.0;
    for (const auto& e : estimates) {
        if (!e) {
            ++s.failures;
            continue;
        }
        ++s.replications;
        sum += *e;
    }
    if (s.replications == 0) return s;
    const double m = static_cast<double>(s.replications);
    s.mean_estimate = sum / m;
    double bias_sum = 0.0;
    for (const auto& e : estimates) {
        if (e) bias_sum += *e - truth;
    }
    s.mean_bias = bias_sum / m;
    double ss = 0.0;
    for (const auto& e : estimates) {
        if (e) ss += (*e - s.mean_estimate) * (*e - s.mean_estimate);
    }
    // RMSE^2 = bias^2 + population variance, so RMSE >= |bias| holds exactly.
    s.rmse = std::sqrt(s.mean_bias * s.mean_bias + ss / m);
    s.mc_standard_error = s.replications > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
    return s;
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t rep) {
    return splitmix64(splitmix64(seed) + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(rep) + 1));
}

MonteCarloReport monte_carlo(const dgp::ParametricDgpConfig& config,
                             std::span<const estimators::EstimatorId> estimators,
                             const MonteCarloOptions& options) {
    if (options.reps < 10) throw Error("invalid_argument", "monte_carlo needs reps >= 10");
    if (estimators.empty()) throw Error("invalid_argument", "monte_carlo needs at least one estimator");

    MonteCarloReport report;
    report.dgp = config;
    report.dgp.n = options.n;
    report.dgp.seed = options.seed;
    dgp::validate_config(report.dgp);
    report.truth = dgp::true_late(report.dgp);
    report.reps = options.reps;
    report.n = options.n;
    report.seed = options.seed;

    const std::size_t m = estimators.size();
    report.estimates.assign(m, std::vector<std::optional<double>>(options.reps));
    report.failures.assign(m, std::vector<std::string>(options.reps));

    parallel_for(options.reps, options.threads, [&](std::size_t rep) {
        dgp::ParametricDgpConfig draw = report.dgp;
        draw.seed = replication_seed(options.seed, rep);
        const dgp::SimulatedDataset sample = dgp::simulate(draw);
        for (std::size_t e = 0; e < m; ++e) {
            try {
                report.estimates[e][rep] = estimators::estimate(sample, estimators[e], options.estimator).point;
            } catch (const std::exception& ex) {
                report.failures[e][rep] = failure_code(ex);
            }
        }
    });

    for (std::size_t e = 0; e < m; ++e) {
        EstimatorSummary s = summarize(estimators[e], report.estimates[e], report.truth);
        for (const auto& f : report.failures[e]) {
            if (!f.empty()) ++s.failure_reasons[f];
        }
        report.summaries.push_back(std::move(s));
    }
    return report;
}

}  // namespace lilate::inference
