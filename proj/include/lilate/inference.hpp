#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lilate/core.hpp"
#include "lilate/dgp.hpp"
#include "lilate/estimators.hpp"

namespace lilate::inference {

inline constexpr std::size_t kDefaultBootstrapReplicates = 1999;
inline constexpr std::size_t kMinBootstrapReplicates = 99;

struct BootstrapOptions {
    std::size_t replicates = kDefaultBootstrapReplicates;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 = all cores; the result does not depend on it
    estimators::EstimatorOptions estimator;
};

struct BootstrapResult {
    estimators::EstimatorId id = estimators::EstimatorId::wald;
    double point = 0.0;
    double standard_error = 0.0;
    double p_value = 1.0;
    std::size_t replicates = 0;
    std::size_t failed_replicates = 0;
    std::uint64_t seed = 0;
    bool valid = true;
    std::map<std::string, std::size_t> failure_reasons;  // error code -> count
    std::vector<std::optional<double>> replicate_estimates;  // by replicate index
};

// Two-sided sign-share p-value: 2 * min(share <= 0, share >= 0), clipped to
// [1/B, 1] where B is `replicates` (defaults to the number of estimates).
double quantile_p_value(std::span<const double> estimates, std::size_t replicates = 0);

// Full-pipeline nonparametric bootstrap: replicate r resamples n rows with
// Rng(seed, r), refits nuisances and reruns the estimator.
BootstrapResult bootstrap(const Dataset& dataset, estimators::EstimatorId id, const BootstrapOptions& options);

struct MonteCarloOptions {
    std::size_t reps = 200;
    std::size_t n = 20000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    estimators::EstimatorOptions estimator;
};

struct EstimatorSummary {
    estimators::EstimatorId id = estimators::EstimatorId::wald;
    double mean_estimate = 0.0;
    double mean_bias = 0.0;
    double rmse = 0.0;
    double mc_standard_error = 0.0;  // s.e. of the mean bias
    std::size_t replications = 0;    // successful ones
    std::size_t failures = 0;
    std::map<std::string, std::size_t> failure_reasons;
};

struct MonteCarloReport {
    dgp::ParametricDgpConfig dgp;
    double truth = 0.0;
    std::size_t reps = 0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::vector<EstimatorSummary> summaries;
    // estimates[e][rep]; absent where the estimator failed
    std::vector<std::vector<std::optional<double>>> estimates;
    std::vector<std::vector<std::string>> failures;  // error code or empty
};

// Moments of one estimator's per-replication estimates against `truth`.
EstimatorSummary summarize(estimators::EstimatorId id, std::span<const std::optional<double>> estimates,
                           double truth);

// Dataset seed used for Monte Carlo replication `rep`.
std::uint64_t replication_seed(std::uint64_t seed, std::size_t rep);

MonteCarloReport monte_carlo(const dgp::ParametricDgpConfig& config,
                             std::span<const estimators::EstimatorId> estimators,
                             const MonteCarloOptions& options);

}  // namespace lilate::inference
