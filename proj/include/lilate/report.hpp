#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lilate/core.hpp"
#include "lilate/dgp.hpp"
#include "lilate/estimators.hpp"
#include "lilate/inference.hpp"
#include "lilate/nuisance.hpp"

namespace lilate::report {

using json = nlohmann::ordered_json;

json to_json(const nuisance::LogisticModel& model);
json to_json(const nuisance::NuisanceFits& fits);
json to_json(const estimators::EffectEstimate& estimate);
json to_json(const estimators::AssumptionReport& report);
json to_json(const inference::BootstrapResult& result, bool include_replicates = false);
json to_json(const inference::MonteCarloReport& report);
json to_json(const dgp::ParametricDgpConfig& config);
json to_json(const dgp::LiGapReport& report);
json to_json(const DescribeTable& table);

// One column of the effect table: point, bootstrap s.e., quantile p-value.
struct EffectColumn {
    estimators::EstimatorId id = estimators::EstimatorId::wald;
    double effect = 0.0;
    std::optional<double> standard_error;
    std::optional<double> p_value;
};

std::string effect_table(const std::vector<EffectColumn>& columns);
std::string describe_table(const DescribeTable& table);
std::string li_gap_table(const dgp::LiGapReport& report);
std::string montecarlo_table(const inference::MonteCarloReport& report);

// rep,<estimator>... with empty cells for failures.
void write_replications_csv(std::ostream& out, const inference::MonteCarloReport& report);
void write_replicates_csv(std::ostream& out, const inference::BootstrapResult& result);

}  // namespace lilate::report
