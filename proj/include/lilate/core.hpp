#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lilate {

enum class ComplianceType { complier, always_taker, never_taker, defier };

std::string_view to_string(ComplianceType t);
std::optional<ComplianceType> compliance_from_string(std::string_view s);

// One unit. `y` is absent exactly when r == 0; d, z, r are kept as ints so
// that out-of-range values read from files can be reported by validate().
struct Observation {
    std::optional<double> y;
    int d = 0;
    int z = 0;
    int r = 0;
    std::vector<double> x;
    std::optional<ComplianceType> t;  // simulated data only
};

struct Dataset {
    std::vector<Observation> observations;
    std::vector<std::string> covariate_names;

    std::size_t size() const { return observations.size(); }
    std::size_t num_covariates() const { return covariate_names.size(); }
};

// Threshold typing of the first stage D = 1(beta0 + Z*beta1 >= V).
// complier iff beta0 < v <= beta0 + beta1, always-taker iff v <= beta0,
// never-taker iff v > beta0 + beta1. Throws Error("first_stage_sign") when
// beta1 <= 0.
ComplianceType classify_compliance(double v, double beta0, double beta1);

struct Violation {
    std::optional<std::size_t> row;  // absent for dataset-level violations
    std::string invariant;
    std::string message;
};

std::vector<Violation> validate(const Dataset& dataset);

// Throws Error("invalid_data") summarizing the first violations.
void require_valid(const Dataset& dataset);

struct MomentSummary {
    std::size_t n = 0;
    std::optional<double> mean;
    std::optional<double> sd;  // n-1 denominator; absent when n < 2
};

struct DescribeRow {
    std::string variable;
    MomentSummary total;
    MomentSummary respondents;     // r = 1
    MomentSummary nonrespondents;  // r = 0
};

struct DescribeTable {
    std::size_t n_total = 0;
    std::size_t n_respondents = 0;
    std::size_t n_nonrespondents = 0;
    std::vector<DescribeRow> rows;  // covariates in order, then d, then z
};

DescribeTable describe(const Dataset& dataset);

}  // namespace lilate
