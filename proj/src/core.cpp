#include "lilate/core.hpp"

#include <cmath>
#include <sstream>

#include "lilate/error.hpp"

namespace lilate {

std::string_view to_string(ComplianceType t) {
    switch (t) {
        case ComplianceType::complier: return "complier";
        case ComplianceType::always_taker: return "always_taker";
        case ComplianceType::never_taker: return "never_taker";
        case ComplianceType::defier: return "defier";
    }
    return "unknown";
}

std::optional<ComplianceType> compliance_from_string(std::string_view s) {
    if (s == "complier" || s == "c") return ComplianceType::complier;
    if (s == "always_taker" || s == "a") return ComplianceType::always_taker;
    if (s == "never_taker" || s == "n") return ComplianceType::never_taker;
    if (s == "defier" || s == "d") return ComplianceType::defier;
    return std::nullopt;
}

ComplianceType classify_compliance(double v, double beta0, double beta1) {
    if (!(beta1 > 0.0)) {
        throw Error("first_stage_sign",
                    "first-stage sign: classification requires beta1 > 0");
    }
    if (v <= beta0) return ComplianceType::always_taker;
    if (v <= beta0 + beta1) return ComplianceType::complier;
    return ComplianceType::never_taker;
}

namespace {

bool is_binary(int v) { return v == 0 || v == 1; }

}  // namespace

std::vector<Violation> validate(const Dataset& dataset) {
    std::vector<Violation> out;
    const std::size_t k = dataset.covariate_names.size();
    bool any_z0 = false;
    bool any_z1 = false;

    for (std::size_t i = 0; i < dataset.observations.size(); ++i) {
        const Observation& o = dataset.observations[i];
        auto add = [&](std::string inv, std::string msg) {
            out.push_back({i, std::move(inv), std::move(msg)});
        };
        if (!is_binary(o.d)) add("binary_d", "d must be 0 or 1");
        if (!is_binary(o.z)) add("binary_z", "z must be 0 or 1");
        if (!is_binary(o.r)) add("binary_r", "r must be 0 or 1");
        if (o.r == 1 && !o.y) add("y_iff_r", "outcome missing for a respondent (r=1)");
        if (o.r == 0 && o.y) add("y_iff_r", "outcome present for a nonrespondent (r=0)");
        if (o.y && !std::isfinite(*o.y)) add("finite_y", "outcome is not finite");
        if (o.x.size() != k) {
            std::ostringstream msg;
            msg << "covariate dimension " << o.x.size() << " != " << k;
            add("covariate_dim", msg.str());
        } else {
            for (double xv : o.x) {
                if (!std::isfinite(xv)) {
                    add("finite_x", "covariate value is not finite");
                    break;
                }
            }
        }
        if (o.t) {
            switch (*o.t) {
                case ComplianceType::complier:
                    if (o.d != o.z) add("type_consistency", "complier with d != z");
                    break;
                case ComplianceType::always_taker:
                    if (o.d != 1) add("type_consistency", "always-taker with d != 1");
                    break;
                case ComplianceType::never_taker:
                    if (o.d != 0) add("type_consistency", "never-taker with d != 0");
                    break;
                case ComplianceType::defier:
                    if (o.d != 1 - o.z) add("type_consistency", "defier with d != 1-z");
                    break;
            }
        }
        any_z0 = any_z0 || o.z == 0;
        any_z1 = any_z1 || o.z == 1;
    }
    if (!any_z0 || !any_z1) {
        out.push_back({std::nullopt, "degenerate_instrument",
                       "degenerate instrument: need rows with both z=0 and z=1"});
    }
    return out;
}

void require_valid(const Dataset& dataset) {
    const auto violations = validate(dataset);
    if (violations.empty()) return;
    std::ostringstream msg;
    msg << violations.size() << " data violation(s):";
    const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
    for (std::size_t i = 0; i < shown; ++i) {
        const auto& v = violations[i];
        msg << (i ? "; " : " ");
        if (v.row) msg << "row " << *v.row << ": ";
        msg << v.message;
    }
    throw Error("invalid_data", msg.str());
}

namespace {

MomentSummary summarize(const std::vector<double>& values) {
    MomentSummary s;
    s.n = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    s.mean = mean;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

}  // namespace

DescribeTable describe(const Dataset& dataset) {
    require_valid(dataset);
    DescribeTable table;
    const std::size_t k = dataset.num_covariates();
    std::vector<std::string> names = dataset.covariate_names;
    names.emplace_back("d");
    names.emplace_back("z");

    for (const auto& o : dataset.observations) {
        ++table.n_total;
        if (o.r == 1) ++table.n_respondents; else ++table.n_nonrespondents;
    }

    for (std::size_t j = 0; j < names.size(); ++j) {
        std::vector<double> all, resp, nonresp;
        all.reserve(dataset.size());
        for (const auto& o : dataset.observations) {
            const double v = j < k ? o.x[j] : (j == k ? o.d : o.z);
            all.push_back(v);
            (o.r == 1 ? resp : nonresp).push_back(v);
        }
        table.rows.push_back({names[j], summarize(all), summarize(resp), summarize(nonresp)});
    }
    return table;
}

}  // namespace lilate
