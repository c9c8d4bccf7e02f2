#include "lilate/dgp.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "lilate/error.hpp"
#include "lilate/random.hpp"

namespace lilate::dgp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double linear_term(std::span<const double> x, const std::vector<double>& loadings) {
    double s = 0.0;
    for (std::size_t j = 0; j < loadings.size() && j < x.size(); ++j) s += x[j] * loadings[j];
    return s;
}

// Draw order per row is fixed (z, x_1..x_k, e1, e2, e3) so that every
// generator consuming the same stream sees identical primitives.
struct BaseDraw {
    int z = 0;
    std::vector<double> x;
    double e1 = 0.0;
    double e2 = 0.0;
    double e3 = 0.0;
};

BaseDraw draw_base(Rng& rng, double pz, std::size_t k) {
    BaseDraw b;
    b.z = rng.bernoulli(pz) ? 1 : 0;
    b.x.resize(k);
    for (auto& xv : b.x) xv = rng.normal();
    b.e1 = rng.normal();
    b.e2 = rng.normal();
    b.e3 = rng.normal();
    return b;
}

// V is always e1, so complier status can be decided before U is formed.
LatentDraw map_errors(const ErrorStructure& errors, const BaseDraw& b, bool complier) {
    return std::visit(
        overloaded{
            [&](const IdenticalErrors&) { return LatentDraw{b.e1, b.e1, b.e1}; },
            [&](const CorrelatedErrors& c) {
                const double u = c.rho * b.e1 + std::sqrt(1.0 - c.rho * c.rho) * b.e2;
                const double w = c.delta1 * b.e1 + c.sigma_eps * b.e3;
                return LatentDraw{u, b.e1, w};
            },
            [&](const ComplierShiftErrors& c) {
                const double u = (complier ? c.pi : 0.0) + c.sigma_u * b.e3;
                return LatentDraw{u, b.e1, b.e2};
            },
        },
        errors);
}

void validate_errors(const ErrorStructure& errors) {
    std::visit(overloaded{
                   [](const IdenticalErrors&) {},
                   [](const CorrelatedErrors& c) {
                       if (!(std::abs(c.rho) < 1.0)) throw Error("invalid_config", "|rho| must be < 1");
                       if (!(c.sigma_eps >= 0.0)) throw Error("invalid_config", "sigma_eps must be >= 0");
                   },
                   [](const ComplierShiftErrors& c) {
                       if (!(c.sigma_u > 0.0)) throw Error("invalid_config", "sigma_u must be > 0");
                   },
               },
               errors);
}

std::vector<double> parse_params(std::string_view text, std::string_view selector) {
    std::vector<double> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        std::string_view item = text.substr(0, comma);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
        if (ec != std::errc() || ptr != item.data() + item.size() || item.empty()) {
            throw Error("unknown_selector", "bad parameter '" + std::string(item) + "' in selector '" +
                                                std::string(selector) + "'");
        }
        out.push_back(value);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

struct Selector {
    std::string_view name;
    std::vector<double> params;
};

Selector split_selector(std::string_view selector) {
    const auto colon = selector.find(':');
    Selector s{selector.substr(0, colon), {}};
    if (colon != std::string_view::npos) s.params = parse_params(selector.substr(colon + 1), selector);
    return s;
}

void expect_params(const Selector& s, std::size_t count, std::string_view selector) {
    if (s.params.size() != count) {
        std::ostringstream msg;
        msg << "selector '" << selector << "' expects " << count << " parameter(s)";
        throw Error("unknown_selector", msg.str());
    }
}

[[noreturn]] void unknown(std::string_view kind, std::string_view selector) {
    throw Error("unknown_selector",
                "unknown " + std::string(kind) + " selector '" + std::string(selector) + "'");
}

}  // namespace

std::string_view scenario_name(const ErrorStructure& errors) {
    return std::visit(overloaded{
                          [](const IdenticalErrors&) { return std::string_view("identical"); },
                          [](const CorrelatedErrors&) { return std::string_view("correlated"); },
                          [](const ComplierShiftErrors&) { return std::string_view("complier_shift"); },
                      },
                      errors);
}

void validate_config(const ParametricDgpConfig& config) {
    if (!(config.beta1 > 0.0)) throw Error("invalid_config", "beta1 must be > 0");
    if (!(config.pz > 0.0 && config.pz < 1.0)) throw Error("invalid_config", "pz must lie in (0,1)");
    if (config.n < 1) throw Error("invalid_config", "n must be >= 1");
    const std::size_t k = config.alpha_x.size();
    if (config.beta_x.size() != k || config.gamma_x.size() != k) {
        throw Error("invalid_config", "alpha_x, beta_x and gamma_x must have equal length");
    }
    validate_errors(config.errors);
}

double evaluate(const OutcomeFn& phi, int d, double u, std::span<const double> x) {
    return std::visit(overloaded{
                          [&](const LinearOutcome& f) {
                              return f.alpha0 + d * f.alpha1 + linear_term(x, f.alpha_x) + u;
                          },
                          [&](const LogLinearOutcome& f) { return std::exp(f.alpha0 + d * f.alpha1 + u); },
                      },
                      phi);
}

double individual_effect(const OutcomeFn& phi, double u, std::span<const double> x) {
    (void)x;
    return std::visit(overloaded{
                          [&](const LinearOutcome& f) { return f.alpha1; },
                          [&](const LogLinearOutcome& f) {
                              return std::exp(f.alpha0 + u) * std::expm1(f.alpha1);
                          },
                      },
                      phi);
}

double evaluate(const TreatmentFn& psi, int z, double v, std::span<const double> x) {
    return std::visit(overloaded{
                          [&](const ThresholdTreatment& f) {
                              return (f.beta0 + linear_term(x, f.beta_x) + f.beta1 * z) - v;
                          },
                      },
                      psi);
}

double evaluate(const ResponseFn& eta, int d, double w, std::span<const double> x) {
    return std::visit(overloaded{
                          [&](const ThresholdResponse& f) {
                              return (f.gamma0 + d * f.gamma1 + linear_term(x, f.gamma_x)) - w;
                          },
                          [](const AlwaysRespond&) { return 1.0; },
                      },
                      eta);
}

OutcomeFn parse_outcome(std::string_view selector) {
    const Selector s = split_selector(selector);
    if (s.name == "linear") {
        expect_params(s, 2, selector);
        return LinearOutcome{s.params[0], s.params[1], {}};
    }
    if (s.name == "loglinear") {
        expect_params(s, 2, selector);
        return LogLinearOutcome{s.params[0], s.params[1]};
    }
    unknown("outcome", selector);
}

TreatmentFn parse_treatment(std::string_view selector) {
    const Selector s = split_selector(selector);
    if (s.name == "threshold") {
        expect_params(s, 2, selector);
        if (!(s.params[1] > 0.0)) throw Error("first_stage_sign", "first-stage sign: beta1 must be > 0");
        return ThresholdTreatment{s.params[0], s.params[1], {}};
    }
    unknown("treatment", selector);
}

ResponseFn parse_response(std::string_view selector) {
    const Selector s = split_selector(selector);
    if (s.name == "threshold") {
        expect_params(s, 2, selector);
        return ThresholdResponse{s.params[0], s.params[1], {}};
    }
    if (s.name == "always") {
        expect_params(s, 0, selector);
        return AlwaysRespond{};
    }
    unknown("response", selector);
}

double SimulatedDataset::latent_outcome(std::size_t i) const {
    const Observation& o = dataset.observations[i];
    return evaluate(outcome, o.d, latent[i].u, o.x);
}

SimulatedDataset simulate(const ParametricDgpConfig& config) {
    validate_config(config);
    const std::size_t k = config.num_covariates();
    Rng rng(config.seed, 0);

    SimulatedDataset out;
    out.outcome = LinearOutcome{config.alpha0, config.alpha1, config.alpha_x};
    for (std::size_t j = 0; j < k; ++j) out.dataset.covariate_names.push_back("x" + std::to_string(j + 1));
    out.dataset.observations.reserve(config.n);
    out.latent.reserve(config.n);

    for (std::size_t i = 0; i < config.n; ++i) {
        BaseDraw b = draw_base(rng, config.pz, k);
        const double index0 = config.beta0 + linear_term(b.x, config.beta_x);
        const ComplianceType type = classify_compliance(b.e1, index0, config.beta1);
        const LatentDraw latent = map_errors(config.errors, b, type == ComplianceType::complier);

        Observation o;
        o.z = b.z;
        o.d = (index0 + config.beta1 * b.z >= latent.v) ? 1 : 0;
        o.r = (config.gamma0 + o.d * config.gamma1 + linear_term(b.x, config.gamma_x) >= latent.w) ? 1 : 0;
        if (o.r == 1) {
            o.y = config.alpha0 + o.d * config.alpha1 + linear_term(b.x, config.alpha_x) + latent.u;
        }
        o.t = type;
        o.x = std::move(b.x);
        out.dataset.observations.push_back(std::move(o));
        out.latent.push_back(latent);
    }
    return out;
}

SimulatedDataset simulate_nonparametric(const NonparametricSpec& spec) {
    if (!(spec.pz > 0.0 && spec.pz < 1.0)) throw Error("invalid_config", "pz must lie in (0,1)");
    if (spec.n < 1) throw Error("invalid_config", "n must be >= 1");
    validate_errors(spec.errors);
    Rng rng(spec.seed, 0);

    SimulatedDataset out;
    out.outcome = spec.outcome;
    for (std::size_t j = 0; j < spec.num_covariates; ++j) {
        out.dataset.covariate_names.push_back("x" + std::to_string(j + 1));
    }
    out.dataset.observations.reserve(spec.n);
    out.latent.reserve(spec.n);

    for (std::size_t i = 0; i < spec.n; ++i) {
        BaseDraw b = draw_base(rng, spec.pz, spec.num_covariates);
        const bool treated_if_z1 = evaluate(spec.treatment, 1, b.e1, b.x) >= 0.0;
        const bool treated_if_z0 = evaluate(spec.treatment, 0, b.e1, b.x) >= 0.0;
        ComplianceType type;
        if (treated_if_z1 && treated_if_z0) type = ComplianceType::always_taker;
        else if (!treated_if_z1 && !treated_if_z0) type = ComplianceType::never_taker;
        else if (treated_if_z1) type = ComplianceType::complier;
        else type = ComplianceType::defier;

        const LatentDraw latent = map_errors(spec.errors, b, type == ComplianceType::complier);
        Observation o;
        o.z = b.z;
        o.d = evaluate(spec.treatment, b.z, latent.v, b.x) >= 0.0 ? 1 : 0;
        o.r = evaluate(spec.response, o.d, latent.w, b.x) >= 0.0 ? 1 : 0;
        if (o.r == 1) o.y = evaluate(spec.outcome, o.d, latent.u, b.x);
        o.t = type;
        o.x = std::move(b.x);
        out.dataset.observations.push_back(std::move(o));
        out.latent.push_back(latent);
    }
    return out;
}

double true_late(const ParametricDgpConfig& config) {
    validate_config(config);
    return config.alpha1;
}

double MomentFunction::operator()(double y) const {
    switch (kind) {
        case Kind::identity: return y;
        case Kind::square: return y * y;
        case Kind::indicator: return y <= threshold ? 1.0 : 0.0;
    }
    return y;
}

std::string MomentFunction::id() const {
    switch (kind) {
        case Kind::identity: return "identity";
        case Kind::square: return "square";
        case Kind::indicator: {
            std::ostringstream s;
            s << "indicator:" << threshold;
            return s.str();
        }
    }
    return "identity";
}

MomentFunction parse_moment(std::string_view text) {
    if (text == "identity") return {MomentFunction::Kind::identity, 0.0};
    if (text == "square") return {MomentFunction::Kind::square, 0.0};
    const Selector s = split_selector(text);
    if (s.name == "indicator" && s.params.size() == 1) {
        return {MomentFunction::Kind::indicator, s.params[0]};
    }
    throw Error("unknown_selector", "unknown moment function '" + std::string(text) + "'");
}

const LiGapCell* LiGapReport::cell(int z, ComplianceType t) const {
    for (const auto& c : cells) {
        if (c.z == z && c.type == t) return &c;
    }
    return nullptr;
}

namespace {

struct Running {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

constexpr ComplianceType kCellTypes[] = {ComplianceType::complier, ComplianceType::always_taker,
                                         ComplianceType::never_taker};

std::size_t type_slot(ComplianceType t) {
    switch (t) {
        case ComplianceType::complier: return 0;
        case ComplianceType::always_taker: return 1;
        case ComplianceType::never_taker: return 2;
        case ComplianceType::defier: break;
    }
    return 3;
}

}  // namespace

LiGapReport li_gap(const SimulatedDataset& sample, std::span<const MomentFunction> moments) {
    const std::size_t m = moments.size();
    if (m == 0) throw Error("invalid_argument", "li_gap needs at least one moment function");

    struct Side {
        std::vector<Running> stats;
        std::optional<double> u_extreme;
    };
    struct Acc {
        Side resp;
        Side nonresp;
    };
    std::vector<Acc> acc(6);
    for (auto& a : acc) {
        a.resp.stats.resize(m);
        a.nonresp.stats.resize(m);
    }

    std::size_t defiers = 0;
    const auto& rows = sample.dataset.observations;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Observation& o = rows[i];
        if (!o.t) throw Error("invalid_argument", "li_gap needs compliance types on every row");
        const std::size_t slot = type_slot(*o.t);
        if (slot == 3) {
            ++defiers;
            continue;
        }
        Acc& a = acc[static_cast<std::size_t>(o.z) * 3 + slot];
        const double y = sample.latent_outcome(i);
        const double u = sample.latent[i].u;
        Side& side = o.r == 1 ? a.resp : a.nonresp;
        for (std::size_t f = 0; f < m; ++f) side.stats[f].add(moments[f](y));
        if (o.r == 1) side.u_extreme = side.u_extreme ? std::max(*side.u_extreme, u) : u;
        else side.u_extreme = side.u_extreme ? std::min(*side.u_extreme, u) : u;
    }

    LiGapReport report;
    report.n_mc = rows.size();
    for (const auto& f : moments) report.moment_functions.push_back(f.id());
    if (defiers > 0) report.flags.push_back(std::to_string(defiers) + " defier row(s) excluded");

    for (int z = 0; z <= 1; ++z) {
        for (ComplianceType t : kCellTypes) {
            const Acc& a = acc[static_cast<std::size_t>(z) * 3 + type_slot(t)];
            LiGapCell cell;
            cell.z = z;
            cell.type = t;
            cell.n_respondents = a.resp.stats[0].n;
            cell.n_nonrespondents = a.nonresp.stats[0].n;
            cell.max_respondent_u = a.resp.u_extreme;
            cell.min_nonrespondent_u = a.nonresp.u_extreme;
            if (cell.max_respondent_u && cell.min_nonrespondent_u) {
                cell.supports_disjoint = *cell.max_respondent_u <= *cell.min_nonrespondent_u;
            }
            for (std::size_t f = 0; f < m; ++f) {
                const Running& r1 = a.resp.stats[f];
                const Running& r0 = a.nonresp.stats[f];
                MomentGap g;
                g.moment = report.moment_functions[f];
                if (r1.n > 0) g.respondent_mean = r1.mean;
                if (r0.n > 0) g.nonrespondent_mean = r0.mean;
                if (r1.n > 0 && r0.n > 0) g.gap = r1.mean - r0.mean;
                if (r1.n > 1 && r0.n > 1) {
                    g.standard_error = std::sqrt(r1.variance() / static_cast<double>(r1.n) +
                                                 r0.variance() / static_cast<double>(r0.n));
                }
                cell.moments.push_back(std::move(g));
            }
            if (cell.n_respondents == 0 || cell.n_nonrespondents == 0) {
                std::ostringstream msg;
                msg << "cell z=" << z << "/" << to_string(t) << ": no "
                    << (cell.n_respondents == 0 ? "respondents" : "nonrespondents") << "; gap absent";
                report.flags.push_back(msg.str());
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

LiGapReport li_gap(const ParametricDgpConfig& config, std::span<const MomentFunction> moments,
                   std::size_t n_mc, std::uint64_t seed) {
    if (n_mc < kMinLiGapDraws) throw Error("invalid_argument", "li_gap requires n_mc >= 10000");
    ParametricDgpConfig draw = config;
    draw.n = n_mc;
    draw.seed = seed;
    LiGapReport report = li_gap(simulate(draw), moments);
    report.seed = seed;
    return report;
}

LiGapReport li_gap(const NonparametricSpec& spec, std::span<const MomentFunction> moments,
                   std::size_t n_mc, std::uint64_t seed) {
    if (n_mc < kMinLiGapDraws) throw Error("invalid_argument", "li_gap requires n_mc >= 10000");
    NonparametricSpec draw = spec;
    draw.n = n_mc;
    draw.seed = seed;
    LiGapReport report = li_gap(simulate_nonparametric(draw), moments);
    report.seed = seed;
    return report;
}

}  // namespace lilate::dgp
