#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lilate/error.hpp"
#include "lilate/kernels.hpp"

namespace lilate::detail {

namespace {

// In-place LDL'-free Cholesky; returns indices whose pivot collapsed. Those
// rows/columns are zeroed (pivot set to 1) so the factorization can proceed
// and report every offender at once.
std::vector<std::size_t> cholesky_inplace(std::vector<double>& a, std::size_t p, double rel_tol) {
    std::vector<std::size_t> bad;
    for (std::size_t j = 0; j < p; ++j) {
        const double diag = a[j * p + j];
        double s = diag;
        for (std::size_t k = 0; k < j; ++k) s -= a[j * p + k] * a[j * p + k];
        if (!(s > rel_tol * std::max(std::abs(diag), 1e-300)) || !(diag > 0.0)) {
            bad.push_back(j);
            for (std::size_t k = 0; k < j; ++k) a[j * p + k] = 0.0;
            a[j * p + j] = 1.0;
            for (std::size_t i = j + 1; i < p; ++i) a[i * p + j] = 0.0;
            continue;
        }
        const double l = std::sqrt(s);
        a[j * p + j] = l;
        for (std::size_t i = j + 1; i < p; ++i) {
            double t = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) t -= a[i * p + k] * a[j * p + k];
            a[i * p + j] = t / l;
        }
    }
    return bad;
}

}  // namespace

std::vector<std::size_t> collinear_columns(const std::vector<double>& gram, std::size_t p, double rel_tol) {
    std::vector<double> a = gram;
    return cholesky_inplace(a, p, rel_tol);
}

std::vector<double> solve_spd(std::vector<double> gram, std::vector<double> rhs,
                              std::span<const std::string> names, double rel_tol) {
    const std::size_t p = rhs.size();
    const auto bad = cholesky_inplace(gram, p, rel_tol);
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "rank-deficient design; collinear column(s):";
        for (std::size_t j : bad) msg << ' ' << (j < names.size() ? names[j] : "#" + std::to_string(j));
        throw Error("rank_deficient", msg.str());
    }
    for (std::size_t i = 0; i < p; ++i) {
        double t = rhs[i];
        for (std::size_t k = 0; k < i; ++k) t -= gram[i * p + k] * rhs[k];
        rhs[i] = t / gram[i * p + i];
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double t = rhs[ii];
        for (std::size_t k = ii + 1; k < p; ++k) t -= gram[k * p + ii] * rhs[k];
        rhs[ii] = t / gram[ii * p + ii];
    }
    return rhs;
}

std::vector<double> weighted_gram(const ColumnMatrix& x, std::span<const double> w) {
    const std::size_t n = x.rows();
    const std::size_t k = x.cols();
    const std::size_t p = k + 1;
    std::vector<double> ones;
    std::span<const double> weights = w;
    if (weights.empty()) {
        ones.assign(n, 1.0);
        weights = ones;
    }
    std::vector<double> g(p * p, 0.0);
    g[0] = kernels::sum(weights);
    for (std::size_t a = 0; a < k; ++a) {
        const double v = kernels::dot(weights, x.col(a));
        g[(a + 1) * p] = v;
        g[a + 1] = v;
        for (std::size_t b = 0; b <= a; ++b) {
            const double s = kernels::wdot(weights, x.col(a), x.col(b));
            g[(a + 1) * p + (b + 1)] = s;
            g[(b + 1) * p + (a + 1)] = s;
        }
    }
    return g;
}

std::vector<double> design_transpose_times(const ColumnMatrix& x, std::span<const double> v) {
    std::vector<double> out(x.cols() + 1);
    out[0] = kernels::sum(v);
    for (std::size_t j = 0; j < x.cols(); ++j) out[j + 1] = kernels::dot(x.col(j), v);
    return out;
}

void linear_index(const ColumnMatrix& x, std::span<const double> beta, std::span<double> out) {
    std::fill(out.begin(), out.end(), beta[0]);
    for (std::size_t j = 0; j < x.cols(); ++j) kernels::axpy(beta[j + 1], x.col(j), out);
}

std::vector<std::string> with_intercept(std::span<const std::string> names) {
    std::vector<std::string> out{"(intercept)"};
    out.insert(out.end(), names.begin(), names.end());
    return out;
}

}  // namespace lilate::detail
