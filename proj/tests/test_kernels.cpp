#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lilate/kernels.hpp"

namespace k = lilate::kernels;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> norm(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = norm(rng);
    return v;
}

// Reductions may reorder terms; bound the discrepancy by the sum of
// magnitudes, which is what reordering can perturb.
double reorder_bound(double abs_sum, std::size_t n) {
    return 4.0 * static_cast<double>(n + 1) * 1.1102230246251565e-16 * abs_sum + 1e-300;
}

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
    const auto tables = k::available_tables();
    REQUIRE_FALSE(tables.empty());
    CHECK(tables.front()->name == "scalar");
    CHECK(k::select("scalar"));
    CHECK(k::active().name == "scalar");
    CHECK_FALSE(k::select("no-such-isa"));
    CHECK(k::active().name == "scalar");
}

TEST_CASE("every variant matches the scalar reference") {
    const k::KernelTable& ref = k::scalar_table();
    std::mt19937_64 rng(11);
    for (const k::KernelTable* t : k::available_tables()) {
        CAPTURE(t->name);
        std::vector<std::size_t> lengths;
        for (std::size_t n = 0; n <= 67; ++n) lengths.push_back(n);
        lengths.push_back(1000);
        lengths.push_back(100003);
        for (std::size_t n : lengths) {
            CAPTURE(n);
            const auto a = random_vector(rng, n);
            const auto b = random_vector(rng, n);
            std::vector<double> w(n);
            for (std::size_t i = 0; i < n; ++i) w[i] = std::abs(a[i]) + 0.5;

            double abs_a = 0.0, abs_ab = 0.0, abs_wab = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                abs_a += std::abs(a[i]);
                abs_ab += std::abs(a[i] * b[i]);
                abs_wab += std::abs(w[i] * a[i] * b[i]);
            }
            CHECK(std::abs(t->sum(a.data(), n) - ref.sum(a.data(), n)) <= reorder_bound(abs_a, n));
            CHECK(std::abs(t->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <=
                  reorder_bound(abs_ab, n));
            CHECK(std::abs(t->wdot(w.data(), a.data(), b.data(), n) - ref.wdot(w.data(), a.data(), b.data(), n)) <=
                  reorder_bound(abs_wab, n));

            std::vector<double> y1 = b, y2 = b;
            t->axpy(0.37, a.data(), y1.data(), n);
            ref.axpy(0.37, a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                // fused multiply-add may round once instead of twice
                REQUIRE(std::abs(y1[i] - y2[i]) <= 2.3e-16 * (std::abs(b[i]) + std::abs(0.37 * a[i])));
            }

            std::vector<double> m1(n), m2(n);
            t->mul(a.data(), b.data(), m1.data(), n);
            ref.mul(a.data(), b.data(), m2.data(), n);
            CHECK(m1 == m2);
        }
    }
}

TEST_CASE("span wrappers dispatch to the active table") {
    std::mt19937_64 rng(5);
    const auto a = random_vector(rng, 33);
    const auto b = random_vector(rng, 33);
    for (const k::KernelTable* t : k::available_tables()) {
        REQUIRE(k::select(t->name));
        CHECK(k::dot(a, b) == t->dot(a.data(), b.data(), a.size()));
        CHECK(k::sum(a) == t->sum(a.data(), a.size()));
    }
    k::select("scalar");
}
