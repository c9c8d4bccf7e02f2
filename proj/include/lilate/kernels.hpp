#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Reduction and update kernels behind the estimation inner loops. Each kernel
// has a scalar reference implementation; vector variants are compiled per ISA
// and picked once at first use (override with LILATE_SIMD=scalar|avx2|neon).
// Variants agree with the scalar reference up to summation reordering.
namespace lilate::kernels {

struct KernelTable {
    std::string_view name;
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum_i w[i] * a[i] * b[i]
    double (*wdot)(const double* w, const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out[i] = a[i] * b[i]
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Every table usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

const KernelTable& active();

// Switches the process-wide table; returns false for unknown/unsupported names.
bool select(std::string_view name);

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline double wdot(std::span<const double> w, std::span<const double> a,
                   std::span<const double> b) {
    return active().wdot(w.data(), a.data(), b.data(), w.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    active().mul(a.data(), b.data(), out.data(), a.size());
}

}  // namespace lilate::kernels
