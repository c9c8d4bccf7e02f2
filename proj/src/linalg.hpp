#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lilate/matrix.hpp"

namespace lilate::detail {

// Symmetric positive definite solve via Cholesky. `gram` is p x p row-major.
// A pivot below rel_tol * diag marks that column as a linear combination of
// the preceding ones; the error names every such column.
std::vector<double> solve_spd(std::vector<double> gram, std::vector<double> rhs,
                              std::span<const std::string> names, double rel_tol = 1e-10);

// Columns that are (numerically) linear combinations of earlier columns.
std::vector<std::size_t> collinear_columns(const std::vector<double>& gram, std::size_t p,
                                           double rel_tol = 1e-10);

// Gram matrix [1, X]' diag(w) [1, X] (row-major, (k+1)^2) built with the
// kernel layer. `w` empty means unit weights.
std::vector<double> weighted_gram(const ColumnMatrix& x, std::span<const double> w);

// [1, X]' v
std::vector<double> design_transpose_times(const ColumnMatrix& x, std::span<const double> v);

// b0 + X b
void linear_index(const ColumnMatrix& x, std::span<const double> beta, std::span<double> out);

std::vector<std::string> with_intercept(std::span<const std::string> names);

}  // namespace lilate::detail
