#pragma once

#include <cstddef>
#include <span>

namespace bmet::vecstore {

// Inner products of every row of a row-major [rows x dim] matrix with `query`,
// accumulated in double. `out` must hold `rows` values.
void score_rows(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                std::span<double> out);

// Single-threaded reference for score_rows.
void score_rows_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                       std::span<double> out);

}  // namespace bmet::vecstore
