#include "bmet/vecstore/kernels.hpp"

#include "bmet/embedding/embedder.hpp"

namespace bmet::vecstore {

void score_rows(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                std::span<double> out) {
    const auto rows = static_cast<long>(out.size());
#pragma omp parallel for schedule(static) if (rows > 2048)
    for (long r = 0; r < rows; ++r) {
        const auto row = matrix.subspan(static_cast<std::size_t>(r) * dim, dim);
        out[static_cast<std::size_t>(r)] = embedding::dot(row, query);
    }
}

void score_rows_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                       std::span<double> out) {
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = embedding::dot(matrix.subspan(r * dim, dim), query);
}

}  // namespace bmet::vecstore
