// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops of the fixed-point estimators.
//
// The `parallel` kernels split the sample range into fixed-size chunks, reduce
// each chunk serially and combine the chunk partials in chunk order. The result
// is therefore bit-identical for any OpenMP thread count. The `reference`
// kernels are plain serial loops kept as test oracles; they agree with the
// parallel ones to rounding.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "robust_scatter/distributions.hpp"
#include "robust_scatter/linalg.hpp"

namespace robust_scatter::kernels {

inline constexpr std::size_t kChunkSize = 256;

/// Samples below this count never spawn a parallel region.
inline constexpr std::size_t kParallelThreshold = 4096;

/// sum_i w_i z_i z_i^H (unnormalized).
CMatrix weighted_scatter_sum(const SampleSet& samples, std::span<const double> weights);

/// s_i = z_i^H A^{-1} z_i given the Cholesky factor of A.
std::vector<double> inverse_quad_forms(const SampleSet& samples, const Cholesky& chol);

}  // namespace robust_scatter::kernels

namespace robust_scatter::reference {

CMatrix weighted_scatter_sum(const SampleSet& samples, std::span<const double> weights);
std::vector<double> inverse_quad_forms(const SampleSet& samples, const HermitianMatrix& inverse);

}  // namespace robust_scatter::reference
