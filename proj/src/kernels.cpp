// SPDX-License-Identifier: Apache-2.0
#include "robust_scatter/kernels.hpp"

#include <omp.h>

namespace robust_scatter::kernels {

namespace {

bool go_parallel(std::size_t n) { return n >= kParallelThreshold && !omp_in_parallel(); }

// Upper triangle (including diagonal) of sum_{i in [begin, end)} w_i z_i z_i^H,
// packed row by row.
void accumulate_chunk(const SampleSet& samples, std::span<const double> weights, std::size_t begin,
                      std::size_t end, std::span<cplx> packed) {
  const std::size_t m = samples.dim();
  for (std::size_t i = begin; i < end; ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    const auto z = samples[i];
    std::size_t k = 0;
    for (std::size_t r = 0; r < m; ++r) {
      const cplx wr = w * z[r];
      for (std::size_t c = r; c < m; ++c) packed[k++] += wr * std::conj(z[c]);
    }
  }
}

}  // namespace

CMatrix weighted_scatter_sum(const SampleSet& samples, std::span<const double> weights) {
  if (weights.size() != samples.size()) throw InvalidArgument("weighted_scatter_sum: weight count mismatch");
  const std::size_t n = samples.size();
  const std::size_t m = samples.dim();
  const std::size_t packed_size = m * (m + 1) / 2;
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<cplx> partial(chunks * packed_size);

  const auto chunk_count = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static) if (go_parallel(n))
  for (std::ptrdiff_t c = 0; c < chunk_count; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    const std::size_t begin = cu * kChunkSize;
    const std::size_t end = std::min(n, begin + kChunkSize);
    accumulate_chunk(samples, weights, begin, end,
                     std::span<cplx>(partial.data() + cu * packed_size, packed_size));
  }

  std::vector<cplx> total(packed_size);
  for (std::size_t c = 0; c < chunks; ++c)
    for (std::size_t k = 0; k < packed_size; ++k) total[k] += partial[c * packed_size + k];

  CMatrix out(m, m);
  std::size_t k = 0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = r; c < m; ++c) {
      out(r, c) = total[k];
      out(c, r) = std::conj(total[k]);
      ++k;
    }
  for (std::size_t r = 0; r < m; ++r) out(r, r) = out(r, r).real();
  return out;
}

std::vector<double> inverse_quad_forms(const SampleSet& samples, const Cholesky& chol) {
  if (chol.dim() != samples.dim()) throw InvalidArgument("inverse_quad_forms: dimension mismatch");
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  std::vector<double> out(samples.size());
#pragma omp parallel for schedule(static) if (go_parallel(samples.size()))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    out[iu] = chol.inverse_quad_form(samples[iu]);
  }
  return out;
}

}  // namespace robust_scatter::kernels

namespace robust_scatter::reference {

CMatrix weighted_scatter_sum(const SampleSet& samples, std::span<const double> weights) {
  if (weights.size() != samples.size()) throw InvalidArgument("weighted_scatter_sum: weight count mismatch");
  const std::size_t m = samples.dim();
  CMatrix out(m, m);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto z = samples[i];
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < m; ++c) out(r, c) += weights[i] * z[r] * std::conj(z[c]);
  }
  return out;
}

std::vector<double> inverse_quad_forms(const SampleSet& samples, const HermitianMatrix& inverse) {
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto z = samples[i];
    const auto az = inverse.mat() * z;
    out[i] = dot_conj(z, az).real();
  }
  return out;
}

}  // namespace robust_scatter::reference
