#pragma once

#include <span>

#include "stickyalign/kernel.hpp"

namespace stickyalign {

enum class ExecPolicy { Serial, Parallel };

// out[i] = sum_j m[j] * Phi(q[i] - x[j]).
//
// This is the hot inner kernel of the whole library: velocities of K clusters
// cost one call with q = x (K^2 terms).  The optimized path dispatches the
// kernel family once per batch and runs family-specialized loops; each out[i]
// is accumulated sequentially in index order, so results are bitwise
// independent of the thread count and schedule.
void convolve_primitive_at(std::span<const double> x, std::span<const double> m,
                           const CommunicationKernel& kernel,
                           std::span<const double> q, std::span<double> out,
                           ExecPolicy policy);

// Straightforward double loop through CommunicationKernel::phi_primitive.
// Kept as the reference implementation for tests and benchmarks.
void convolve_primitive_at_reference(std::span<const double> x, std::span<const double> m,
                                     const CommunicationKernel& kernel,
                                     std::span<const double> q, std::span<double> out);

}  // namespace stickyalign
