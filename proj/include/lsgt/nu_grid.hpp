#pragma once

#include <cstddef>
#include <vector>

namespace lsgt {

/// Candidate degrees-of-freedom values spaced so that neighbouring
/// Student-t distributions are equally far apart in symmetric KL divergence.
struct NuGrid {
  std::vector<double> candidates;

  std::size_t size() const { return candidates.size(); }
  /// Index of the candidate closest to `nu` on the log scale.
  std::size_t nearest(double nu) const;
};

/// KL(p||q) + KL(q||p) for zero-location, unit-scale Student-t densities
/// with `nu1` and `nu2` degrees of freedom, by adaptive quadrature.
/// Throws std::runtime_error when the quadrature error estimate exceeds
/// the requested tolerance.
double symmetric_kl_t(double nu1, double nu2);

NuGrid build_nu_grid(double nu_lower, double nu_upper, std::size_t q);

/// Process-wide cache over build_nu_grid keyed on its arguments.
const NuGrid& cached_nu_grid(double nu_lower, double nu_upper, std::size_t q);

/// Uniformly spaced candidates over [lo, hi] inclusive.
std::vector<double> uniform_grid(double lo, double hi, std::size_t q);

}  // namespace lsgt
