#pragma once

#include "subman/spline_sieve.hpp"

namespace subman {

enum class KernelFamily { gaussian, epanechnikov };

/// Second-order product kernel with a common bandwidth in every dimension.
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double bandwidth = 1.0;
    int dimension = 1;

    void validate() const;
};

/// Univariate kernel K(u).
double kernel_value(KernelFamily family, double u);

/// Product kernel K_d((X_i - x) / b) = prod_j K((X_ij - x_j) / b).
double product_kernel(const KernelSpec& spec, std::span<const double> xi, std::span<const double> x);

/// Nadaraya-Watson estimate at x. Numerator and denominator carry the
/// 1/(n b^d) factor, which cancels in the ratio.
/// Throws EmptyNeighborhoodError when every kernel weight at x is zero.
double nw_estimate(const Sample& sample, const KernelSpec& spec, std::span<const double> x);

/// Bandwidth n^{-1/(2s + d - m)}, the rate-optimal choice for integrating a
/// smoothness-s regression over an m-dimensional manifold in R^d.
double rate_optimal_bandwidth(std::size_t n, int smoothness, int ambient_dim, int manifold_dim);

}  // namespace subman
