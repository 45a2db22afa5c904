#include "subman/kernel_first_stage.hpp"

#include <cmath>
#include <numbers>

namespace subman {

void KernelSpec::validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw InvalidArgument("kernel bandwidth must be positive and finite");
    }
    if (dimension < 1) throw InvalidArgument("kernel dimension must be positive");
}

double kernel_value(KernelFamily family, double u) {
    switch (family) {
        case KernelFamily::gaussian:
            return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
        case KernelFamily::epanechnikov:
            return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    }
    return 0.0;
}

double product_kernel(const KernelSpec& spec, std::span<const double> xi, std::span<const double> x) {
    double value = 1.0;
    for (int j = 0; j < spec.dimension; ++j) {
        value *= kernel_value(spec.family, (xi[j] - x[j]) / spec.bandwidth);
    }
    return value;
}

double nw_estimate(const Sample& sample, const KernelSpec& spec, std::span<const double> x) {
    spec.validate();
    if (spec.dimension != sample.dim() || static_cast<int>(x.size()) != sample.dim()) {
        throw InvalidArgument("kernel, sample and evaluation point dimensions disagree");
    }
    const Eigen::Index n = sample.size();
    const int d = sample.dim();
    const double scale = 1.0 / (static_cast<double>(n) * std::pow(spec.bandwidth, d));

    std::vector<double> xi(static_cast<std::size_t>(d));
    double numerator = 0.0;
    double denominator = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) xi[j] = sample.x(i, j);
        const double w = product_kernel(spec, xi, x);
        numerator += w * sample.y[i];
        denominator += w;
    }
    numerator *= scale;
    denominator *= scale;
    if (!(denominator > 0.0)) {
        throw EmptyNeighborhoodError("no kernel mass at x = " + format_point(x) +
                                     "; widen the bandwidth or move the point");
    }
    return numerator / denominator;
}

double rate_optimal_bandwidth(std::size_t n, int smoothness, int ambient_dim, int manifold_dim) {
    if (n < 1) throw InvalidArgument("sample size must be positive");
    const int denom = 2 * smoothness + ambient_dim - manifold_dim;
    if (smoothness < 1 || manifold_dim < 0 || manifold_dim > ambient_dim || denom <= 0) {
        throw InvalidArgument("invalid smoothness or dimension arguments");
    }
    return std::pow(static_cast<double>(n), -1.0 / denom);
}

}  // namespace subman
