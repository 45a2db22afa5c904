#pragma once

#include "subman/common.hpp"

namespace subman {

inline constexpr std::size_t kDefaultChartPoints = 5000;
inline constexpr std::size_t kDefaultIndicatorPoints = 5000;
inline constexpr std::size_t kDefaultBandPoints = 100000;
inline constexpr double kDefaultBandEpsilon = 1e-3;

/// An m-dimensional submanifold of R^d covered by a single chart
/// phi: U -> R^d over a parameter box U, with Jacobian weight
/// J(u) = sqrt(det(Dphi(u)' Dphi(u))) > 0.
struct ChartManifold {
    using ChartMap = std::function<void(std::span<const double> u, std::span<double> x)>;

    int intrinsic_dim = 1;
    int ambient_dim = 2;
    Box parameter_box;
    ChartMap chart_map;
    ScalarField jacobian;

    void validate() const;

    /// phi(b) = (cos b, sin b) on [0, 2*pi), J = 1.
    static ChartManifold unit_circle();
    /// Circle of the given radius around the origin, J = radius.
    static ChartManifold circle(double radius);
};

/// Nodes and weights; an integral is sum_j weights[j] * f(points.row(j))
/// divided by `divisor`. Keeping the node count in the divisor makes a rule
/// integrate constants exactly.
struct QuadratureRule {
    PointSet points;
    Eigen::VectorXd weights;
    double divisor = 1.0;

    Eigen::Index size() const { return weights.size(); }
    double weight(Eigen::Index j) const { return weights[j] / divisor; }
};

/// Chart pull-back rule: nodes phi(u_j) over Sobol points u_j in the
/// parameter box, weights vol(U) * J(u_j), divisor N.
QuadratureRule chart_rule(const ChartManifold& manifold, std::size_t num_points);

/// Plain QMC rule on a box: Sobol nodes, weights vol(box), divisor N.
QuadratureRule box_rule(const Box& box, std::size_t num_points);

/// Sum of weight * integrand over the rule, accumulated in node order.
/// Throws NumericError naming the node on a non-finite integrand value.
double integrate(const QuadratureRule& rule, const ScalarField& integrand);

/// Integral of `integrand` against m-dimensional Hausdorff measure on the
/// manifold, via the chart change of variables.
double hausdorff_integral_chart(const ChartManifold& manifold, const ScalarField& integrand,
                                std::size_t num_points = kDefaultChartPoints);

/// Thin band {-eps < level < eps} around the zero set of a level function.
struct BandSpec {
    ScalarField level_function;
    double epsilon = kDefaultBandEpsilon;
    Box integration_box;
    std::size_t num_points = kDefaultBandPoints;

    void validate() const;
};

/// Sobol nodes of the box that fall strictly inside the band, each with
/// weight vol(box); divisor N * 2 * eps.
QuadratureRule band_rule(const BandSpec& spec);

struct BandIntegral {
    double value = 0.0;
    std::size_t band_count = 0;

    /// No node fell inside the band; value is then 0.
    bool band_empty() const { return band_count == 0; }
};

/// (1 / 2eps) * integral of `integrand` over {-eps < h < eps}, by QMC on the
/// box.
///
/// As eps -> 0 this tends to the integral of integrand / |grad h| over the
/// level set {h = 0} against (d-1)-dimensional Hausdorff measure. The
/// 1 / |grad h| density comes from the band width and is never computed
/// explicitly: integrating v over the band yields the level-set integral of
/// v / |grad h|, not of v.
BandIntegral band_integral(const BandSpec& spec, const ScalarField& integrand);

/// Sobol nodes of the box with h(x) >= 0, weight vol(box), divisor N.
QuadratureRule upper_contour_rule(const ScalarField& h, const Box& box, std::size_t num_points);

/// QMC Lebesgue integral of `weight` over the upper contour set {h >= 0}.
double indicator_integral(const ScalarField& h, const ScalarField& weight, const Box& box,
                          std::size_t num_points = kDefaultIndicatorPoints);

}  // namespace subman
