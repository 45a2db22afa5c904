#pragma once

#include "subman/manifold_quadrature.hpp"
#include "subman/spline_sieve.hpp"

#include <optional>
#include <variant>

namespace subman {

/// phi(t, x), a known transformation of the regression value t at x.
using Transform = std::function<double(double t, std::span<const double> x)>;

/// Gamma(h) = integral over M of h(x) w(x) dH^m(x).
struct LinearOnChart {
    ChartManifold manifold;
    ScalarField weight;
    std::size_t num_points = kDefaultChartPoints;
};

/// Gamma(h) = integral over M of phi(h(x), x) w(x) dH^m(x).
struct TransformOnChart {
    ChartManifold manifold;
    Transform transform;
    Transform transform_dt;  // d phi / dt
    ScalarField weight;
    std::size_t num_points = kDefaultChartPoints;
};

/// Gamma(h) = integral of w over the upper contour set {h >= 0} in a box.
/// Its derivative lives on the level set {h = 0} and is evaluated with the
/// eps-band approximation.
struct UpperContour {
    ScalarField weight;
    Box box;
    double epsilon = kDefaultBandEpsilon;
    std::size_t band_points = kDefaultBandPoints;
    std::size_t num_points = kDefaultIndicatorPoints;
};

using FunctionalSpec = std::variant<LinearOnChart, TransformOnChart, UpperContour>;

double evaluate(const FunctionalSpec& spec, const ScalarField& h);

/// The pathwise derivative at h as a quadrature rule, so that
/// D Gamma(h)[v] = integrate(rule, v).
struct DerivativeRule {
    QuadratureRule rule;
    bool band_empty = false;
};

DerivativeRule derivative_rule(const FunctionalSpec& spec, const ScalarField& h);

struct DerivativeValue {
    double value = 0.0;
    bool band_empty = false;
};

/// d/dt Gamma(h + t v) at t = 0.
///
/// Linear: Gamma(v). Transform: integral of v phi_1(h, x) w. Upper contour:
/// band integral of v w around {h = 0}, which carries the 1 / |grad h|
/// density implicitly. An empty band yields 0 with band_empty set.
DerivativeValue directional_derivative(const FunctionalSpec& spec, const ScalarField& h,
                                       const ScalarField& direction);

/// Checks transform_dt against central differences of transform at
/// `num_pairs` deterministic (t, x) pairs, t in [t_lower, t_upper] and x on
/// the chart image. Returns the largest absolute discrepancy.
double transform_derivative_discrepancy(const TransformOnChart& spec, double t_lower, double t_upper,
                                        std::size_t num_pairs = 100);

/// Sup-norm distances between a fitted sieve and a known truth on a
/// regular grid over the sieve domain. Reported, never enforced.
struct RemainderDiagnostics {
    double sup_error = 0.0;
    std::optional<double> sup_gradient_error;
};

using GradientField = std::function<Eigen::VectorXd(std::span<const double>)>;

RemainderDiagnostics remainder_diagnostics(const FittedSieve& fit, const ScalarField& truth,
                                           const GradientField& truth_gradient = {},
                                           int grid_per_dim = 50);

}  // namespace subman
