#include "subman/manifold_quadrature.hpp"

#include "subman/quasirandom.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace subman {

void ChartManifold::validate() const {
    if (intrinsic_dim < 1 || intrinsic_dim >= ambient_dim) {
        throw InvalidArgument("chart manifold needs 1 <= intrinsic_dim < ambient_dim");
    }
    if (parameter_box.dim() != intrinsic_dim) {
        throw InvalidArgument("parameter box dimension must equal the intrinsic dimension");
    }
    if (!chart_map || !jacobian) throw InvalidArgument("chart manifold needs a chart map and a jacobian");
}

ChartManifold ChartManifold::unit_circle() {
    return circle(1.0);
}

ChartManifold ChartManifold::circle(double radius) {
    if (!(radius > 0.0)) throw InvalidArgument("circle radius must be positive");
    ChartManifold m;
    m.intrinsic_dim = 1;
    m.ambient_dim = 2;
    m.parameter_box = Box::cube(1, 0.0, 2.0 * std::numbers::pi);
    m.chart_map = [radius](std::span<const double> u, std::span<double> x) {
        x[0] = radius * std::cos(u[0]);
        x[1] = radius * std::sin(u[0]);
    };
    m.jacobian = [radius](std::span<const double>) { return radius; };
    return m;
}

QuadratureRule chart_rule(const ChartManifold& manifold, std::size_t num_points) {
    manifold.validate();
    const PointSet params = scale_to_box(sobol_points(manifold.intrinsic_dim, num_points), manifold.parameter_box);
    const double base = manifold.parameter_box.volume();

    QuadratureRule rule;
    rule.points.resize(params.rows(), manifold.ambient_dim);
    rule.weights.resize(params.rows());
    rule.divisor = static_cast<double>(num_points);
    for (Eigen::Index j = 0; j < params.rows(); ++j) {
        const auto u = row_span(params, j);
        manifold.chart_map(u, {rule.points.data() + j * manifold.ambient_dim,
                               static_cast<std::size_t>(manifold.ambient_dim)});
        const double jac = manifold.jacobian(u);
        if (!(jac > 0.0) || !std::isfinite(jac)) {
            throw NumericError("chart jacobian " + std::to_string(jac) + " is not positive at u = " +
                               format_point(u));
        }
        rule.weights[j] = base * jac;
    }
    return rule;
}

QuadratureRule box_rule(const Box& box, std::size_t num_points) {
    QuadratureRule rule;
    rule.points = scale_to_box(sobol_points(box.dim(), num_points), box);
    rule.weights = Eigen::VectorXd::Constant(rule.points.rows(), box.volume());
    rule.divisor = static_cast<double>(num_points);
    return rule;
}

double integrate(const QuadratureRule& rule, const ScalarField& integrand) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < rule.size(); ++j) {
        const auto x = row_span(rule.points, j);
        const double f = integrand(x);
        if (!std::isfinite(f)) {
            throw NumericError("integrand is not finite (" + std::to_string(f) + ") at quadrature node " +
                               std::to_string(j) + " x = " + format_point(x));
        }
        sum += rule.weights[j] * f;
    }
    return sum / rule.divisor;
}

double hausdorff_integral_chart(const ChartManifold& manifold, const ScalarField& integrand,
                                std::size_t num_points) {
    return integrate(chart_rule(manifold, num_points), integrand);
}

void BandSpec::validate() const {
    if (!level_function) throw InvalidArgument("band needs a level function");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("band epsilon must be positive");
    if (num_points < 1) throw InvalidArgument("band needs at least one quadrature point");
    if (integration_box.dim() < 1) throw InvalidArgument("band needs an integration box");
}

namespace {

// Keeps the box nodes selected by `keep`, each weighted vol(box).
template <typename Predicate>
QuadratureRule filtered_box_rule(const Box& box, std::size_t num_points, double divisor, Predicate keep) {
    const PointSet nodes = scale_to_box(sobol_points(box.dim(), num_points), box);
    std::vector<Eigen::Index> selected;
    for (Eigen::Index j = 0; j < nodes.rows(); ++j) {
        if (keep(row_span(nodes, j), j)) selected.push_back(j);
    }
    QuadratureRule rule;
    rule.points.resize(static_cast<Eigen::Index>(selected.size()), box.dim());
    for (std::size_t r = 0; r < selected.size(); ++r) {
        rule.points.row(static_cast<Eigen::Index>(r)) = nodes.row(selected[r]);
    }
    rule.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(selected.size()), box.volume());
    rule.divisor = divisor;
    return rule;
}

double checked_level(const ScalarField& h, std::span<const double> x, Eigen::Index j) {
    const double v = h(x);
    if (std::isnan(v)) {
        throw NumericError("level function is NaN at quadrature node " + std::to_string(j) + " x = " +
                           format_point(x));
    }
    return v;
}

}  // namespace

QuadratureRule band_rule(const BandSpec& spec) {
    spec.validate();
    const double divisor = static_cast<double>(spec.num_points) * 2.0 * spec.epsilon;
    return filtered_box_rule(spec.integration_box, spec.num_points, divisor,
                             [&](std::span<const double> x, Eigen::Index j) {
                                 const double v = checked_level(spec.level_function, x, j);
                                 return -spec.epsilon < v && v < spec.epsilon;
                             });
}

BandIntegral band_integral(const BandSpec& spec, const ScalarField& integrand) {
    const QuadratureRule rule = band_rule(spec);
    BandIntegral out;
    out.band_count = static_cast<std::size_t>(rule.size());
    out.value = integrate(rule, integrand);
    return out;
}

QuadratureRule upper_contour_rule(const ScalarField& h, const Box& box, std::size_t num_points) {
    if (num_points < 1) throw InvalidArgument("indicator integral needs at least one quadrature point");
    return filtered_box_rule(box, num_points, static_cast<double>(num_points),
                             [&](std::span<const double> x, Eigen::Index j) {
                                 return checked_level(h, x, j) >= 0.0;
                             });
}

double indicator_integral(const ScalarField& h, const ScalarField& weight, const Box& box,
                          std::size_t num_points) {
    return integrate(upper_contour_rule(h, box, num_points), weight);
}

}  // namespace subman
