#include "subman/functionals.hpp"

#include "subman/quasirandom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace subman {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double checked_weight(const ScalarField& weight, std::span<const double> x) {
    const double w = weight(x);
    if (!std::isfinite(w)) throw NumericError("functional weight is not finite at x = " + format_point(x));
    return w;
}

void require_weight(const ScalarField& weight) {
    if (!weight) throw InvalidArgument("functional needs a weight function");
}

}  // namespace

double evaluate(const FunctionalSpec& spec, const ScalarField& h) {
    return std::visit(
        Overloaded{
            [&](const LinearOnChart& s) {
                require_weight(s.weight);
                return hausdorff_integral_chart(
                    s.manifold,
                    [&](std::span<const double> x) { return h(x) * checked_weight(s.weight, x); },
                    s.num_points);
            },
            [&](const TransformOnChart& s) {
                require_weight(s.weight);
                if (!s.transform) throw InvalidArgument("transform functional needs phi");
                return hausdorff_integral_chart(
                    s.manifold,
                    [&](std::span<const double> x) { return s.transform(h(x), x) * checked_weight(s.weight, x); },
                    s.num_points);
            },
            [&](const UpperContour& s) {
                require_weight(s.weight);
                return indicator_integral(
                    h, [&](std::span<const double> x) { return checked_weight(s.weight, x); }, s.box,
                    s.num_points);
            },
        },
        spec);
}

DerivativeRule derivative_rule(const FunctionalSpec& spec, const ScalarField& h) {
    return std::visit(
        Overloaded{
            [&](const LinearOnChart& s) {
                require_weight(s.weight);
                DerivativeRule out{chart_rule(s.manifold, s.num_points), false};
                for (Eigen::Index j = 0; j < out.rule.size(); ++j) {
                    out.rule.weights[j] *= checked_weight(s.weight, row_span(out.rule.points, j));
                }
                return out;
            },
            [&](const TransformOnChart& s) {
                require_weight(s.weight);
                if (!s.transform_dt) throw InvalidArgument("transform functional needs d phi / dt");
                DerivativeRule out{chart_rule(s.manifold, s.num_points), false};
                for (Eigen::Index j = 0; j < out.rule.size(); ++j) {
                    const auto x = row_span(out.rule.points, j);
                    const double slope = s.transform_dt(h(x), x);
                    if (!std::isfinite(slope)) {
                        throw NumericError("d phi / dt is not finite at x = " + format_point(x));
                    }
                    out.rule.weights[j] *= slope * checked_weight(s.weight, x);
                }
                return out;
            },
            [&](const UpperContour& s) {
                require_weight(s.weight);
                BandSpec band{h, s.epsilon, s.box, s.band_points};
                DerivativeRule out{band_rule(band), false};
                out.band_empty = out.rule.size() == 0;
                for (Eigen::Index j = 0; j < out.rule.size(); ++j) {
                    out.rule.weights[j] *= checked_weight(s.weight, row_span(out.rule.points, j));
                }
                return out;
            },
        },
        spec);
}

DerivativeValue directional_derivative(const FunctionalSpec& spec, const ScalarField& h,
                                       const ScalarField& direction) {
    const DerivativeRule d = derivative_rule(spec, h);
    return {integrate(d.rule, direction), d.band_empty};
}

double transform_derivative_discrepancy(const TransformOnChart& spec, double t_lower, double t_upper,
                                        std::size_t num_pairs) {
    if (!spec.transform || !spec.transform_dt) throw InvalidArgument("transform functional needs phi and d phi / dt");
    if (!(t_lower < t_upper)) throw InvalidArgument("t range must be non-empty");
    const ChartManifold& m = spec.manifold;
    m.validate();

    Eigen::VectorXd lo(m.intrinsic_dim + 1);
    Eigen::VectorXd hi(m.intrinsic_dim + 1);
    lo << t_lower, m.parameter_box.lower;
    hi << t_upper, m.parameter_box.upper;
    // Skip the origin so no pair sits on the box corner.
    const PointSet pairs = scale_to_box(sobol_points(m.intrinsic_dim + 1, num_pairs, 1), Box(lo, hi));

    constexpr double step = 1e-5;
    std::vector<double> x(static_cast<std::size_t>(m.ambient_dim));
    double worst = 0.0;
    for (Eigen::Index j = 0; j < pairs.rows(); ++j) {
        const double t = pairs(j, 0);
        m.chart_map({pairs.data() + j * pairs.cols() + 1, static_cast<std::size_t>(m.intrinsic_dim)}, x);
        const double fd = (spec.transform(t + step, x) - spec.transform(t - step, x)) / (2.0 * step);
        worst = std::max(worst, std::abs(fd - spec.transform_dt(t, x)));
    }
    return worst;
}

RemainderDiagnostics remainder_diagnostics(const FittedSieve& fit, const ScalarField& truth,
                                           const GradientField& truth_gradient, int grid_per_dim) {
    if (grid_per_dim < 2) throw InvalidArgument("diagnostic grid needs at least 2 points per dimension");
    const Box& box = fit.basis().domain();
    const int d = box.dim();
    const bool with_gradient = static_cast<bool>(truth_gradient) && fit.basis().degree() >= 1;

    RemainderDiagnostics out;
    double worst_grad = 0.0;
    std::vector<int> digit(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    while (true) {
        for (int l = 0; l < d; ++l) {
            x[l] = box.lower[l] + (box.upper[l] - box.lower[l]) * digit[l] / (grid_per_dim - 1);
        }
        out.sup_error = std::max(out.sup_error, std::abs(fit.predict(x) - truth(x)));
        if (with_gradient) {
            worst_grad = std::max(worst_grad, (fit.predict_gradient(x) - truth_gradient(x)).cwiseAbs().maxCoeff());
        }
        int l = d - 1;
        while (l >= 0 && ++digit[l] == grid_per_dim) digit[l--] = 0;
        if (l < 0) break;
    }
    if (with_gradient) out.sup_gradient_error = worst_grad;
    return out;
}

}  // namespace subman
