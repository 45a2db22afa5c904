#include "subman/functionals.hpp"
#include "subman/montecarlo.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace subman;

namespace {

constexpr double kPi = std::numbers::pi;

const ScalarField one = [](std::span<const double>) { return 1.0; };
const ScalarField unit_disk_level = [](std::span<const double> x) { return 1.0 - x[0] * x[0] - x[1] * x[1]; };

ScalarField shifted(const ScalarField& h, const ScalarField& v, double t) {
    return [h, v, t](std::span<const double> x) { return h(x) + t * v(x); };
}

double central_difference(const FunctionalSpec& spec, const ScalarField& h, const ScalarField& v, double delta) {
    return (evaluate(spec, shifted(h, v, delta)) - evaluate(spec, shifted(h, v, -delta))) / (2.0 * delta);
}

TransformOnChart square_transform() {
    return TransformOnChart{ChartManifold::unit_circle(),
                            [](double t, std::span<const double>) { return t * t; },
                            [](double t, std::span<const double>) { return 2.0 * t; }, one, kDefaultChartPoints};
}

}  // namespace

TEST_CASE("evaluate examples") {
    const LinearOnChart linear{ChartManifold::unit_circle(), one, 5000};
    CHECK(std::abs(evaluate(linear, circle_truth) - kPi) < 1e-3);

    const TransformOnChart identity{ChartManifold::unit_circle(),
                                    [](double t, std::span<const double>) { return t; },
                                    [](double, std::span<const double>) { return 1.0; }, one, 5000};
    CHECK(evaluate(identity, circle_truth) == evaluate(linear, circle_truth));

    // h0 of the disk design has the unit circle as its zero set; the
    // 5000-node rule counts 986 nodes inside (see the quadrature tests).
    const UpperContour contour{one, Box::cube(2, -2.0, 2.0), 1e-3, 100000, 5000};
    CHECK(evaluate(contour, disk_truth) == doctest::Approx(986.0 * 16.0 / 5000.0).epsilon(1e-14));
    CHECK(std::abs(evaluate(contour, disk_truth) - kPi) < 0.014);
}

TEST_CASE("directional derivative examples") {
    const LinearOnChart linear{ChartManifold::unit_circle(), one, 5000};
    CHECK(std::abs(directional_derivative(linear, circle_truth, one).value - 2.0 * kPi) < 1e-6);

    // |grad h| = 2 on the unit circle, so the level-set integral is pi. The
    // band holds 39 nodes of 0.08 each (see the quadrature tests).
    const UpperContour contour{one, Box::cube(2, -2.0, 2.0), 1e-3, 100000, 5000};
    const DerivativeValue d = directional_derivative(contour, unit_disk_level, one);
    CHECK_FALSE(d.band_empty);
    CHECK(d.value == doctest::Approx(39.0 * 16.0 / 200.0).epsilon(1e-14));
    CHECK(std::abs(d.value - kPi) <= 0.08);

    const TransformOnChart square = square_transform();
    const ScalarField v = [](std::span<const double> x) { return std::cos(x[0]) + 0.5 * x[1]; };
    const ScalarField two_h_v = [&](std::span<const double> x) { return 2.0 * circle_truth(x) * v(x); };
    const double analytic = hausdorff_integral_chart(ChartManifold::unit_circle(), two_h_v);
    const double derivative = directional_derivative(square, circle_truth, v).value;
    CHECK(std::abs(derivative - analytic) < 1e-12);
    CHECK(std::abs(derivative - central_difference(square, circle_truth, v, 1e-4)) < 1e-3);
}

TEST_CASE("an empty band gives zero with the flag set") {
    const UpperContour contour{one, Box::cube(2, -2.0, 2.0), 1e-3, 1000, 1000};
    const ScalarField positive = [](std::span<const double>) { return 5.0; };
    const DerivativeValue d = directional_derivative(contour, positive, one);
    CHECK(d.band_empty);
    CHECK(d.value == 0.0);
    CHECK(derivative_rule(contour, positive).band_empty);
}

TEST_CASE("linearity in the direction") {
    const ScalarField v1 = [](std::span<const double> x) { return std::sin(2.0 * x[0]) + x[1]; };
    const ScalarField v2 = [](std::span<const double> x) { return std::exp(0.3 * x[0] * x[1]); };
    const double a = 1.7;
    const double b = -0.4;
    const ScalarField combo = [&](std::span<const double> x) { return a * v1(x) + b * v2(x); };
    const std::vector<FunctionalSpec> specs = {
        LinearOnChart{ChartManifold::unit_circle(), [](std::span<const double> x) { return 1.0 + x[0] * x[0]; }, 5000},
        square_transform(),
        UpperContour{one, Box::cube(2, -2.0, 2.0), 0.01, 100000, 5000},
    };
    for (const auto& spec : specs) {
        const ScalarField h = std::holds_alternative<UpperContour>(spec) ? disk_truth : circle_truth;
        const double whole = directional_derivative(spec, h, combo).value;
        const double parts =
            a * directional_derivative(spec, h, v1).value + b * directional_derivative(spec, h, v2).value;
        CHECK(std::abs(whole - parts) < 1e-10 * std::max(1.0, std::abs(whole)));
    }
}

TEST_CASE("chart derivatives match finite differences of evaluate") {
    std::mt19937_64 engine(123);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const LinearOnChart linear{ChartManifold::unit_circle(), [](std::span<const double> x) { return 2.0 + x[1]; },
                               5000};
    const TransformOnChart transform{ChartManifold::unit_circle(),
                                     [](double t, std::span<const double> x) { return std::sin(t) * (1.0 + x[0] * x[0]); },
                                     [](double t, std::span<const double> x) { return std::cos(t) * (1.0 + x[0] * x[0]); },
                                     one, 5000};
    for (int r = 0; r < 20; ++r) {
        const double c0 = coef(engine);
        const double c1 = coef(engine);
        const double c2 = coef(engine);
        const double c3 = coef(engine);
        const ScalarField v = [=](std::span<const double> x) {
            return c0 + c1 * x[0] + c2 * x[1] + c3 * std::sin(x[0] * x[1]);
        };
        CHECK(std::abs(directional_derivative(linear, circle_truth, v).value -
                       central_difference(linear, circle_truth, v, 1e-4)) < 1e-3);
        CHECK(std::abs(directional_derivative(transform, circle_truth, v).value -
                       central_difference(transform, circle_truth, v, 1e-4)) < 1e-3);
    }
}

TEST_CASE("upper-contour band derivative equals the difference quotient for constant directions") {
    // For v = c > 0 and delta = eps / c, {h + delta v >= 0} minus
    // {h - delta v >= 0} is the band {-eps <= h < eps}, so both sides count
    // the same nodes.
    const UpperContour contour{one, Box::cube(2, -2.0, 2.0), 1e-3, 100000, 100000};
    for (double c : {0.5, 1.0, 2.0}) {
        const ScalarField v = [c](std::span<const double>) { return c; };
        const double band = directional_derivative(contour, disk_truth, v).value;
        const double fd = central_difference(contour, disk_truth, v, 1e-3 / c);
        CHECK(fd == doctest::Approx(band).epsilon(1e-12));
    }
}

TEST_CASE("upper-contour band derivative matches finite differences on a dense node set") {
    // At 100000 nodes a band node carries 0.08, more than the 0.05 tolerance,
    // so the comparison needs a denser set to resolve the band.
    std::mt19937_64 engine(123);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const UpperContour contour{one, Box::cube(2, -2.0, 2.0), 1e-3, 4000000, 4000000};
    for (int r = 0; r < 5; ++r) {
        const double c0 = coef(engine);
        const double c1 = coef(engine);
        const double c2 = coef(engine);
        const double c3 = coef(engine);
        const ScalarField v = [=](std::span<const double> x) {
            return c0 + c1 * x[0] + c2 * x[1] + c3 * std::sin(x[0] * x[1]);
        };
        CHECK(std::abs(directional_derivative(contour, disk_truth, v).value -
                       central_difference(contour, disk_truth, v, 1e-3)) < 0.05);
    }
}

TEST_CASE("transform derivative discrepancy") {
    CHECK(transform_derivative_discrepancy(square_transform(), -3.0, 3.0) < 1e-4);
    TransformOnChart wrong = square_transform();
    wrong.transform_dt = [](double t, std::span<const double>) { return 3.0 * t; };
    CHECK(transform_derivative_discrepancy(wrong, -3.0, 3.0) > 0.1);
}

TEST_CASE("missing callables are rejected") {
    LinearOnChart linear{ChartManifold::unit_circle(), ScalarField{}, 100};
    CHECK_THROWS_AS(evaluate(linear, circle_truth), InvalidArgument);
    TransformOnChart transform = square_transform();
    transform.transform_dt = {};
    CHECK_THROWS_AS(directional_derivative(transform, circle_truth, one), InvalidArgument);
}

TEST_CASE("remainder diagnostics") {
    DgpSpec quiet = DgpSpec::circle();
    quiet.noise_sd = 0.0;
    const Sample s = draw_sample(quiet, 4000, 3);
    const FittedSieve fit = fit_sieve(s, TensorSplineBasis::with_total_count(quiet.domain, 36));
    const FittedSieve fine = fit_sieve(s, TensorSplineBasis::with_total_count(quiet.domain, 64));
    const GradientField grad = [](std::span<const double> x) {
        Eigen::VectorXd g(2);
        g << 2.0 * x[0] + 2.0 * std::cos(x[0]) * x[1], 2.0 * std::sin(x[0]);
        return g;
    };
    const RemainderDiagnostics diag = remainder_diagnostics(fit, quiet.h0, grad);
    const RemainderDiagnostics finer = remainder_diagnostics(fine, quiet.h0, grad);
    REQUIRE(diag.sup_gradient_error.has_value());
    REQUIRE(finer.sup_gradient_error.has_value());
    // Without noise only approximation error remains, and it shrinks as the
    // knots get denser.
    CHECK(finer.sup_error < diag.sup_error);
    CHECK(*finer.sup_gradient_error < *diag.sup_gradient_error);
    CHECK_FALSE(remainder_diagnostics(fit, quiet.h0).sup_gradient_error.has_value());
}
