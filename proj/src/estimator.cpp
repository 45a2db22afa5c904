#include "subman/estimator.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstdio>

namespace subman {

std::string EstimateResult::csv_header() {
    return "theta_hat,std_error,ci_lower,ci_upper,level,band_empty,design_rank";
}

std::string EstimateResult::csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g,%.6g,%d,%d", theta_hat, std_error, ci_lower, ci_upper,
                  level, diagnostics.band_empty ? 1 : 0, diagnostics.design_rank);
    return buf;
}

double normal_critical_value(double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
    if (level == 0.95) return 1.96;
    return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

RieszVector riesz_vector(const FunctionalSpec& spec, const FittedSieve& fit) {
    const DerivativeRule d = derivative_rule(spec, fit.as_field());
    const TensorSplineBasis& basis = fit.basis();
    RieszVector out{Eigen::VectorXd::Zero(basis.total_count()), d.band_empty};
    SparseBasisRow row;
    for (Eigen::Index j = 0; j < d.rule.size(); ++j) {
        basis.evaluate_sparse(row_span(d.rule.points, j), row);
        const double w = d.rule.weight(j);
        for (int a = 0; a < row.count; ++a) out.values[row.index[a]] += w * row.value[a];
    }
    return out;
}

Eigen::MatrixXd sandwich_covariance(const FittedSieve& fit) {
    const TensorSplineBasis& basis = fit.basis();
    const int k = basis.total_count();
    const Eigen::MatrixXd& x = fit.design_points();
    const Eigen::VectorXd& u = fit.residuals();
    const auto n = static_cast<double>(fit.sample_size());

    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    SparseBasisRow row;
    std::vector<double> point(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) point[j] = x(i, j);
        basis.evaluate_sparse(point, row);
        const double u2 = u[i] * u[i];
        for (int a = 0; a < row.count; ++a) {
            const double va = u2 * row.value[a];
            for (int b = 0; b < row.count; ++b) meat(row.index[a], row.index[b]) += va * row.value[b];
        }
    }
    // gram_inverse is (Psi'Psi / n)^-, so (Psi'Psi)^- = gram_inverse / n.
    const Eigen::MatrixXd& bread = fit.gram_inverse();
    Eigen::MatrixXd omega = bread * meat * bread / (n * n);
    return 0.5 * (omega + omega.transpose());
}

EstimateResult estimate(const FunctionalSpec& spec, const FittedSieve& fit, double level) {
    const double z = normal_critical_value(level);
    EstimateResult out;
    out.level = level;
    out.theta_hat = evaluate(spec, fit.as_field());
    const RieszVector r = riesz_vector(spec, fit);
    const double variance = r.values.dot(sandwich_covariance(fit) * r.values);
    out.std_error = std::sqrt(std::max(0.0, variance));
    out.ci_lower = out.theta_hat - z * out.std_error;
    out.ci_upper = out.theta_hat + z * out.std_error;
    out.diagnostics.band_empty = r.band_empty;
    out.diagnostics.design_rank = fit.design_rank();
    return out;
}

Eigen::MatrixXd uniform_gram(const TensorSplineBasis& basis) {
    const int j_count = basis.per_dim_count();
    const int p = basis.degree();
    const Eigen::VectorXd& knots = basis.knots().front();
    using Rule = boost::math::quadrature::gauss<double, 8>;  // exact to degree 15 >= 2 * kMaxSplineDegree

    // Univariate Gram on [0, 1] with unit density.
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(j_count, j_count);
    for (int s = p; s < j_count; ++s) {
        const double a = knots[s];
        const double b = knots[s + 1];
        if (!(b > a)) continue;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        auto add = [&](double node, double weight) {
            const Eigen::VectorXd v = bspline_basis_1d(mid + half * node, knots, p);
            g1.noalias() += (half * weight) * v * v.transpose();
        };
        const auto& abscissa = Rule::abscissa();
        const auto& weights = Rule::weights();
        for (std::size_t q = 0; q < abscissa.size(); ++q) {
            add(abscissa[q], weights[q]);
            if (abscissa[q] != 0.0) add(-abscissa[q], weights[q]);
        }
    }

    Eigen::MatrixXd g = Eigen::MatrixXd::Ones(1, 1);
    for (int l = 0; l < basis.dimension(); ++l) {
        Eigen::MatrixXd next(g.rows() * j_count, g.cols() * j_count);
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            for (Eigen::Index c = 0; c < g.cols(); ++c) {
                next.block(r * j_count, c * j_count, j_count, j_count) = g(r, c) * g1;
            }
        }
        g = std::move(next);
    }
    return g;
}

NormGrowthReport riesz_norm_growth(const BasisFunctional& functional, std::span<const int> basis_sizes,
                                   const Box& domain, int degree) {
    if (basis_sizes.size() < 3) throw InvalidArgument("norm growth needs at least 3 basis sizes");
    NormGrowthReport report;
    std::vector<double> ks;
    std::vector<double> norms;
    for (const int k : basis_sizes) {
        const TensorSplineBasis basis = TensorSplineBasis::with_total_count(domain, k, degree);
        const Eigen::VectorXd g = functional(basis);
        if (g.size() != basis.total_count()) throw InvalidArgument("basis functional returned the wrong length");
        const Eigen::LLT<Eigen::MatrixXd> llt(uniform_gram(basis));
        if (llt.info() != Eigen::Success) throw NumericError("uniform Gram matrix is not positive definite");
        const double squared = g.dot(llt.solve(g));
        report.points.push_back({k, squared});
        ks.push_back(k);
        norms.push_back(squared);
    }
    report.slope = loglog_slope(ks, norms);
    return report;
}

NormGrowthReport riesz_norm_growth(const LinearOnChart& spec, std::span<const int> basis_sizes,
                                   const Box& domain, int degree) {
    const FunctionalSpec wrapped = spec;
    const ScalarField zero = [](std::span<const double>) { return 0.0; };
    const DerivativeRule d = derivative_rule(wrapped, zero);
    const BasisFunctional functional = [&d](const TensorSplineBasis& basis) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(basis.total_count());
        SparseBasisRow row;
        for (Eigen::Index j = 0; j < d.rule.size(); ++j) {
            basis.evaluate_sparse(row_span(d.rule.points, j), row);
            for (int a = 0; a < row.count; ++a) g[row.index[a]] += d.rule.weight(j) * row.value[a];
        }
        return g;
    };
    return riesz_norm_growth(functional, basis_sizes, domain, degree);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("log-log slope needs matching inputs");
    const auto m = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("log-log slope needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= m;
    my /= m;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw InvalidArgument("log-log slope needs at least two distinct x values");
    return sxy / sxx;
}

}  // namespace subman
