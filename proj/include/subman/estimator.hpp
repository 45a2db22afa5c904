#pragma once

#include "subman/functionals.hpp"
#include "subman/spline_sieve.hpp"

#include <string>
#include <vector>

namespace subman {

struct EstimateDiagnostics {
    bool band_empty = false;
    int design_rank = 0;
};

/// Plug-in estimate with a normal confidence interval.
struct EstimateResult {
    double theta_hat = 0.0;
    double std_error = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double level = 0.95;
    EstimateDiagnostics diagnostics;

    bool covers(double truth) const { return ci_lower <= truth && truth <= ci_upper; }

    static std::string csv_header();
    /// theta_hat,std_error,ci_lower,ci_upper,level,band_empty,design_rank
    /// with 6 significant digits.
    std::string csv_row() const;
};

/// Two-sided normal critical value for a confidence level; exactly 1.96
/// at level 0.95.
double normal_critical_value(double level);

/// D Gamma(h_hat)[psi_k] for every basis function psi_k of the fit.
struct RieszVector {
    Eigen::VectorXd values;
    bool band_empty = false;
};

/// One shared node set; each node contributes to the (degree+1)^d basis
/// functions that are nonzero there.
RieszVector riesz_vector(const FunctionalSpec& spec, const FittedSieve& fit);

/// Heteroskedasticity-robust coefficient covariance
/// (Psi'Psi)^- (sum_i u_i^2 psi_i psi_i') (Psi'Psi)^-,
/// scaled so that r' Omega r estimates Var(r' beta_hat) directly.
Eigen::MatrixXd sandwich_covariance(const FittedSieve& fit);

/// theta_hat = Gamma(h_hat), SE = sqrt(r' Omega r), CI = theta_hat +- z SE.
EstimateResult estimate(const FunctionalSpec& spec, const FittedSieve& fit, double level = 0.95);

/// Gram matrix E[psi psi'] of the basis under the uniform density on its
/// domain box, exact up to rounding (Gauss-Legendre per knot span).
Eigen::MatrixXd uniform_gram(const TensorSplineBasis& basis);

/// Maps a basis to the vector (Gamma(psi_1), ..., Gamma(psi_K)) of a linear
/// functional.
using BasisFunctional = std::function<Eigen::VectorXd(const TensorSplineBasis&)>;

struct NormGrowthPoint {
    int total_count = 0;
    double squared_norm = 0.0;
};

struct NormGrowthReport {
    std::vector<NormGrowthPoint> points;
    double slope = 0.0;  // least-squares slope of log squared_norm on log K
};

/// Squared norm of Gamma over the uniform-orthonormalized tensor basis,
/// g' G^{-1} g with g = Gamma(psi) and G = uniform_gram, for each K.
NormGrowthReport riesz_norm_growth(const BasisFunctional& functional, std::span<const int> basis_sizes,
                                   const Box& domain, int degree = 3);
NormGrowthReport riesz_norm_growth(const LinearOnChart& spec, std::span<const int> basis_sizes,
                                   const Box& domain, int degree = 3);

/// Least-squares slope of log(y) on log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace subman
