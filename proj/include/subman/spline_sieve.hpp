#pragma once

#include "subman/common.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace subman {

/// Estimation data: n observations of (X in R^d, Y).
struct Sample {
    Eigen::MatrixXd x;  // n x d
    Eigen::VectorXd y;  // n
    Box domain;

    Sample() = default;
    Sample(Eigen::MatrixXd x, Eigen::VectorXd y, Box domain);

    Eigen::Index size() const { return y.size(); }
    int dim() const { return static_cast<int>(x.cols()); }

    /// Throws OutOfDomainError naming the first row outside the domain box,
    /// InvalidArgument on shape problems or non-finite responses.
    void validate() const;
};

/// Reads a `x1,...,xd,y` CSV. The header must have exactly domain.dim() + 1
/// columns. Rows are validated against the domain.
Sample read_sample_csv(std::istream& in, const Box& domain);
Sample read_sample_csv(const std::string& path, const Box& domain);
void write_sample_csv(std::ostream& out, const Sample& sample);

/// Clamped knot vector with uniform interior knots on [0, 1]:
/// per_dim_count + degree + 1 entries.
Eigen::VectorXd clamped_uniform_knots(int per_dim_count, int degree);

/// All J = knots.size() - degree - 1 B-spline values at t (Cox-de Boor).
/// Throws OutOfDomainError when t lies outside [knots[degree], knots[J]].
Eigen::VectorXd bspline_basis_1d(double t, const Eigen::VectorXd& knots, int degree);

inline constexpr int kMaxSplineDegree = 7;
inline constexpr int kMaxSieveDimension = 8;

/// The nonzero entries of a tensor basis vector at one point.
struct SparseBasisRow {
    static constexpr int kCapacity = 4096;
    int count = 0;
    std::array<int, kCapacity> index{};
    std::array<double, kCapacity> value{};
};

/// Tensor-product B-spline sieve over a box.
///
/// Covariates are mapped affinely from the domain box to [0,1]^d before the
/// knot vectors are applied. Flattening is row-major over dimensions: the
/// multi-index (k_1, ..., k_d) maps to ((k_1 * J + k_2) * J + ...) + k_d.
class TensorSplineBasis {
public:
    TensorSplineBasis(Box domain, int per_dim_count, int degree = 3);

    /// Chooses J with J^d == total_count; throws if no such integer exists.
    static TensorSplineBasis with_total_count(Box domain, int total_count, int degree = 3);

    int degree() const { return degree_; }
    int per_dim_count() const { return per_dim_count_; }
    int dimension() const { return domain_.dim(); }
    int total_count() const { return total_count_; }
    const Box& domain() const { return domain_; }
    const std::vector<Eigen::VectorXd>& knots() const { return knots_; }

    /// Dense K-vector of basis values.
    Eigen::VectorXd evaluate(std::span<const double> x) const;

    /// Nonzero basis values only; at most (degree+1)^d entries.
    void evaluate_sparse(std::span<const double> x, SparseBasisRow& out) const;

    /// Dense K x d matrix of partial derivatives (needs degree >= 1).
    Eigen::MatrixXd evaluate_gradient(std::span<const double> x) const;

private:
    // Nonzero values (and optionally first derivatives, in unit coordinates)
    // of the univariate basis along one axis. Returns the first nonzero index.
    int local_basis(int axis, double x, double* values, double* derivs) const;

    Box domain_;
    int per_dim_count_;
    int degree_;
    int total_count_;
    std::vector<Eigen::VectorXd> knots_;
};

/// Least-squares fit of a tensor spline sieve.
class FittedSieve {
public:
    const TensorSplineBasis& basis() const { return basis_; }
    const Eigen::VectorXd& coefficients() const { return coefficients_; }
    /// Normalized Gram matrix Psi'Psi / n.
    const Eigen::MatrixXd& gram() const { return gram_; }
    /// Pseudo-inverse of gram().
    const Eigen::MatrixXd& gram_inverse() const { return gram_inverse_; }
    const Eigen::VectorXd& residuals() const { return residuals_; }
    const Eigen::MatrixXd& design_points() const { return design_points_; }
    int design_rank() const { return design_rank_; }
    Eigen::Index sample_size() const { return residuals_.size(); }

    double predict(std::span<const double> x) const;
    Eigen::VectorXd predict_gradient(std::span<const double> x) const;

    /// The fitted function as a ScalarField. The returned object refers to
    /// *this and must not outlive it.
    ScalarField as_field() const;

    friend FittedSieve fit_sieve(const Sample& sample, const TensorSplineBasis& basis);

private:
    explicit FittedSieve(TensorSplineBasis basis) : basis_(std::move(basis)) {}

    TensorSplineBasis basis_;
    Eigen::VectorXd coefficients_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd gram_inverse_;
    Eigen::VectorXd residuals_;
    Eigen::MatrixXd design_points_;
    int design_rank_ = 0;
};

/// Relative singular-value cutoff of the Gram pseudo-inverse.
inline constexpr double kPseudoInverseTolerance = 1e-10;

/// Minimum-norm least squares: coefficients = (Psi'Psi)^- Psi'y.
FittedSieve fit_sieve(const Sample& sample, const TensorSplineBasis& basis);

/// Symmetric pseudo-inverse with relative eigenvalue cutoff; rank via `rank`.
Eigen::MatrixXd symmetric_pseudo_inverse(const Eigen::MatrixXd& a, double rel_tol, int* rank = nullptr);

}  // namespace subman
