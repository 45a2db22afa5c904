#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace subman {

/// Row-major point set: one point per row, so each row is a contiguous span.
using PointSet = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A real-valued function of a point in R^d.
using ScalarField = std::function<double(std::span<const double>)>;

inline std::span<const double> row_span(const PointSet& points, Eigen::Index row) {
    return {points.data() + row * points.cols(), static_cast<std::size_t>(points.cols())};
}

// Error hierarchy. Argument problems derive from std::invalid_argument,
// everything discovered while computing derives from std::runtime_error.

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class OutOfDomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedOperation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyNeighborhoodError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Axis-aligned box prod_j [lower_j, upper_j].
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    Box() = default;
    Box(Eigen::VectorXd lo, Eigen::VectorXd hi);

    /// The cube [lo, hi]^dim.
    static Box cube(int dim, double lo, double hi);

    int dim() const { return static_cast<int>(lower.size()); }
    double volume() const;
    bool contains(std::span<const double> x) const;
};

std::string format_point(std::span<const double> x);

}  // namespace subman
