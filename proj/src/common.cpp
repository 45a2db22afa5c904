#include "subman/common.hpp"

#include <sstream>

namespace subman {

Box::Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.size() == 0) {
        throw InvalidArgument("box bounds must be non-empty and of equal dimension");
    }
    for (Eigen::Index j = 0; j < lower.size(); ++j) {
        if (!(lower[j] < upper[j])) {
            throw InvalidArgument("box requires lower < upper in every coordinate");
        }
    }
}

Box Box::cube(int dim, double lo, double hi) {
    return Box(Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi));
}

double Box::volume() const {
    return (upper - lower).prod();
}

bool Box::contains(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != lower.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] >= lower[j] && x[j] <= upper[j])) return false;
    }
    return true;
}

std::string format_point(std::span<const double> x) {
    std::ostringstream os;
    os.precision(10);
    os << '(';
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j) os << ", ";
        os << x[j];
    }
    os << ')';
    return os.str();
}

}  // namespace subman
