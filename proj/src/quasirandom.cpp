#include "subman/quasirandom.hpp"

#include <bit>
#include <string>

namespace subman {

namespace {

struct DirectionEntry {
    int degree;
    std::uint32_t coefficients;
    std::array<std::uint32_t, 8> initial;
};

// Dimensions 2..16 of new-joe-kuo-6.21201 (s, a, m_1..m_s).
constexpr std::array<DirectionEntry, kMaxSobolDimension - 1> kJoeKuo = {{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
}};

}  // namespace

SobolStream::SobolStream(int dimension, std::uint64_t skip) : dimension_(dimension) {
    if (dimension < 1 || dimension > kMaxSobolDimension) {
        throw InvalidArgument("sobol dimension must be in [1, " + std::to_string(kMaxSobolDimension) +
                              "], got " + std::to_string(dimension));
    }
    if (skip >= (std::uint64_t{1} << kBits)) {
        throw InvalidArgument("sobol skip exceeds the 2^32 point period");
    }

    // First coordinate: van der Corput in base 2.
    for (int k = 0; k < kBits; ++k) directions_[0][k] = std::uint32_t{1} << (kBits - 1 - k);

    for (int j = 1; j < dimension; ++j) {
        const auto& e = kJoeKuo[j - 1];
        auto& v = directions_[j];
        const int s = e.degree;
        for (int k = 0; k < s && k < kBits; ++k) v[k] = e.initial[k] << (kBits - 1 - k);
        for (int k = s; k < kBits; ++k) {
            std::uint32_t value = v[k - s] ^ (v[k - s] >> s);
            for (int l = 1; l < s; ++l) {
                if ((e.coefficients >> (s - 1 - l)) & 1u) value ^= v[k - l];
            }
            v[k] = value;
        }
    }

    // Jump directly to the Gray-code state of the skipped prefix.
    const std::uint64_t gray = skip ^ (skip >> 1);
    for (int j = 0; j < dimension_; ++j) {
        std::uint32_t x = 0;
        for (int k = 0; k < kBits; ++k) {
            if ((gray >> k) & 1u) x ^= directions_[j][k];
        }
        state_[j] = x;
    }
    next_index_ = skip;
}

void SobolStream::next(std::span<double> out) {
    if (static_cast<int>(out.size()) != dimension_) {
        throw InvalidArgument("sobol output span has wrong dimension");
    }
    if (next_index_ >= (std::uint64_t{1} << kBits)) {
        throw NumericError("sobol stream exhausted its 2^32 point period");
    }
    constexpr double scale = 1.0 / 4294967296.0;
    for (int j = 0; j < dimension_; ++j) out[j] = static_cast<double>(state_[j]) * scale;

    // Advance: flip the direction number of the lowest zero bit of the index.
    const int c = std::countr_one(next_index_);
    if (c < kBits) {
        for (int j = 0; j < dimension_; ++j) state_[j] ^= directions_[j][c];
    }
    ++next_index_;
}

PointSet sobol_points(int dimension, std::size_t count, std::uint64_t skip) {
    if (count < 1) throw InvalidArgument("sobol point count must be positive");
    SobolStream stream(dimension, skip);
    PointSet points(static_cast<Eigen::Index>(count), dimension);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        stream.next({points.data() + i * dimension, static_cast<std::size_t>(dimension)});
    }
    return points;
}

PointSet scale_to_box(const PointSet& points, const Box& box) {
    if (points.cols() != box.dim()) {
        throw InvalidArgument("point dimension " + std::to_string(points.cols()) +
                              " does not match box dimension " + std::to_string(box.dim()));
    }
    for (int j = 0; j < box.dim(); ++j) {
        if (!(box.lower[j] < box.upper[j])) throw InvalidArgument("box requires lower < upper");
    }
    PointSet out(points.rows(), points.cols());
    const Eigen::RowVectorXd lo = box.lower.transpose();
    const Eigen::RowVectorXd width = (box.upper - box.lower).transpose();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        out.row(i) = lo + points.row(i).cwiseProduct(width);
    }
    return out;
}

}  // namespace subman
