#pragma once

#include "subman/common.hpp"

#include <array>
#include <cstdint>

namespace subman {

inline constexpr int kMaxSobolDimension = 16;

/// Unscrambled Sobol sequence using the Joe-Kuo (new-joe-kuo-6.21201)
/// direction numbers, emitted in Gray-code order.
///
/// Point indexing is 1-based: point 1 is the origin, point 2 is (1/2, ..., 1/2),
/// and so on. A stream constructed with `skip` starts at point skip + 1.
class SobolStream {
public:
    static constexpr int kBits = 32;

    explicit SobolStream(int dimension, std::uint64_t skip = 0);

    int dimension() const { return dimension_; }

    /// Number of points consumed so far, including the skipped prefix.
    std::uint64_t next_index() const { return next_index_; }

    /// Writes the next point into `out` (size must equal dimension()).
    void next(std::span<double> out);

private:
    int dimension_;
    std::uint64_t next_index_ = 0;
    std::array<std::array<std::uint32_t, kBits>, kMaxSobolDimension> directions_{};
    std::array<std::uint32_t, kMaxSobolDimension> state_{};
};

/// `count` consecutive Sobol points starting at point skip + 1.
PointSet sobol_points(int dimension, std::size_t count, std::uint64_t skip = 0);

/// Affine map of unit-cube points onto `box`: lower + x * (upper - lower).
PointSet scale_to_box(const PointSet& points, const Box& box);

}  // namespace subman
