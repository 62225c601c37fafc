#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace cbid::detail {

// Empty spans mean unbounded on that side.
struct Box {
    std::span<const double> lower;
    std::span<const double> upper;

    double lo(std::size_t i) const {
        return lower.empty() ? -std::numeric_limits<double>::infinity() : lower[i];
    }
    double hi(std::size_t i) const {
        return upper.empty() ? std::numeric_limits<double>::infinity() : upper[i];
    }
    double clamp(std::size_t i, double v) const { return std::min(std::max(v, lo(i)), hi(i)); }
};

// Infinity norm of x - P(x - g).
inline double projected_gradient_norm(const Box& box, std::span<const double> x, std::span<const double> g) {
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        norm = std::max(norm, std::abs(x[i] - box.clamp(i, x[i] - g[i])));
    }
    return norm;
}

}  // namespace cbid::detail
