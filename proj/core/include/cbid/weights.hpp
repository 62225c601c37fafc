#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cbid {

/// Non-negative Hamming weights: one row per bit, one column per class (image mode)
/// or a single column (patch mode).
class WeightMatrix {
public:
    WeightMatrix() = default;
    WeightMatrix(std::size_t bits, std::size_t columns)
        : bits_(bits), columns_(columns), entries_(bits * columns, 0.0) {}
    /// Row-major entries; all must be finite and >= 0.
    WeightMatrix(std::size_t bits, std::size_t columns, std::vector<double> entries);

    std::size_t bits() const noexcept { return bits_; }
    std::size_t columns() const noexcept { return columns_; }

    double operator()(std::size_t s, std::size_t c) const { return entries_[s * columns_ + c]; }
    void set(std::size_t s, std::size_t c, double value);

    std::span<const double> entries() const noexcept { return entries_; }
    /// Weights of class column c, one per bit.
    std::vector<double> column(std::size_t c) const;

    /// Copy with one extra all-zero bit row appended.
    WeightMatrix with_extra_bit() const;

    friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

private:
    std::size_t bits_ = 0;
    std::size_t columns_ = 0;
    std::vector<double> entries_;
};

}  // namespace cbid
