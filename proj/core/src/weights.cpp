#include "cbid/weights.hpp"

#include "cbid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace cbid {

WeightMatrix::WeightMatrix(std::size_t bits, std::size_t columns, std::vector<double> entries)
    : bits_(bits), columns_(columns), entries_(std::move(entries)) {
    if (entries_.size() != bits_ * columns_) {
        throw DimensionError("weight matrix expects " + std::to_string(bits_ * columns_) +
                             " entries, got " + std::to_string(entries_.size()));
    }
    for (double w : entries_) {
        if (!std::isfinite(w) || w < 0.0) throw DataError("weights must be finite and non-negative");
    }
}

void WeightMatrix::set(std::size_t s, std::size_t c, double value) {
    if (!std::isfinite(value) || value < 0.0) {
        throw DataError("weights must be finite and non-negative");
    }
    entries_[s * columns_ + c] = value;
}

std::vector<double> WeightMatrix::column(std::size_t c) const {
    std::vector<double> out(bits_);
    for (std::size_t s = 0; s < bits_; ++s) out[s] = (*this)(s, c);
    return out;
}

WeightMatrix WeightMatrix::with_extra_bit() const {
    WeightMatrix out(bits_ + 1, columns_);
    std::copy(entries_.begin(), entries_.end(), out.entries_.begin());
    return out;
}

}  // namespace cbid
