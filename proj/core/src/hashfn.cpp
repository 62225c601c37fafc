#include "cbid/hashfn.hpp"

#include "cbid/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace cbid {

HashFunction::HashFunction(std::vector<double> beta, double bias)
    : beta_(std::move(beta)), bias_(bias) {
    if (beta_.empty()) throw DataError("hash function needs dimension >= 1");
    bool nonzero = false;
    for (double b : beta_) {
        if (!std::isfinite(b)) throw DataError("hash function coefficient is not finite");
        nonzero = nonzero || b != 0.0;
    }
    if (!std::isfinite(bias_)) throw DataError("hash function bias is not finite");
    if (!nonzero) throw DataError("hash function projection is identically zero");
}

double HashFunction::project(std::span<const double> x) const {
    if (x.size() != beta_.size()) {
        throw DimensionError("input has dimension " + std::to_string(x.size()) +
                             ", hash function expects " + std::to_string(beta_.size()));
    }
    double z = bias_;
    for (std::size_t i = 0; i < x.size(); ++i) z += beta_[i] * x[i];
    return z;
}

int eval_sign(const HashFunction& h, std::span<const double> x) {
    return h.project(x) >= 0.0 ? +1 : -1;
}

double smooth_sign(double z) noexcept { return (2.0 / std::numbers::pi) * std::atan(z); }

double smooth_sign_derivative(double z) noexcept {
    return (2.0 / std::numbers::pi) / (1.0 + z * z);
}

double eval_smooth(const HashFunction& h, std::span<const double> x) {
    return smooth_sign(h.project(x));
}

BinaryCode::BinaryCode(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

BinaryCode BinaryCode::from_signs(std::span<const int> signs) {
    BinaryCode code(signs.size());
    for (std::size_t s = 0; s < signs.size(); ++s) code.set(s, signs[s]);
    return code;
}

void BinaryCode::set(std::size_t s, int sign) {
    const std::uint64_t mask = std::uint64_t{1} << (s & 63);
    if (sign >= 0) {
        words_[s >> 6] |= mask;
    } else {
        words_[s >> 6] &= ~mask;
    }
}

CodeBook::CodeBook(std::size_t dim, std::vector<HashFunction> functions) : dim_(dim) {
    for (auto& h : functions) append(std::move(h));
}

void CodeBook::append(HashFunction h) {
    if (h.dim() != dim_) {
        throw DimensionError("hash function dimension " + std::to_string(h.dim()) +
                             " does not match codebook dimension " + std::to_string(dim_));
    }
    functions_.push_back(std::move(h));
}

BinaryCode CodeBook::encode(std::span<const double> x) const {
    if (x.size() != dim_) {
        throw DimensionError("input has dimension " + std::to_string(x.size()) +
                             ", codebook expects " + std::to_string(dim_));
    }
    BinaryCode code(functions_.size());
    for (std::size_t s = 0; s < functions_.size(); ++s) code.set(s, eval_sign(functions_[s], x));
    return code;
}

std::vector<BinaryCode> encode(const CodeBook& cb, const Matrix& xs) {
    if (xs.rows() > 0 && xs.cols() != cb.dim()) {
        throw DimensionError("feature dimension " + std::to_string(xs.cols()) +
                             " does not match codebook dimension " + std::to_string(cb.dim()));
    }
    std::vector<BinaryCode> codes;
    codes.reserve(xs.rows());
    for (std::size_t i = 0; i < xs.rows(); ++i) codes.push_back(cb.encode(xs.row(i)));
    return codes;
}

}  // namespace cbid
