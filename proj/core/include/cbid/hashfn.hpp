#pragma once

#include "cbid/data_model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cbid {

/// Linear threshold unit h(x) = sign(beta . x + bias), with sign(0) = +1.
class HashFunction {
public:
    HashFunction() = default;
    HashFunction(std::vector<double> beta, double bias);

    std::size_t dim() const noexcept { return beta_.size(); }
    std::span<const double> beta() const noexcept { return beta_; }
    double bias() const noexcept { return bias_; }

    /// beta . x + bias
    double project(std::span<const double> x) const;

    friend bool operator==(const HashFunction&, const HashFunction&) = default;

private:
    std::vector<double> beta_;
    double bias_ = 0.0;
};

/// +1 iff beta . x + bias >= 0, else -1.
int eval_sign(const HashFunction& h, std::span<const double> x);

/// (2/pi) arctan(beta . x + bias), the differentiable surrogate of eval_sign.
double eval_smooth(const HashFunction& h, std::span<const double> x);

/// (2/pi) arctan(z) and its derivative with respect to z.
double smooth_sign(double z) noexcept;
double smooth_sign_derivative(double z) noexcept;

/// Packed code of t symbols in {-1,+1}. Bit s lives in word s/64 at position s%64;
/// a set bit means +1. Unused high bits of the last word are always zero.
class BinaryCode {
public:
    BinaryCode() = default;
    explicit BinaryCode(std::size_t bits);

    /// From a sequence of +1/-1 values (any non-negative value counts as +1).
    static BinaryCode from_signs(std::span<const int> signs);

    std::size_t size() const noexcept { return bits_; }
    std::span<const std::uint64_t> words() const noexcept { return words_; }

    int sign(std::size_t s) const { return (words_[s >> 6] >> (s & 63)) & 1U ? +1 : -1; }
    void set(std::size_t s, int sign);

    /// Byte `b` covers bits 8b..8b+7, bit 8b+j at position j.
    std::uint8_t byte(std::size_t b) const {
        return static_cast<std::uint8_t>(words_[b >> 3] >> ((b & 7) * 8));
    }
    std::size_t byte_count() const noexcept { return (bits_ + 7) / 8; }

    friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Ordered hash functions sharing one input dimension; function s produces bit s.
class CodeBook {
public:
    CodeBook() = default;
    explicit CodeBook(std::size_t dim) : dim_(dim) {}
    CodeBook(std::size_t dim, std::vector<HashFunction> functions);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t bit_count() const noexcept { return functions_.size(); }
    const std::vector<HashFunction>& functions() const noexcept { return functions_; }
    const HashFunction& operator[](std::size_t s) const { return functions_[s]; }

    void append(HashFunction h);

    BinaryCode encode(std::span<const double> x) const;

    friend bool operator==(const CodeBook&, const CodeBook&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<HashFunction> functions_;
};

/// Row i of the result is the code of row i of `xs`.
std::vector<BinaryCode> encode(const CodeBook& cb, const Matrix& xs);

}  // namespace cbid
