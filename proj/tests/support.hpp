#pragma once

#include "cbid/data_model.hpp"
#include "cbid/hashfn.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace testing {

inline cbid::Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = normal(rng);
    return cbid::Matrix(rows, cols, std::move(v));
}

inline cbid::BinaryCode random_code(std::mt19937_64& rng, std::size_t bits) {
    std::bernoulli_distribution coin(0.5);
    cbid::BinaryCode code(bits);
    for (std::size_t s = 0; s < bits; ++s) code.set(s, coin(rng) ? 1 : -1);
    return code;
}

inline std::vector<double> random_weights(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> w(n);
    for (auto& x : w) x = unit(rng);
    return w;
}

/// Balanced labels 1..k, `per_class` samples each.
inline std::vector<int> balanced_labels(int k, std::size_t per_class) {
    std::vector<int> labels;
    for (int c = 1; c <= k; ++c) labels.insert(labels.end(), per_class, c);
    return labels;
}

}  // namespace testing
