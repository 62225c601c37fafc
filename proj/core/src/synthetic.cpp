#include "cbid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace cbid::synthetic {

Dataset spiral(const SpiralOptions& options, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, options.noise);
    const double max_angle = 2.0 * std::numbers::pi * options.turns;

    const std::size_t n = options.per_class;
    std::vector<double> values;
    values.reserve(4 * n);
    std::vector<int> labels;
    labels.reserve(2 * n);
    for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            // Uniform in area along the arm: sqrt of a uniform fraction.
            const double fraction = unit(rng);
            const double theta = max_angle * fraction;
            const double radius = std::sqrt(fraction);
            const double phase = c == 0 ? 0.0 : std::numbers::pi;
            values.push_back(radius * std::cos(theta + phase) + jitter(rng));
            values.push_back(radius * std::sin(theta + phase) + jitter(rng));
            labels.push_back(c + 1);
        }
    }
    return Dataset(Matrix(2 * n, 2, std::move(values)), std::move(labels), 2);
}

Dataset blobs(const BlobOptions& options, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, options.sigma);
    const double offset = options.separation * options.sigma / std::numbers::sqrt2;
    const std::size_t total = static_cast<std::size_t>(options.classes) * options.per_class;
    std::vector<double> values;
    values.reserve(total * options.dim);
    std::vector<int> labels;
    labels.reserve(total);
    for (int c = 0; c < options.classes; ++c) {
        for (std::size_t i = 0; i < options.per_class; ++i) {
            for (std::size_t j = 0; j < options.dim; ++j) {
                const double center = j == static_cast<std::size_t>(c) % options.dim ? offset : 0.0;
                values.push_back(center + noise(rng));
            }
            labels.push_back(c + 1);
        }
    }
    return Dataset(Matrix(total, options.dim, std::move(values)), std::move(labels), options.classes);
}

RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_dim,
                               std::size_t max_triplets) {
    std::uniform_int_distribution<std::size_t> dim_dist(1, max_dim);
    std::uniform_int_distribution<int> class_dist(2, 3);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> open_unit(0.01, 0.99);

    const std::size_t d = dim_dist(rng);
    const int k = class_dist(rng);
    const std::size_t per_class = 4;
    const std::size_t m = per_class * static_cast<std::size_t>(k);
    std::vector<double> values(m * d);
    for (auto& v : values) v = normal(rng);
    std::vector<int> labels(m);
    for (std::size_t i = 0; i < m; ++i) labels[i] = static_cast<int>(i / per_class) + 1;
    Dataset ds(Matrix(m, d, std::move(values)), std::move(labels), k);

    std::uniform_int_distribution<std::size_t> count_dist(1, max_triplets);
    const std::size_t wanted = count_dist(rng);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    std::set<Triplet> chosen;
    for (std::size_t attempt = 0; chosen.size() < wanted && attempt < 100 * wanted; ++attempt) {
        const auto a = pick(rng);
        const auto h = pick(rng);
        const auto x = pick(rng);
        if (a == h || ds.label(a) != ds.label(h) || ds.label(x) == ds.label(a)) continue;
        chosen.insert({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(h),
                       static_cast<std::uint32_t>(x), ds.label(x)});
    }
    TripletSet triplets{Mode::image, {chosen.begin(), chosen.end()}};

    DualState duals;
    duals.values.resize(triplets.size());
    for (auto& u : duals.values) u = open_unit(rng);

    std::vector<double> beta(d);
    for (auto& b : beta) b = normal(rng);
    const double bias = normal(rng);
    std::uniform_int_distribution<int> r_dist(1, k);
    const int r = r_dist(rng);
    return {std::move(ds), std::move(triplets), std::move(duals), HashFunction(std::move(beta), bias), r};
}

}  // namespace cbid::synthetic
