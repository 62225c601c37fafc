#include "cbid/errors.hpp"
#include "cbid/hamming.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace cbid;

namespace {

double naive(std::span<const double> w, const BinaryCode& a, const BinaryCode& b) {
    double sum = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s) sum += w[s] * std::abs(a.sign(s) - b.sign(s));
    return sum;
}

}  // namespace

TEST_CASE("weighted_hamming examples") {
    const auto a = BinaryCode::from_signs(std::vector<int>{1, -1, 1});
    const auto b = BinaryCode::from_signs(std::vector<int>{1, 1, -1});
    const WeightedMetric m({1.0, 2.0, 3.0});
    CHECK(weighted_hamming(m, a, a) == 0.0);
    CHECK(weighted_hamming(m, a, b) == 10.0);
    CHECK(hamming_distance(a, b) == 2);
    CHECK(weighted_hamming(WeightedMetric::uniform(3), a, b) == 4.0);
    CHECK(weighted_hamming(WeightedMetric(std::vector<double>(3, 0.0)), a, b) == 0.0);
    CHECK_THROWS_AS(weighted_hamming(m, a, BinaryCode(4)), DimensionError);
    CHECK_THROWS_AS(WeightedMetric({1.0, -1.0}), DataError);
}

TEST_CASE("weighted_hamming is a pseudometric and scales with the weights") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t = 1 + trial % 70;
        const WeightedMetric m(testing::random_weights(rng, t));
        const auto a = testing::random_code(rng, t);
        const auto b = testing::random_code(rng, t);
        const auto c = testing::random_code(rng, t);
        const double ab = weighted_hamming(m, a, b);
        CHECK(ab >= 0.0);
        CHECK(ab == weighted_hamming(m, b, a));
        CHECK(ab <= weighted_hamming(m, a, c) + weighted_hamming(m, c, b) + 1e-12);
        CHECK(ab == doctest::Approx(naive(m.weights(), a, b)).epsilon(1e-13));
        CHECK(weighted_hamming(m.scaled(3.0), a, b) == doctest::Approx(3.0 * ab).epsilon(1e-14));
    }
}

TEST_CASE("table lookup equals the naive sum") {
    std::mt19937_64 rng(5);
    for (std::size_t t : {1U, 8U, 13U, 20U, 64U, 256U}) {
        const WeightedMetric m(testing::random_weights(rng, t));
        const auto tabled = build_tables(m);
        CHECK(tabled.tables().size() == (t + 7) / 8);
        for (int pair = 0; pair < 500; ++pair) {
            const auto a = testing::random_code(rng, t);
            const auto b = testing::random_code(rng, t);
            const double lookup = weighted_hamming_lookup(tabled, a, b);
            CHECK(std::abs(lookup - naive(m.weights(), a, b)) <= 1e-12 * std::max(1.0, lookup));
            CHECK(lookup == weighted_hamming(m, a, b));
        }
    }
    CHECK_THROWS_AS(weighted_hamming_lookup(WeightedMetric::uniform(8), BinaryCode(8), BinaryCode(8)), Error);
}

TEST_CASE("code database validation") {
    CodeDatabase db(4);
    db.add(7, 1, BinaryCode(4));
    CHECK_THROWS_AS(db.add(7, 2, BinaryCode(4)), DataError);
    CHECK_THROWS_AS(db.add(8, 2, BinaryCode(5)), DimensionError);
    CHECK(db.max_label() == 1);
    CHECK(CodeDatabase(4).max_label() == 0);
}

TEST_CASE("top_k examples") {
    std::vector<BinaryCode> codes{BinaryCode::from_signs(std::vector<int>{1, 1}),
                                  BinaryCode::from_signs(std::vector<int>{-1, 1}),
                                  BinaryCode::from_signs(std::vector<int>{1, -1}),
                                  BinaryCode::from_signs(std::vector<int>{1, 1})};
    const std::vector<int> labels{1, 2, 2, 1};
    const std::vector<std::int64_t> ids{40, 10, 30, 20};
    const auto db = make_database(2, codes, labels, ids);
    const WeightedMetric m({1.0, 2.0});
    const auto query = BinaryCode::from_signs(std::vector<int>{1, 1});

    const auto r = top_k(db, m, query, 3);
    REQUIRE(r.matches.size() == 3);
    CHECK(r.matches[0] == Match{20, 1, 0.0});  // tie at 0 goes to the smaller id
    CHECK(r.matches[1] == Match{40, 1, 0.0});
    CHECK(r.matches[2] == Match{10, 2, 2.0});
    CHECK_FALSE(r.truncated);

    const auto all = top_k(db, m, query, 10);
    CHECK(all.matches.size() == 4);
    CHECK(all.truncated);
    CHECK(top_k(CodeDatabase(2), m, query, 1).matches.empty());
    CHECK_THROWS_AS(top_k(db, m, query, 0), DataError);
}

TEST_CASE("top_k equals a full sort") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t t = 4 + trial % 40;
        const std::size_t n = 30 + trial;
        std::vector<BinaryCode> codes;
        std::vector<int> labels;
        for (std::size_t i = 0; i < n; ++i) {
            codes.push_back(testing::random_code(rng, t));
            labels.push_back(1 + static_cast<int>(i % 3));
        }
        // Integer weights make ties common.
        std::vector<double> w(t);
        std::uniform_int_distribution<int> small(0, 2);
        for (auto& v : w) v = small(rng);
        const WeightedMetric m(w);
        const auto db = make_database(t, codes, labels);
        const auto query = testing::random_code(rng, t);

        std::vector<Match> all;
        for (std::size_t i = 0; i < n; ++i) {
            all.push_back({db.id(i), db.label(i), naive(w, query, db.code(i))});
        }
        std::sort(all.begin(), all.end(), [](const Match& a, const Match& b) {
            return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
        });
        const std::size_t k = 1 + trial % 12;
        const auto got = top_k(db, m, query, k);
        CHECK(got.matches == std::vector<Match>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k)));
    }
}

TEST_CASE("top_k with per-class metrics") {
    std::mt19937_64 rng(12);
    const std::size_t t = 16;
    std::vector<BinaryCode> codes;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        codes.push_back(testing::random_code(rng, t));
        labels.push_back(1 + i % 2);
    }
    const auto db = make_database(t, codes, labels);
    const std::vector<WeightedMetric> metrics{WeightedMetric(testing::random_weights(rng, t)),
                                              WeightedMetric(testing::random_weights(rng, t))};
    const auto query = testing::random_code(rng, t);
    std::vector<Match> all;
    for (std::size_t i = 0; i < db.size(); ++i) {
        all.push_back({db.id(i), db.label(i),
                       naive(metrics[static_cast<std::size_t>(db.label(i) - 1)].weights(), query, db.code(i))});
    }
    std::sort(all.begin(), all.end(), [](const Match& a, const Match& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
    const auto got = top_k(db, metrics, query, 5);
    REQUIRE(got.matches.size() == 5);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(got.matches[j].id == all[j].id);
        CHECK(got.matches[j].distance == doctest::Approx(all[j].distance).epsilon(1e-13));
    }
    const std::vector<WeightedMetric> one{metrics[0]};
    CHECK_THROWS_AS(top_k(db, one, query, 5), DataError);
}
