#include "cbid/hamming.hpp"

#include "cbid/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>

namespace cbid {

namespace {

void check_lengths(const WeightedMetric& metric, const BinaryCode& a, const BinaryCode& b) {
    if (a.size() != b.size() || a.size() != metric.bits()) {
        throw DimensionError("code lengths " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()) + " do not match metric of " +
                             std::to_string(metric.bits()) + " bits");
    }
}

// Distance contributed by the differing bits `x` of block `block`, ascending bit order.
double block_distance(std::span<const double> w, std::size_t block, unsigned x) {
    double partial = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
        const std::size_t s = block * 8 + j;
        if (s >= w.size()) break;
        if ((x >> j) & 1U) partial += 2.0 * w[s];
    }
    return partial;
}

}  // namespace

WeightedMetric::WeightedMetric(std::vector<double> weights) : weights_(std::move(weights)) {
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0) throw DataError("metric weights must be finite and non-negative");
    }
}

WeightedMetric WeightedMetric::uniform(std::size_t bits, double weight) {
    return WeightedMetric(std::vector<double>(bits, weight));
}

WeightedMetric WeightedMetric::from_column(const WeightMatrix& w, std::size_t c) {
    if (c >= w.columns()) throw DimensionError("weight column out of range");
    return WeightedMetric(w.column(c));
}

WeightedMetric WeightedMetric::scaled(double factor) const {
    auto w = weights_;
    for (auto& v : w) v *= factor;
    WeightedMetric out(std::move(w));
    return has_tables() ? build_tables(out) : out;
}

double weighted_hamming(const WeightedMetric& metric, const BinaryCode& a, const BinaryCode& b) {
    check_lengths(metric, a, b);
    double total = 0.0;
    for (std::size_t block = 0; block < a.byte_count(); ++block) {
        const unsigned x = static_cast<unsigned>(a.byte(block) ^ b.byte(block));
        if (x != 0) total += block_distance(metric.weights(), block, x);
    }
    return total;
}

WeightedMetric build_tables(const WeightedMetric& metric) {
    WeightedMetric out = metric;
    const std::size_t blocks = (metric.bits() + 7) / 8;
    out.tables_.assign(blocks, {});
    for (std::size_t block = 0; block < blocks; ++block) {
        for (unsigned x = 0; x < 256; ++x) {
            out.tables_[block][x] = block_distance(metric.weights(), block, x);
        }
    }
    return out;
}

double weighted_hamming_lookup(const WeightedMetric& metric, const BinaryCode& a,
                               const BinaryCode& b) {
    check_lengths(metric, a, b);
    if (!metric.has_tables()) throw Error("metric has no lookup tables; call build_tables first");
    const auto& tables = metric.tables();
    double total = 0.0;
    for (std::size_t block = 0; block < tables.size(); ++block) {
        const unsigned x = static_cast<unsigned>(a.byte(block) ^ b.byte(block));
        if (x != 0) total += tables[block][x];
    }
    return total;
}

std::size_t hamming_distance(const BinaryCode& a, const BinaryCode& b) {
    if (a.size() != b.size()) throw DimensionError("code lengths differ");
    std::size_t count = 0;
    const auto wa = a.words();
    const auto wb = b.words();
    for (std::size_t i = 0; i < wa.size(); ++i) count += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
    return count;
}

void CodeDatabase::add(std::int64_t id, int label, BinaryCode code) {
    if (code.size() != bits_) {
        throw DimensionError("code of " + std::to_string(code.size()) + " bits added to a " +
                             std::to_string(bits_) + "-bit database");
    }
    if (!id_set_.insert(id).second) {
        throw DataError("duplicate id " + std::to_string(id) + " in code database");
    }
    codes_.push_back(std::move(code));
    ids_.push_back(id);
    labels_.push_back(label);
}

int CodeDatabase::max_label() const noexcept {
    int k = 0;
    for (int y : labels_) k = std::max(k, y);
    return k;
}

CodeDatabase make_database(std::size_t bits, std::vector<BinaryCode> codes, std::span<const int> labels,
                           std::span<const std::int64_t> ids) {
    if (labels.size() != codes.size() || (!ids.empty() && ids.size() != codes.size())) {
        throw DimensionError("codes, labels and ids differ in count");
    }
    CodeDatabase db(bits);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const std::int64_t id = ids.empty() ? static_cast<std::int64_t>(i) : ids[i];
        db.add(id, labels[i], std::move(codes[i]));
    }
    return db;
}

namespace {

template <typename DistanceFn>
TopK scan(const CodeDatabase& db, std::size_t k, DistanceFn distance) {
    if (k < 1) throw DataError("k must be at least 1");
    TopK out;
    std::vector<Match> all;
    all.reserve(db.size());
    for (std::size_t i = 0; i < db.size(); ++i) {
        all.push_back({db.id(i), db.label(i), distance(i)});
    }
    if (k >= db.size()) {
        out.truncated = k > db.size();
        k = db.size();
    }
    const auto before = [](const Match& a, const Match& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), before);
    all.resize(k);
    out.matches = std::move(all);
    return out;
}

}  // namespace

TopK top_k(const CodeDatabase& db, const WeightedMetric& metric, const BinaryCode& query,
           std::size_t k) {
    if (metric.has_tables()) {
        return scan(db, k, [&](std::size_t i) {
            return weighted_hamming_lookup(metric, query, db.code(i));
        });
    }
    return scan(db, k,
                [&](std::size_t i) { return weighted_hamming(metric, query, db.code(i)); });
}

TopK top_k(const CodeDatabase& db, std::span<const WeightedMetric> class_metrics,
           const BinaryCode& query, std::size_t k) {
    return scan(db, k, [&](std::size_t i) {
        const int y = db.label(i);
        if (y < 1 || static_cast<std::size_t>(y) > class_metrics.size()) {
            throw DataError("no metric for class " + std::to_string(y));
        }
        return weighted_hamming(class_metrics[static_cast<std::size_t>(y - 1)], query, db.code(i));
    });
}

}  // namespace cbid
