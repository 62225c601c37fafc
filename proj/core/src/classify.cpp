#include "cbid/classify.hpp"

#include "cbid/errors.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

namespace cbid {

namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

// Members of labels 1..k; every class must be present.
std::vector<std::vector<std::size_t>> class_members(std::span<const int> labels, int k) {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 1 || y > k) throw DataError("label " + std::to_string(y) + " outside 1.." + std::to_string(k));
        members[static_cast<std::size_t>(y - 1)].push_back(i);
    }
    for (int c = 1; c <= k; ++c) {
        if (members[static_cast<std::size_t>(c - 1)].empty()) {
            throw DataError("class " + std::to_string(c) + " has no stored samples");
        }
    }
    return members;
}

std::vector<int> database_labels(const CodeDatabase& db) {
    std::vector<int> labels(db.size());
    for (std::size_t i = 0; i < db.size(); ++i) labels[i] = db.label(i);
    return labels;
}

Prediction argmin(std::span<const double> scores) {
    Prediction best{0, infinity};
    for (std::size_t c = 0; c < scores.size(); ++c) {
        if (best.label == 0 || scores[c] < best.score) best = {static_cast<int>(c) + 1, scores[c]};
    }
    return best;
}

}  // namespace

Prediction nbnn_classify(const CodeDatabase& db, const WeightedMetric& metric,
                         std::span<const BinaryCode> query_patches) {
    if (query_patches.empty()) throw DataError("query has no patches");
    if (db.empty()) throw DataError("code database is empty");
    const auto labels = database_labels(db);
    const auto members = class_members(labels, db.max_label());
    std::vector<double> totals(members.size(), 0.0);
    for (std::size_t c = 0; c < members.size(); ++c) {
        for (const auto& q : query_patches) {
            double nearest = infinity;
            for (auto i : members[c]) nearest = std::min(nearest, weighted_hamming(metric, q, db.code(i)));
            totals[c] += nearest;
        }
    }
    return argmin(totals);
}

Prediction i2c_image_classify(const CodeDatabase& db, const WeightMatrix& w,
                              const BinaryCode& query) {
    if (db.empty()) throw DataError("code database is empty");
    const int k = static_cast<int>(w.columns());
    if (db.max_label() > k) throw DataError("database has labels beyond the weight columns");
    const auto members = class_members(database_labels(db), k);
    std::vector<double> scores(members.size(), infinity);
    for (std::size_t c = 0; c < members.size(); ++c) {
        const WeightedMetric metric = WeightedMetric::from_column(w, c);
        for (auto i : members[c]) scores[c] = std::min(scores[c], weighted_hamming(metric, query, db.code(i)));
    }
    return argmin(scores);
}

WeightedMetric retrieval_metric(const WeightMatrix& w) {
    std::vector<double> mean(w.bits(), 0.0);
    if (w.columns() == 0) return WeightedMetric(std::move(mean));
    for (std::size_t s = 0; s < w.bits(); ++s) {
        for (std::size_t c = 0; c < w.columns(); ++c) mean[s] += w(s, c);
        mean[s] /= static_cast<double>(w.columns());
    }
    return WeightedMetric(std::move(mean));
}

Prediction knn_classify(const CodeDatabase& db, const WeightedMetric& metric,
                        const BinaryCode& query, std::size_t k) {
    if (db.empty()) throw DataError("code database is empty");
    const TopK nearest = top_k(db, metric, query, k);
    struct Tally {
        std::size_t votes = 0;
        double distance = 0.0;
    };
    std::map<int, Tally> tally;
    for (const auto& m : nearest.matches) {
        auto& t = tally[m.label];
        ++t.votes;
        t.distance += m.distance;
    }
    int winner = 0;
    Tally best;
    for (const auto& [label, t] : tally) {
        // std::map iterates labels in ascending order, so strict comparisons keep the smaller one.
        if (winner == 0 || t.votes > best.votes ||
            (t.votes == best.votes && t.distance < best.distance)) {
            winner = label;
            best = t;
        }
    }
    return {winner, static_cast<double>(best.votes) / static_cast<double>(nearest.matches.size())};
}

Prediction nbnn_reference_classify(const Matrix& reference, std::span<const int> labels,
                                   const Matrix& query_patches) {
    if (query_patches.empty()) throw DataError("query has no patches");
    if (reference.rows() != labels.size()) throw DimensionError("reference rows and labels differ");
    if (query_patches.cols() != reference.cols()) throw DimensionError("query patch dimension mismatch");
    int k = 0;
    for (int y : labels) k = std::max(k, y);
    const auto members = class_members(labels, k);
    std::vector<double> totals(members.size(), 0.0);
    for (std::size_t c = 0; c < members.size(); ++c) {
        for (std::size_t j = 0; j < query_patches.rows(); ++j) {
            double nearest = infinity;
            for (auto i : members[c]) {
                nearest = std::min(nearest, squared_distance(query_patches.row(j), reference.row(i)));
            }
            totals[c] += nearest;
        }
    }
    return argmin(totals);
}

Prediction nbnn_reference_classify(const PatchSet& reference, const Matrix& query_patches) {
    return nbnn_reference_classify(reference.patches(), reference.patch_labels(), query_patches);
}

}  // namespace cbid
