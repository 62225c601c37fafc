#pragma once

#include "cbid/data_model.hpp"
#include "cbid/hamming.hpp"
#include "cbid/weights.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cbid {

struct Prediction {
    int label = 0;
    /// Winning class distance (nbnn, i2c) or vote share of the winner (knn).
    double score = 0.0;
};

/// Patch-to-class rule: for each class, the sum over query patches of the smallest
/// weighted distance to that class's stored codes; smallest sum wins, ties to the lower label.
Prediction nbnn_classify(const CodeDatabase& db, const WeightedMetric& metric,
                         std::span<const BinaryCode> query_patches);

/// argmin_r min over stored codes of class r of the class-r weighted distance.
Prediction i2c_image_classify(const CodeDatabase& db, const WeightMatrix& w,
                              const BinaryCode& query);

/// Single metric for retrieval and kNN: the one column in patch mode, the column mean
/// in image mode.
WeightedMetric retrieval_metric(const WeightMatrix& w);

/// Majority label of the k nearest codes; ties go to the smaller summed distance, then
/// the smaller label.
Prediction knn_classify(const CodeDatabase& db, const WeightedMetric& metric,
                        const BinaryCode& query, std::size_t k);

/// Original-space rule: argmin_r sum_j ||p_j - NN_r(p_j)||^2 over the reference patches.
Prediction nbnn_reference_classify(const Matrix& reference, std::span<const int> labels,
                                   const Matrix& query_patches);
Prediction nbnn_reference_classify(const PatchSet& reference, const Matrix& query_patches);

}  // namespace cbid
