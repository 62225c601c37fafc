#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cbid {

/// Dense row-major matrix of doubles. Rows are samples.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    std::span<const double> values() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Labeled feature rows. Labels are 1-based class ids in 1..k.
class Dataset {
public:
    Dataset() = default;
    /// Validates the invariants; `classes == 0` infers k as the largest label.
    Dataset(Matrix features, std::vector<int> labels, int classes = 0);

    std::size_t size() const noexcept { return features_.rows(); }
    std::size_t dim() const noexcept { return features_.cols(); }
    int classes() const noexcept { return classes_; }

    const Matrix& features() const noexcept { return features_; }
    std::span<const double> row(std::size_t i) const { return features_.row(i); }
    int label(std::size_t i) const { return labels_[i]; }
    const std::vector<int>& labels() const noexcept { return labels_; }

private:
    Matrix features_;
    std::vector<int> labels_;
    int classes_ = 0;
};

/// Local descriptors grouped by owning image. Each patch inherits its image's label.
class PatchSet {
public:
    PatchSet() = default;
    /// `owners[p]` is the 0-based image index of patch p; `image_labels` has one entry per image.
    PatchSet(Matrix patches, std::vector<std::size_t> owners, std::vector<int> image_labels,
             int classes = 0);

    std::size_t size() const noexcept { return patches_.rows(); }
    std::size_t dim() const noexcept { return patches_.cols(); }
    std::size_t images() const noexcept { return image_labels_.size(); }
    int classes() const noexcept { return classes_; }

    const Matrix& patches() const noexcept { return patches_; }
    std::span<const double> row(std::size_t p) const { return patches_.row(p); }
    std::size_t owner(std::size_t p) const { return owners_[p]; }
    int label(std::size_t p) const { return image_labels_[owners_[p]]; }
    int image_label(std::size_t i) const { return image_labels_[i]; }
    const std::vector<std::size_t>& owners() const noexcept { return owners_; }
    const std::vector<int>& image_labels() const noexcept { return image_labels_; }

    /// Per-patch labels, in patch order.
    std::vector<int> patch_labels() const;

private:
    Matrix patches_;
    std::vector<std::size_t> owners_;
    std::vector<int> image_labels_;
    int classes_ = 0;
};

enum class Mode { image, patch };

const char* to_string(Mode mode) noexcept;
Mode parse_mode(const std::string& text);

struct Triplet {
    std::uint32_t anchor = 0;
    std::uint32_t hit = 0;
    std::uint32_t miss = 0;
    int miss_class = 0;

    friend bool operator==(const Triplet&, const Triplet&) = default;
    friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

/// Mined (anchor, hit, miss) index triples. Indices refer to dataset rows (image
/// mode) or patch rows (patch mode).
struct TripletSet {
    Mode mode = Mode::image;
    std::vector<Triplet> triples;

    std::size_t size() const noexcept { return triples.size(); }
    bool empty() const noexcept { return triples.empty(); }
};

/// Checks the label relations of every triple against per-sample labels.
void validate_triplets(const TripletSet& set, std::span<const int> labels);

/// For every anchor, the `hits_per_anchor` nearest same-class samples crossed with the
/// `misses_per_class` nearest samples of each other class. Euclidean distance, ties to the
/// lower index. Sorted by (anchor, miss class, hit rank, miss rank).
TripletSet mine_triplets_image(const Dataset& ds, std::size_t hits_per_anchor = 5,
                               std::size_t misses_per_class = 5);

/// One (patch, nearest same-class patch, nearest other-class patch) triple per patch.
TripletSet mine_neighbors_patch(const PatchSet& ps);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace cbid
