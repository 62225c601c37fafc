#include "cbid/data_model.hpp"

#include "cbid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

namespace cbid {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix data holds " + std::to_string(data_.size()) +
                             " values, expected " + std::to_string(rows_ * cols_));
    }
}

namespace {

int check_labels(std::span<const int> labels, int classes) {
    int k = classes;
    if (k == 0) {
        for (int y : labels) k = std::max(k, y);
    }
    if (k < 1) throw DataError("dataset has no classes");
    std::vector<std::size_t> population(static_cast<std::size_t>(k) + 1, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 1 || y > k) {
            throw DataError("label " + std::to_string(y) + " at row " + std::to_string(i) +
                            " outside 1.." + std::to_string(k));
        }
        ++population[static_cast<std::size_t>(y)];
    }
    for (int c = 1; c <= k; ++c) {
        if (population[static_cast<std::size_t>(c)] == 0) {
            throw DataError("class " + std::to_string(c) + " has no samples");
        }
    }
    return k;
}

void check_finite(const Matrix& m) {
    if (m.cols() == 0 && m.rows() > 0) throw DataError("feature dimension must be at least 1");
    const auto values = m.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DataError("non-finite feature value at row " + std::to_string(i / m.cols()));
        }
    }
}

// Members of each class, ascending index. Slot 0 unused.
std::vector<std::vector<std::uint32_t>> members_by_class(std::span<const int> labels, int k) {
    std::vector<std::vector<std::uint32_t>> members(static_cast<std::size_t>(k) + 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        members[static_cast<std::size_t>(labels[i])].push_back(static_cast<std::uint32_t>(i));
    }
    return members;
}

struct Neighbor {
    double dist;
    std::uint32_t index;
    bool operator<(const Neighbor& o) const {
        return dist < o.dist || (dist == o.dist && index < o.index);
    }
};

// The `count` nearest rows of `features` among `candidates`, skipping `exclude`.
std::vector<Neighbor> nearest(const Matrix& features, std::size_t query,
                              const std::vector<std::uint32_t>& candidates, std::size_t count,
                              std::size_t exclude) {
    std::vector<Neighbor> pool;
    pool.reserve(candidates.size());
    const auto q = features.row(query);
    for (auto c : candidates) {
        if (c == exclude) continue;
        pool.push_back({squared_distance(q, features.row(c)), c});
    }
    count = std::min(count, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count), pool.end());
    pool.resize(count);
    return pool;
}

constexpr std::size_t no_exclusion = static_cast<std::size_t>(-1);

}  // namespace

Dataset::Dataset(Matrix features, std::vector<int> labels, int classes)
    : features_(std::move(features)), labels_(std::move(labels)) {
    if (labels_.size() != features_.rows()) {
        throw DataError("feature rows (" + std::to_string(features_.rows()) +
                        ") and labels (" + std::to_string(labels_.size()) + ") differ in count");
    }
    if (features_.rows() == 0) throw DataError("dataset is empty");
    check_finite(features_);
    classes_ = check_labels(labels_, classes);
}

PatchSet::PatchSet(Matrix patches, std::vector<std::size_t> owners,
                   std::vector<int> image_labels, int classes)
    : patches_(std::move(patches)), owners_(std::move(owners)),
      image_labels_(std::move(image_labels)) {
    if (owners_.size() != patches_.rows()) {
        throw DataError("patch rows and owner ids differ in count");
    }
    if (patches_.rows() == 0) throw DataError("patch set is empty");
    check_finite(patches_);
    for (std::size_t p = 0; p < owners_.size(); ++p) {
        if (owners_[p] >= image_labels_.size()) {
            throw DataError("patch " + std::to_string(p) + " refers to unknown image " +
                            std::to_string(owners_[p]));
        }
    }
    classes_ = check_labels(image_labels_, classes);
}

std::vector<int> PatchSet::patch_labels() const {
    std::vector<int> out(size());
    for (std::size_t p = 0; p < size(); ++p) out[p] = label(p);
    return out;
}

const char* to_string(Mode mode) noexcept { return mode == Mode::image ? "image" : "patch"; }

Mode parse_mode(const std::string& text) {
    if (text == "image") return Mode::image;
    if (text == "patch") return Mode::patch;
    throw DataError("unknown mode '" + text + "' (expected image or patch)");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("vectors differ in dimension");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

void validate_triplets(const TripletSet& set, std::span<const int> labels) {
    std::set<Triplet> seen;
    for (std::size_t t = 0; t < set.size(); ++t) {
        const Triplet& tr = set.triples[t];
        const auto where = " in triple " + std::to_string(t);
        if (tr.anchor >= labels.size() || tr.hit >= labels.size() || tr.miss >= labels.size()) {
            throw DataError("sample index out of range" + where);
        }
        if (tr.anchor == tr.hit) throw DataError("anchor equals hit" + where);
        if (labels[tr.anchor] != labels[tr.hit]) throw DataError("hit has a different class" + where);
        if (labels[tr.miss] != tr.miss_class) throw DataError("miss class mismatch" + where);
        if (tr.miss_class == labels[tr.anchor]) throw DataError("miss shares the anchor class" + where);
        if (!seen.insert(tr).second) throw DataError("duplicate triple" + where);
    }
}

TripletSet mine_triplets_image(const Dataset& ds, std::size_t hits_per_anchor,
                               std::size_t misses_per_class) {
    if (hits_per_anchor < 1) throw DataError("hits_per_anchor must be at least 1");
    if (misses_per_class < 1) throw DataError("misses_per_class must be at least 1");
    const int k = ds.classes();
    const auto members = members_by_class(ds.labels(), k);
    for (int c = 1; c <= k; ++c) {
        const auto population = members[static_cast<std::size_t>(c)].size();
        if (population <= hits_per_anchor || population < misses_per_class) {
            throw DataError("insufficient class population: class " + std::to_string(c) + " has " +
                            std::to_string(population) + " samples, needs more than " +
                            std::to_string(hits_per_anchor) + " hits and at least " +
                            std::to_string(misses_per_class) + " misses");
        }
    }

    TripletSet out;
    out.mode = Mode::image;
    out.triples.reserve(ds.size() * static_cast<std::size_t>(k - 1) * hits_per_anchor *
                        misses_per_class);
    for (std::size_t a = 0; a < ds.size(); ++a) {
        const int y = ds.label(a);
        const auto hits = nearest(ds.features(), a, members[static_cast<std::size_t>(y)],
                                  hits_per_anchor, a);
        for (int r = 1; r <= k; ++r) {
            if (r == y) continue;
            const auto misses = nearest(ds.features(), a, members[static_cast<std::size_t>(r)],
                                        misses_per_class, no_exclusion);
            for (const auto& h : hits) {
                for (const auto& m : misses) {
                    out.triples.push_back({static_cast<std::uint32_t>(a), h.index, m.index, r});
                }
            }
        }
    }
    return out;
}

TripletSet mine_neighbors_patch(const PatchSet& ps) {
    const int k = ps.classes();
    const auto labels = ps.patch_labels();
    const auto members = members_by_class(labels, k);
    for (int c = 1; c <= k; ++c) {
        if (members[static_cast<std::size_t>(c)].size() < 2) {
            throw DataError("insufficient class population: class " + std::to_string(c) +
                            " owns fewer than 2 patches");
        }
    }
    if (k < 2) throw DataError("insufficient class population: patch mining needs two classes");

    TripletSet out;
    out.mode = Mode::patch;
    out.triples.reserve(ps.size());
    for (std::size_t p = 0; p < ps.size(); ++p) {
        const int y = labels[p];
        const auto hit = nearest(ps.patches(), p, members[static_cast<std::size_t>(y)], 1, p);
        Neighbor best{0.0, 0};
        bool found = false;
        for (int r = 1; r <= k; ++r) {
            if (r == y) continue;
            const auto miss = nearest(ps.patches(), p, members[static_cast<std::size_t>(r)], 1,
                                      no_exclusion);
            if (!found || miss.front() < best) {
                best = miss.front();
                found = true;
            }
        }
        out.triples.push_back({static_cast<std::uint32_t>(p), hit.front().index, best.index,
                               labels[best.index]});
    }
    return out;
}

}  // namespace cbid
