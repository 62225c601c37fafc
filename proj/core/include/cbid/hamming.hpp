#pragma once

#include "cbid/hashfn.hpp"
#include "cbid/weights.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

namespace cbid {

/// Per-bit non-negative weights, optionally with 256-entry tables per 8-bit block.
class WeightedMetric {
public:
    WeightedMetric() = default;
    explicit WeightedMetric(std::vector<double> weights);

    static WeightedMetric uniform(std::size_t bits, double weight = 1.0);
    /// Column c of W.
    static WeightedMetric from_column(const WeightMatrix& w, std::size_t c);

    std::size_t bits() const noexcept { return weights_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }

    bool has_tables() const noexcept { return !tables_.empty(); }
    /// tables()[b][x]: distance contributed by XOR byte x in block b.
    const std::vector<std::array<double, 256>>& tables() const noexcept { return tables_; }

    WeightedMetric scaled(double factor) const;

private:
    friend WeightedMetric build_tables(const WeightedMetric& metric);

    std::vector<double> weights_;
    std::vector<std::array<double, 256>> tables_;
};

/// sum_s w_s |a_s - b_s| = 2 sum of weights over differing bits. Summed block by block
/// (8 bits, ascending) so the table path reproduces it bit for bit.
double weighted_hamming(const WeightedMetric& metric, const BinaryCode& a, const BinaryCode& b);

/// Copy of `metric` with one 256-entry table per 8-bit block; the trailing partial
/// block treats missing bits as weight zero.
WeightedMetric build_tables(const WeightedMetric& metric);

/// Table-driven distance; requires build_tables.
double weighted_hamming_lookup(const WeightedMetric& metric, const BinaryCode& a,
                               const BinaryCode& b);

/// Plain Hamming distance (number of differing bits).
std::size_t hamming_distance(const BinaryCode& a, const BinaryCode& b);

/// Codes with their sample ids and class labels.
class CodeDatabase {
public:
    CodeDatabase() = default;
    explicit CodeDatabase(std::size_t bits) : bits_(bits) {}

    /// Throws on length mismatch or duplicate id.
    void add(std::int64_t id, int label, BinaryCode code);

    std::size_t bits() const noexcept { return bits_; }
    std::size_t size() const noexcept { return codes_.size(); }
    bool empty() const noexcept { return codes_.empty(); }

    const BinaryCode& code(std::size_t i) const { return codes_[i]; }
    std::int64_t id(std::size_t i) const { return ids_[i]; }
    int label(std::size_t i) const { return labels_[i]; }
    const std::vector<BinaryCode>& codes() const noexcept { return codes_; }

    /// Largest label present, 0 when empty.
    int max_label() const noexcept;

private:
    std::size_t bits_ = 0;
    std::vector<BinaryCode> codes_;
    std::vector<std::int64_t> ids_;
    std::vector<int> labels_;
    std::unordered_set<std::int64_t> id_set_;
};

CodeDatabase make_database(std::size_t bits, std::vector<BinaryCode> codes, std::span<const int> labels,
                           std::span<const std::int64_t> ids = {});

struct Match {
    std::int64_t id = 0;
    int label = 0;
    double distance = 0.0;
    friend bool operator==(const Match&, const Match&) = default;
};

struct TopK {
    std::vector<Match> matches;
    /// Set when k exceeded the database size and every entry was returned.
    bool truncated = false;
};

/// The k nearest entries, ascending distance, ties to the smaller id. Exact full scan.
TopK top_k(const CodeDatabase& db, const WeightedMetric& metric, const BinaryCode& query,
           std::size_t k);

/// As top_k, but the distance to entry j uses the metric of its class (label(j) - 1).
TopK top_k(const CodeDatabase& db, std::span<const WeightedMetric> class_metrics,
           const BinaryCode& query, std::size_t k);

}  // namespace cbid
