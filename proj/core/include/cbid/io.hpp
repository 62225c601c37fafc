#pragma once

#include "cbid/data_model.hpp"
#include "cbid/hamming.hpp"
#include "cbid/trainer.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

/// Text file formats. Readers throw ParseError naming the source and line.
namespace cbid::io {

class ParseError : public DataError {
public:
    using DataError::DataError;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Headerless CSV, one sample per row. An empty input yields a 0 x 0 matrix.
Matrix read_features(std::istream& in, const std::string& source = "features");
Matrix read_features_file(const std::string& path);
void write_features(std::ostream& out, const Matrix& m);

/// One 1-based integer label per line.
std::vector<int> read_labels(std::istream& in, const std::string& source = "labels");
std::vector<int> read_labels_file(const std::string& path);
void write_labels(std::ostream& out, const std::vector<int>& labels);

/// Patch CSV: 0-based owner image id, then the descriptor values.
struct PatchRows {
    Matrix patches;
    std::vector<std::size_t> owners;
};
PatchRows read_patches(std::istream& in, const std::string& source = "patches");
PatchRows read_patches_file(const std::string& path);
void write_patches(std::ostream& out, const PatchRows& rows);

/// CSV with header `anchor,hit,miss,miss_class`.
void write_triplets(std::ostream& out, const TripletSet& set);
TripletSet read_triplets(std::istream& in, Mode mode, const std::string& source = "triplets");
TripletSet read_triplets_file(const std::string& path, Mode mode);

/// Flat key=value configuration; `#` starts a comment.
struct RunConfig {
    TrainConfig train;
    std::size_t hits = 5;
    std::size_t misses = 5;
    std::size_t gradcheck_trials = 100;
    double gradcheck_tolerance = 1e-4;
};
RunConfig read_config(std::istream& in, const std::string& source = "config");
RunConfig read_config_file(const std::string& path);
void write_config(std::ostream& out, const RunConfig& cfg);

/// `cbid-model v1`, then `mode`, `d`, `t`, `k` lines, t hash-function lines
/// `beta_1,...,beta_d,bias` and t weight rows of k values.
void write_model(std::ostream& out, const TrainedModel& model);
TrainedModel read_model(std::istream& in, const std::string& source = "model");
TrainedModel read_model_file(const std::string& path);

/// CSV `iter,objective,max_violation,chosen_class`.
void write_trace(std::ostream& out, const std::vector<TraceRow>& trace);

/// First line t, then `id,label,hexcode`; bits packed big-endian within each byte.
void write_database(std::ostream& out, const CodeDatabase& db);
CodeDatabase read_database(std::istream& in, const std::string& source = "database");
CodeDatabase read_database_file(const std::string& path);

std::string to_hex(const BinaryCode& code);
BinaryCode from_hex(const std::string& hex, std::size_t bits);

}  // namespace cbid::io
