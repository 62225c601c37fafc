#include "cbid/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <system_error>

namespace cbid::io {

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
    throw ParseError(source + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view text, const std::string& source, std::size_t line) {
    double value = 0.0;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        fail(source, line, "not a number: '" + std::string(text) + "'");
    }
    return value;
}

template <typename Int>
Int parse_int(std::string_view text, const std::string& source, std::size_t line) {
    Int value{};
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        fail(source, line, "not an integer: '" + std::string(text) + "'");
    }
    return value;
}

std::ifstream open(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

// Next line that is not blank; false at end of input.
bool next_line(std::istream& in, std::string& line, std::size_t& number) {
    while (std::getline(in, line)) {
        ++number;
        if (!trim(line).empty()) return true;
    }
    return false;
}

void write_row(std::ostream& out, std::span<const double> values) {
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (j > 0) out << ',';
        out << format_double(values[j]);
    }
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

Matrix read_features(std::istream& in, const std::string& source) {
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t number = 0;
    while (next_line(in, line, number)) {
        const auto fields = split(line, ',');
        if (rows == 0) cols = fields.size();
        if (fields.size() != cols) {
            fail(source, number, "expected " + std::to_string(cols) + " columns, found " +
                                     std::to_string(fields.size()));
        }
        for (auto f : fields) values.push_back(parse_double(f, source, number));
        ++rows;
    }
    return Matrix(rows, cols, std::move(values));
}

Matrix read_features_file(const std::string& path) {
    auto in = open(path);
    return read_features(in, path);
}

void write_features(std::ostream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        write_row(out, m.row(i));
        out << '\n';
    }
}

std::vector<int> read_labels(std::istream& in, const std::string& source) {
    std::vector<int> labels;
    std::string line;
    std::size_t number = 0;
    while (next_line(in, line, number)) {
        const int y = parse_int<int>(trim(line), source, number);
        if (y < 1) fail(source, number, "labels are 1-based, got " + std::to_string(y));
        labels.push_back(y);
    }
    return labels;
}

std::vector<int> read_labels_file(const std::string& path) {
    auto in = open(path);
    return read_labels(in, path);
}

void write_labels(std::ostream& out, const std::vector<int>& labels) {
    for (int y : labels) out << y << '\n';
}

PatchRows read_patches(std::istream& in, const std::string& source) {
    PatchRows rows;
    std::vector<double> values;
    std::size_t cols = 0;
    std::string line;
    std::size_t number = 0;
    while (next_line(in, line, number)) {
        const auto fields = split(line, ',');
        if (fields.size() < 2) fail(source, number, "patch row needs an owner id and values");
        if (rows.owners.empty()) cols = fields.size() - 1;
        if (fields.size() - 1 != cols) {
            fail(source, number, "expected " + std::to_string(cols) + " descriptor values");
        }
        rows.owners.push_back(parse_int<std::size_t>(fields[0], source, number));
        for (std::size_t j = 1; j < fields.size(); ++j) values.push_back(parse_double(fields[j], source, number));
    }
    rows.patches = Matrix(rows.owners.size(), cols, std::move(values));
    return rows;
}

PatchRows read_patches_file(const std::string& path) {
    auto in = open(path);
    return read_patches(in, path);
}

void write_patches(std::ostream& out, const PatchRows& rows) {
    for (std::size_t i = 0; i < rows.patches.rows(); ++i) {
        out << rows.owners[i] << ',';
        write_row(out, rows.patches.row(i));
        out << '\n';
    }
}

void write_triplets(std::ostream& out, const TripletSet& set) {
    out << "anchor,hit,miss,miss_class\n";
    for (const auto& t : set.triples) {
        out << t.anchor << ',' << t.hit << ',' << t.miss << ',' << t.miss_class << '\n';
    }
}

TripletSet read_triplets(std::istream& in, Mode mode, const std::string& source) {
    TripletSet set;
    set.mode = mode;
    std::string line;
    std::size_t number = 0;
    bool first = true;
    while (next_line(in, line, number)) {
        if (first && trim(line) == "anchor,hit,miss,miss_class") {
            first = false;
            continue;
        }
        first = false;
        const auto fields = split(line, ',');
        if (fields.size() != 4) fail(source, number, "triplet rows have 4 fields");
        set.triples.push_back({parse_int<std::uint32_t>(fields[0], source, number),
                               parse_int<std::uint32_t>(fields[1], source, number),
                               parse_int<std::uint32_t>(fields[2], source, number),
                               parse_int<int>(fields[3], source, number)});
    }
    return set;
}

TripletSet read_triplets_file(const std::string& path, Mode mode) {
    auto in = open(path);
    return read_triplets(in, mode, path);
}

RunConfig read_config(std::istream& in, const std::string& source) {
    RunConfig cfg;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) fail(source, number, "expected key=value");
        const auto key = std::string(trim(view.substr(0, eq)));
        const auto value = trim(view.substr(eq + 1));
        auto& t = cfg.train;
        if (key == "t" || key == "bits") {
            t.bits = parse_int<std::size_t>(value, source, number);
        } else if (key == "nu") {
            t.nu = parse_double(value, source, number);
        } else if (key == "restarts") {
            t.restarts = parse_int<std::size_t>(value, source, number);
        } else if (key == "seed") {
            t.seed = parse_int<std::uint64_t>(value, source, number);
        } else if (key == "loss") {
            t.loss = std::string(value);
        } else if (key == "penalty") {
            try {
                t.penalty = parse_penalty(std::string(value));
            } catch (const DataError& e) {
                fail(source, number, e.what());
            }
        } else if (key == "memory") {
            t.memory = parse_int<std::size_t>(value, source, number);
        } else if (key == "gradient_tolerance" || key == "tolerance") {
            t.gradient_tolerance = parse_double(value, source, number);
        } else if (key == "max_iterations") {
            t.max_iterations = parse_int<std::size_t>(value, source, number);
        } else if (key == "hits") {
            cfg.hits = parse_int<std::size_t>(value, source, number);
        } else if (key == "misses") {
            cfg.misses = parse_int<std::size_t>(value, source, number);
        } else if (key == "gradcheck_trials") {
            cfg.gradcheck_trials = parse_int<std::size_t>(value, source, number);
        } else if (key == "gradcheck_tolerance") {
            cfg.gradcheck_tolerance = parse_double(value, source, number);
        } else {
            fail(source, number, "unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig read_config_file(const std::string& path) {
    auto in = open(path);
    return read_config(in, path);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
    const auto& t = cfg.train;
    out << "t=" << t.bits << '\n'
        << "nu=" << format_double(t.nu) << '\n'
        << "restarts=" << t.restarts << '\n'
        << "seed=" << t.seed << '\n'
        << "loss=" << t.loss << '\n'
        << "penalty=" << to_string(t.penalty) << '\n'
        << "memory=" << t.memory << '\n'
        << "gradient_tolerance=" << format_double(t.gradient_tolerance) << '\n'
        << "max_iterations=" << t.max_iterations << '\n'
        << "hits=" << cfg.hits << '\n'
        << "misses=" << cfg.misses << '\n'
        << "gradcheck_trials=" << cfg.gradcheck_trials << '\n'
        << "gradcheck_tolerance=" << format_double(cfg.gradcheck_tolerance) << '\n';
}

void write_model(std::ostream& out, const TrainedModel& model) {
    const auto& cb = model.codebook;
    out << "cbid-model v1\n"
        << "mode " << to_string(model.mode) << '\n'
        << "d " << cb.dim() << '\n'
        << "t " << cb.bit_count() << '\n'
        << "k " << model.weights.columns() << '\n';
    for (const auto& h : cb.functions()) {
        write_row(out, h.beta());
        out << ',' << format_double(h.bias()) << '\n';
    }
    for (std::size_t s = 0; s < model.weights.bits(); ++s) {
        for (std::size_t c = 0; c < model.weights.columns(); ++c) {
            if (c > 0) out << ',';
            out << format_double(model.weights(s, c));
        }
        out << '\n';
    }
}

TrainedModel read_model(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t number = 0;
    auto expect_line = [&]() -> std::string_view {
        if (!next_line(in, line, number)) fail(source, number, "unexpected end of model file");
        return trim(line);
    };
    if (expect_line() != "cbid-model v1") fail(source, number, "missing 'cbid-model v1' header");
    auto field = [&](std::string_view name) -> std::string {
        const auto view = expect_line();
        const auto space = view.find(' ');
        if (space == std::string_view::npos || view.substr(0, space) != name) {
            fail(source, number, "expected '" + std::string(name) + " <value>'");
        }
        return std::string(trim(view.substr(space + 1)));
    };

    TrainedModel model;
    try {
        model.mode = parse_mode(field("mode"));
    } catch (const ParseError&) {
        throw;
    } catch (const DataError& e) {
        fail(source, number, e.what());
    }
    const auto d = parse_int<std::size_t>(field("d"), source, number);
    const auto t = parse_int<std::size_t>(field("t"), source, number);
    const auto k = parse_int<std::size_t>(field("k"), source, number);
    if (d == 0) fail(source, number, "dimension must be at least 1");

    model.codebook = CodeBook(d);
    for (std::size_t s = 0; s < t; ++s) {
        const auto fields = split(expect_line(), ',');
        if (fields.size() != d + 1) fail(source, number, "hash function line needs d+1 values");
        std::vector<double> beta(d);
        for (std::size_t j = 0; j < d; ++j) beta[j] = parse_double(fields[j], source, number);
        try {
            model.codebook.append(HashFunction(std::move(beta), parse_double(fields[d], source, number)));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            fail(source, number, e.what());
        }
    }
    std::vector<double> entries;
    entries.reserve(t * k);
    for (std::size_t s = 0; s < t; ++s) {
        const auto fields = split(expect_line(), ',');
        if (fields.size() != k) fail(source, number, "weight row needs k values");
        for (auto f : fields) {
            const double w = parse_double(f, source, number);
            if (!(w >= 0.0)) fail(source, number, "weights must be non-negative");
            entries.push_back(w);
        }
    }
    if (next_line(in, line, number)) fail(source, number, "trailing content after weights");
    model.weights = WeightMatrix(t, k, std::move(entries));
    return model;
}

TrainedModel read_model_file(const std::string& path) {
    auto in = open(path);
    return read_model(in, path);
}

void write_trace(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "iter,objective,max_violation,chosen_class\n";
    for (const auto& row : trace) {
        out << row.iteration << ',' << format_double(row.objective) << ','
            << format_double(row.max_violation) << ',' << row.chosen_class << '\n';
    }
}

std::string to_hex(const BinaryCode& code) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(code.byte_count() * 2);
    for (std::size_t b = 0; b < code.byte_count(); ++b) {
        unsigned byte = 0;
        for (std::size_t j = 0; j < 8; ++j) {
            const std::size_t s = b * 8 + j;
            if (s < code.size() && code.sign(s) > 0) byte |= 0x80U >> j;
        }
        out.push_back(digits[byte >> 4]);
        out.push_back(digits[byte & 15]);
    }
    return out;
}

BinaryCode from_hex(const std::string& hex, std::size_t bits) {
    const std::size_t bytes = (bits + 7) / 8;
    if (hex.size() != bytes * 2) {
        throw ParseError("hex code of length " + std::to_string(hex.size()) + " for " +
                         std::to_string(bits) + " bits");
    }
    auto nibble = [](char c) -> unsigned {
        if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
        throw ParseError(std::string("invalid hex digit '") + c + "'");
    };
    BinaryCode code(bits);
    for (std::size_t b = 0; b < bytes; ++b) {
        const unsigned byte = nibble(hex[2 * b]) << 4 | nibble(hex[2 * b + 1]);
        for (std::size_t j = 0; j < 8; ++j) {
            const std::size_t s = b * 8 + j;
            const bool set = (byte & (0x80U >> j)) != 0;
            if (s >= bits) {
                if (set) throw ParseError("hex code sets bits beyond its length");
                continue;
            }
            code.set(s, set ? +1 : -1);
        }
    }
    return code;
}

void write_database(std::ostream& out, const CodeDatabase& db) {
    out << db.bits() << '\n';
    for (std::size_t i = 0; i < db.size(); ++i) {
        out << db.id(i) << ',' << db.label(i) << ',' << to_hex(db.code(i)) << '\n';
    }
}

CodeDatabase read_database(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t number = 0;
    if (!next_line(in, line, number)) fail(source, 1, "missing bit-count header");
    const auto bits = parse_int<std::size_t>(trim(line), source, number);
    CodeDatabase db(bits);
    while (next_line(in, line, number)) {
        const auto fields = split(line, ',');
        if (fields.size() != 3) fail(source, number, "database rows are id,label,hexcode");
        try {
            db.add(parse_int<std::int64_t>(fields[0], source, number),
                   parse_int<int>(fields[1], source, number), from_hex(std::string(fields[2]), bits));
        } catch (const ParseError& e) {
            fail(source, number, e.what());
        } catch (const Error& e) {
            fail(source, number, e.what());
        }
    }
    return db;
}

CodeDatabase read_database_file(const std::string& path) {
    auto in = open(path);
    return read_database(in, path);
}

}  // namespace cbid::io
