#include "cbid/classify.hpp"
#include "cbid/errors.hpp"
#include "cbid/gradcheck.hpp"
#include "cbid/hamming.hpp"
#include "cbid/io.hpp"
#include "cbid/trainer.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

enum Exit : int { ok = 0, check_failed = 1, usage = 2, data = 3, non_convergence = 4 };

struct Options {
    std::string features;
    std::string labels;
    std::string triplets;
    std::string config;
    std::string model;
    std::string db;
    std::string out;
    std::string mode;
    std::string rule;
    std::optional<std::size_t> k;
    std::optional<std::uint64_t> seed;
};

cbid::io::RunConfig load_config(const Options& o) {
    auto cfg = o.config.empty() ? cbid::io::RunConfig{} : cbid::io::read_config_file(o.config);
    if (o.seed) cfg.train.seed = *o.seed;
    return cfg;
}

cbid::Mode mode_or(const Options& o, cbid::Mode fallback) {
    if (o.mode.empty()) return fallback;
    try {
        return cbid::parse_mode(o.mode);
    } catch (const cbid::Error& e) {
        throw cbid::ConfigError(e.what());
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw cbid::DataError("cannot write '" + path + "'");
    return out;
}

cbid::Dataset load_dataset(const Options& o) {
    return cbid::Dataset(cbid::io::read_features_file(o.features), cbid::io::read_labels_file(o.labels));
}

cbid::PatchSet load_patchset(const Options& o) {
    auto rows = cbid::io::read_patches_file(o.features);
    return cbid::PatchSet(std::move(rows.patches), std::move(rows.owners),
                          cbid::io::read_labels_file(o.labels));
}

// Patch rows grouped by owner id, in ascending owner order.
std::map<std::size_t, std::vector<cbid::BinaryCode>> group_patches(const cbid::CodeBook& cb,
                                                                   const cbid::io::PatchRows& rows) {
    const auto codes = cbid::encode(cb, rows.patches);
    std::map<std::size_t, std::vector<cbid::BinaryCode>> groups;
    for (std::size_t p = 0; p < codes.size(); ++p) groups[rows.owners[p]].push_back(codes[p]);
    return groups;
}

void check_dims(const cbid::TrainedModel& model, std::size_t dim) {
    if (model.codebook.dim() != dim) {
        throw cbid::DimensionError("model expects " + std::to_string(model.codebook.dim()) +
                                   "-dimensional features, got " + std::to_string(dim));
    }
}

void check_db(const cbid::TrainedModel& model, const cbid::CodeDatabase& db) {
    if (db.bits() != model.codebook.bit_count()) {
        throw cbid::DimensionError("database has " + std::to_string(db.bits()) + "-bit codes, model has " +
                                   std::to_string(model.codebook.bit_count()));
    }
}

// --mode, when given, must agree with the model.
void check_mode(const Options& o, const cbid::TrainedModel& model) {
    if (mode_or(o, model.mode) != model.mode) {
        throw cbid::ConfigError(std::string("model was trained in ") + cbid::to_string(model.mode) + " mode");
    }
}

int cmd_mine(const Options& o) {
    const auto cfg = load_config(o);
    const auto mode = mode_or(o, cbid::Mode::image);
    const auto set = mode == cbid::Mode::image
                         ? cbid::mine_triplets_image(load_dataset(o), cfg.hits, cfg.misses)
                         : cbid::mine_neighbors_patch(load_patchset(o));
    auto out = open_out(o.out);
    cbid::io::write_triplets(out, set);
    std::cout << "triplets=" << set.size() << '\n';
    return ok;
}

int cmd_train(const Options& o) {
    const auto cfg = load_config(o);
    cfg.train.validate();
    const auto mode = mode_or(o, cbid::Mode::image);
    cbid::TrainedModel model;
    if (mode == cbid::Mode::image) {
        const auto ds = load_dataset(o);
        const auto set = o.triplets.empty() ? cbid::mine_triplets_image(ds, cfg.hits, cfg.misses)
                                            : cbid::io::read_triplets_file(o.triplets, mode);
        model = cbid::train(ds, set, cfg.train);
    } else {
        const auto ps = load_patchset(o);
        const auto set = o.triplets.empty() ? cbid::mine_neighbors_patch(ps)
                                            : cbid::io::read_triplets_file(o.triplets, mode);
        model = cbid::train(ps, set, cfg.train);
    }
    auto model_out = open_out(o.model);
    cbid::io::write_model(model_out, model);
    if (!o.out.empty()) {
        auto trace_out = open_out(o.out);
        cbid::io::write_trace(trace_out, model.trace);
    }
    std::cout << "bits=" << model.codebook.bit_count() << '\n';
    if (!model.trace.empty()) {
        std::cout << "objective=" << cbid::io::format_double(model.trace.back().objective) << '\n';
    }
    return ok;
}

int cmd_encode(const Options& o) {
    const auto model = cbid::io::read_model_file(o.model);
    check_mode(o, model);
    const auto& cb = model.codebook;
    cbid::CodeDatabase db(cb.bit_count());
    if (model.mode == cbid::Mode::image) {
        const auto features = cbid::io::read_features_file(o.features);
        const auto labels = cbid::io::read_labels_file(o.labels);
        if (labels.size() != features.rows()) {
            throw cbid::DataError(std::to_string(features.rows()) + " feature rows but " +
                                  std::to_string(labels.size()) + " labels");
        }
        if (!features.empty()) check_dims(model, features.cols());
        const auto codes = cbid::encode(cb, features);
        for (std::size_t i = 0; i < codes.size(); ++i) {
            db.add(static_cast<std::int64_t>(i), labels[i], codes[i]);
        }
    } else {
        const auto ps = load_patchset(o);
        check_dims(model, ps.dim());
        const auto codes = cbid::encode(cb, ps.patches());
        for (std::size_t p = 0; p < codes.size(); ++p) {
            db.add(static_cast<std::int64_t>(p), ps.label(p), codes[p]);
        }
    }
    auto out = open_out(o.out);
    cbid::io::write_database(out, db);
    std::cout << "codes=" << db.size() << '\n';
    return ok;
}

int cmd_retrieve(const Options& o) {
    const auto model = cbid::io::read_model_file(o.model);
    const auto db = cbid::io::read_database_file(o.db);
    check_db(model, db);
    check_mode(o, model);
    const auto features = model.mode == cbid::Mode::image
                              ? cbid::io::read_features_file(o.features)
                              : cbid::io::read_patches_file(o.features).patches;
    if (!features.empty()) check_dims(model, features.cols());
    const auto metric = cbid::build_tables(cbid::retrieval_metric(model.weights));
    const std::size_t k = o.k.value_or(10);
    auto out = open_out(o.out);
    out << "query_id,rank,id,label,distance\n";
    const auto codes = cbid::encode(model.codebook, features);
    for (std::size_t q = 0; q < codes.size(); ++q) {
        const auto found = cbid::top_k(db, metric, codes[q], k);
        for (std::size_t r = 0; r < found.matches.size(); ++r) {
            const auto& m = found.matches[r];
            out << q << ',' << r + 1 << ',' << m.id << ',' << m.label << ','
                << cbid::io::format_double(m.distance) << '\n';
        }
    }
    return ok;
}

struct Classified {
    std::vector<std::size_t> query_ids;
    std::vector<cbid::Prediction> predictions;
};

Classified classify_queries(const Options& o, const cbid::TrainedModel& model,
                            const cbid::CodeDatabase& db) {
    check_db(model, db);
    check_mode(o, model);
    Classified result;
    const auto metric = cbid::build_tables(cbid::retrieval_metric(model.weights));
    if (model.mode == cbid::Mode::patch) {
        if (!o.rule.empty() && o.rule != "nbnn") throw cbid::ConfigError("patch models classify with nbnn");
        const auto rows = cbid::io::read_patches_file(o.features);
        if (!rows.patches.empty()) check_dims(model, rows.patches.cols());
        for (const auto& [owner, codes] : group_patches(model.codebook, rows)) {
            result.query_ids.push_back(owner);
            result.predictions.push_back(cbid::nbnn_classify(db, metric, codes));
        }
        return result;
    }
    const std::string rule = o.rule.empty() ? "knn" : o.rule;
    if (rule != "knn" && rule != "i2c") throw cbid::ConfigError("unknown rule '" + rule + "' (knn or i2c)");
    const auto features = cbid::io::read_features_file(o.features);
    if (!features.empty()) check_dims(model, features.cols());
    const auto codes = cbid::encode(model.codebook, features);
    const std::size_t k = o.k.value_or(3);
    for (std::size_t q = 0; q < codes.size(); ++q) {
        result.query_ids.push_back(q);
        result.predictions.push_back(rule == "knn" ? cbid::knn_classify(db, metric, codes[q], k)
                                                   : cbid::i2c_image_classify(db, model.weights, codes[q]));
    }
    return result;
}

int cmd_classify(const Options& o) {
    const auto model = cbid::io::read_model_file(o.model);
    const auto db = cbid::io::read_database_file(o.db);
    const auto result = classify_queries(o, model, db);
    auto out = open_out(o.out);
    out << "query_id,predicted_label,score\n";
    for (std::size_t i = 0; i < result.predictions.size(); ++i) {
        out << result.query_ids[i] << ',' << result.predictions[i].label << ','
            << cbid::io::format_double(result.predictions[i].score) << '\n';
    }
    return ok;
}

int cmd_eval(const Options& o) {
    const auto model = cbid::io::read_model_file(o.model);
    const auto db = cbid::io::read_database_file(o.db);
    const auto labels = cbid::io::read_labels_file(o.labels);
    const auto result = classify_queries(o, model, db);

    // Query labels: one per feature row (image) or per owner image (patch).
    std::size_t correct = 0;
    for (std::size_t i = 0; i < result.predictions.size(); ++i) {
        const auto id = result.query_ids[i];
        if (id >= labels.size()) throw cbid::DataError("no label for query " + std::to_string(id));
        if (result.predictions[i].label == labels[id]) ++correct;
    }
    if (model.mode == cbid::Mode::image && labels.size() != result.predictions.size()) {
        throw cbid::DataError(std::to_string(result.predictions.size()) + " queries but " +
                              std::to_string(labels.size()) + " labels");
    }

    const std::size_t k = o.k.value_or(model.mode == cbid::Mode::image ? 3 : 10);
    const auto metric = cbid::build_tables(cbid::retrieval_metric(model.weights));
    const auto features = model.mode == cbid::Mode::image ? cbid::io::read_features_file(o.features)
                                                          : cbid::io::read_patches_file(o.features).patches;
    std::vector<std::size_t> owners;
    if (model.mode == cbid::Mode::patch) owners = cbid::io::read_patches_file(o.features).owners;
    const auto codes = cbid::encode(model.codebook, features);
    double precision = 0.0;
    for (std::size_t q = 0; q < codes.size(); ++q) {
        const int label = labels.at(model.mode == cbid::Mode::image ? q : owners[q]);
        const auto found = cbid::top_k(db, metric, codes[q], k);
        std::size_t same = 0;
        for (const auto& m : found.matches) same += m.label == label ? 1 : 0;
        precision += static_cast<double>(same) / static_cast<double>(k);
    }
    const double accuracy = result.predictions.empty()
                                ? 0.0
                                : static_cast<double>(correct) / static_cast<double>(result.predictions.size());
    precision = codes.empty() ? 0.0 : precision / static_cast<double>(codes.size());

    std::string report = "accuracy=" + cbid::io::format_double(accuracy) + "\nprecision@" +
                         std::to_string(k) + "=" + cbid::io::format_double(precision) + "\n";
    std::cout << report;
    if (!o.out.empty()) open_out(o.out) << report;
    return ok;
}

int cmd_gradcheck(const Options& o) {
    const auto cfg = load_config(o);
    cbid::GradcheckOptions opts;
    opts.seed = cfg.train.seed;
    opts.trials = cfg.gradcheck_trials;
    opts.tolerance = cfg.gradcheck_tolerance;
    const auto report = cbid::gradcheck(opts);
    std::cout << "trials=" << report.trials << "\nfailures=" << report.failures
              << "\nmax_relative_error=" << cbid::io::format_double(report.max_relative_error) << '\n'
              << (report.passed() ? "PASS" : "FAIL") << '\n';
    return report.passed() ? ok : check_failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted binary codes learned by large-margin column generation"};
    app.require_subcommand(1);
    Options o;

    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Overrides the config seed"); };
    auto add_mode = [&](CLI::App* sub) {
        sub->add_option("--mode", o.mode, "image or patch")->check(CLI::IsMember({"image", "patch"}));
    };

    auto* mine = app.add_subcommand("mine", "Mine hit/miss triplets");
    mine->add_option("--features", o.features)->required();
    mine->add_option("--labels", o.labels)->required();
    mine->add_option("--config", o.config);
    mine->add_option("--out", o.out, "Triplet CSV")->required();
    add_mode(mine);
    add_seed(mine);

    auto* train = app.add_subcommand("train", "Learn hash functions and weights");
    train->add_option("--features", o.features)->required();
    train->add_option("--labels", o.labels)->required();
    train->add_option("--triplets", o.triplets, "Mined on the fly when absent");
    train->add_option("--config", o.config);
    train->add_option("--model", o.model, "Model file to write")->required();
    train->add_option("--out", o.out, "Trace CSV");
    add_mode(train);
    add_seed(train);

    auto* encode = app.add_subcommand("encode", "Encode labelled samples into a code database");
    encode->add_option("--model", o.model)->required();
    encode->add_option("--features", o.features)->required();
    encode->add_option("--labels", o.labels)->required();
    encode->add_option("--out", o.out, "Code database")->required();
    add_mode(encode);

    auto* retrieve = app.add_subcommand("retrieve", "k nearest database entries per query");
    retrieve->add_option("--model", o.model)->required();
    retrieve->add_option("--db", o.db)->required();
    retrieve->add_option("--features", o.features)->required();
    retrieve->add_option("--k", o.k)->check(CLI::PositiveNumber);
    retrieve->add_option("--out", o.out)->required();
    add_mode(retrieve);

    auto* classify = app.add_subcommand("classify", "Predict query labels");
    classify->add_option("--model", o.model)->required();
    classify->add_option("--db", o.db)->required();
    classify->add_option("--features", o.features)->required();
    classify->add_option("--k", o.k)->check(CLI::PositiveNumber);
    classify->add_option("--rule", o.rule, "knn (default) or i2c for image models");
    classify->add_option("--out", o.out, "Predictions CSV")->required();
    add_mode(classify);

    auto* eval = app.add_subcommand("eval", "Accuracy and precision@k against known labels");
    eval->add_option("--model", o.model)->required();
    eval->add_option("--db", o.db)->required();
    eval->add_option("--features", o.features)->required();
    eval->add_option("--labels", o.labels)->required();
    eval->add_option("--k", o.k)->check(CLI::PositiveNumber);
    eval->add_option("--rule", o.rule);
    eval->add_option("--out", o.out);
    add_mode(eval);

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the weak-learner gradient");
    gradcheck->add_option("--config", o.config);
    add_seed(gradcheck);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*mine) return cmd_mine(o);
        if (*train) return cmd_train(o);
        if (*encode) return cmd_encode(o);
        if (*retrieve) return cmd_retrieve(o);
        if (*classify) return cmd_classify(o);
        if (*eval) return cmd_eval(o);
        if (*gradcheck) return cmd_gradcheck(o);
    } catch (const cbid::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const cbid::NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return non_convergence;
    } catch (const cbid::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data;
    }
    return usage;
}
