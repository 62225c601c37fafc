#include "cbid/gradcheck.hpp"
#include "cbid/synthetic.hpp"
#include "cbid/trainer.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace cbid;

namespace {

// Straight-line Pi_r from codes, one dual per triple (image mode).
double oracle_objective(const HashFunction& h, const Dataset& ds, const TripletSet& set,
                        const DualState& duals, int r) {
    double sum = 0.0;
    for (std::size_t t = 0; t < set.size(); ++t) {
        const auto& tr = set.triples[t];
        const int ha = eval_sign(h, ds.row(tr.anchor));
        const int hh = eval_sign(h, ds.row(tr.hit));
        const int hm = eval_sign(h, ds.row(tr.miss));
        const double a = std::abs(ha - hm) - std::abs(ha - hh);
        const double coef = (ds.label(tr.anchor) == r ? 1.0 : 0.0) - (tr.miss_class == r ? 1.0 : 0.0);
        sum += duals.values[t] * coef * a;
    }
    return sum;
}

DualState random_duals(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    DualState d;
    d.values.resize(n);
    for (auto& u : d.values) u = unit(rng);
    return d;
}

// 2 bits, 2 classes, 4 image-mode terms.
struct HandInstance {
    BitFeatures features{4};
    std::vector<MarginTerm> terms{{0, 1}, {0, 1}, {1, 0}, {1, 0}};
    HandInstance() {
        features.append({2.0, 2.0, 0.0, -2.0});
        features.append({0.0, -2.0, 2.0, 2.0});
    }
};

// Coarse grid (0.1) over [0,3]^4, then a 0.01 grid around the coarse winner.
double grid_minimum(const HandInstance& inst, const PrimalOptions& options) {
    const LogisticLoss loss;
    auto value = [&](const std::array<double, 4>& w) {
        return primal_objective(WeightMatrix(2, 2, {w[0], w[1], w[2], w[3]}), inst.features, inst.terms,
                                loss, options);
    };
    auto search = [&](std::array<double, 4> lo, std::array<double, 4> hi, double step) {
        std::array<double, 4> best_w{};
        double best = std::numeric_limits<double>::infinity();
        std::array<int, 4> n{};
        for (int i = 0; i < 4; ++i) n[i] = static_cast<int>(std::lround((hi[i] - lo[i]) / step));
        std::array<double, 4> w{};
        for (int a = 0; a <= n[0]; ++a) {
            w[0] = lo[0] + a * step;
            for (int b = 0; b <= n[1]; ++b) {
                w[1] = lo[1] + b * step;
                for (int c = 0; c <= n[2]; ++c) {
                    w[2] = lo[2] + c * step;
                    for (int d = 0; d <= n[3]; ++d) {
                        w[3] = lo[3] + d * step;
                        const double v = value(w);
                        if (v < best) {
                            best = v;
                            best_w = w;
                        }
                    }
                }
            }
        }
        return std::pair{best, best_w};
    };
    const auto [coarse, at] = search({0, 0, 0, 0}, {3, 3, 3, 3}, 0.1);
    std::array<double, 4> lo{}, hi{};
    for (int i = 0; i < 4; ++i) {
        lo[i] = std::max(0.0, at[i] - 0.1);
        hi[i] = std::min(3.0, at[i] + 0.1);
    }
    return std::min(coarse, search(lo, hi, 0.01).first);
}

}  // namespace

TEST_CASE("triplet bit feature values and hit/miss antisymmetry") {
    for (int a : {-1, 1}) {
        for (int h : {-1, 1}) {
            for (int m : {-1, 1}) {
                CHECK(triplet_bit_feature(a, h, m) == std::abs(a - m) - std::abs(a - h));
                CHECK(triplet_bit_feature(a, m, h) == -triplet_bit_feature(a, h, m));
            }
        }
    }
}

TEST_CASE("weak_objective: constant hash gives zero") {
    std::mt19937_64 rng(1);
    const Dataset ds(testing::random_matrix(rng, 12, 2), testing::balanced_labels(3, 4));
    const auto set = mine_triplets_image(ds, 2, 2);
    const auto problem = TrainingProblem::image(ds, set);
    const auto duals = initial_duals(problem);
    const HashFunction constant({1e-9, 0.0}, 100.0);
    for (int r = 1; r <= 3; ++r) CHECK(weak_objective(constant, problem, duals, r) == 0.0);
}

TEST_CASE("weak_objective: single-triplet formula") {
    // Anchor class 1, miss class 2, u = 0.2, a = 2 -> Pi_2 = -0.4, Pi_1 = +0.4.
    const Dataset ds(Matrix(3, 1, {0.0, 0.1, -1.0}), {1, 1, 2});
    const TripletSet set{Mode::image, {{0, 1, 2, 2}}};
    const auto problem = TrainingProblem::image(ds, set);
    const DualState duals{{0.2}};
    const HashFunction h({1.0}, 0.5);
    CHECK(weak_objective(h, problem, duals, 2) == doctest::Approx(-0.4).epsilon(1e-15));
    CHECK(weak_objective(h, problem, duals, 1) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK_THROWS_AS(weak_objective(h, problem, duals, 3), DataError);
    CHECK_THROWS_AS(weak_objective(h, problem, DualState{{0.2, 0.1}}, 1), DimensionError);
}

TEST_CASE("weak_objective equals the straight-line evaluator") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset ds(testing::random_matrix(rng, 15, 3), testing::balanced_labels(3, 5));
        auto set = mine_triplets_image(ds, 1, 1);
        set.triples.resize(10);
        const auto problem = TrainingProblem::image(ds, set);
        const auto duals = random_duals(rng, set.size());
        const HashFunction h({normal(rng), normal(rng), normal(rng)}, normal(rng));
        for (int r = 1; r <= 3; ++r) {
            CHECK(weak_objective(h, problem, duals, r) ==
                  doctest::Approx(oracle_objective(h, ds, set, duals, r)).epsilon(1e-13));
        }
    }
}

TEST_CASE("weak_gradient: degenerate cases are zero") {
    const Dataset ds(Matrix(3, 2, {1.0, 2.0, 1.0, 2.0, 1.0, 2.0}), {1, 1, 2});
    const TripletSet set{Mode::image, {{0, 1, 2, 2}}};
    const auto problem = TrainingProblem::image(ds, set);
    const HashFunction h({0.3, -0.7}, 0.2);
    const auto g = weak_gradient(h, problem, DualState{{0.4}}, 1);
    CHECK(g.beta == std::vector<double>{0.0, 0.0});
    CHECK(g.bias == 0.0);

    const Dataset spread(Matrix(3, 2, {1.0, 2.0, 0.0, 1.0, -3.0, 4.0}), {1, 1, 2});
    const auto p2 = TrainingProblem::image(spread, set);
    const auto z = weak_gradient(h, p2, DualState{{0.0}}, 1);
    CHECK(z.beta == std::vector<double>{0.0, 0.0});
    CHECK(z.bias == 0.0);
}

TEST_CASE("weak_gradient matches central finite differences") {
    GradcheckOptions opts;
    opts.seed = 42;
    const auto report = gradcheck(opts);
    CHECK(report.trials == 100);
    CHECK(report.failures == 0);
    CHECK(report.max_relative_error <= 1e-4);
}

TEST_CASE("gradcheck catches a broken gradient and a zero tolerance") {
    GradcheckOptions opts;
    opts.trials = 10;
    const GradientFn broken = [](const HashFunction& h, const TrainingProblem& p, const DualState& d, int r) {
        auto g = weak_gradient(h, p, d, r);
        g.bias *= 1.5;
        g.bias += 1e-3;
        return g;
    };
    CHECK_FALSE(gradcheck(opts, broken).passed());
    opts.tolerance = 0.0;
    CHECK_FALSE(gradcheck(opts).passed());
}

TEST_CASE("learn_hash on separable 1-D data matches the threshold sweep") {
    const Dataset ds(Matrix(8, 1, {-3.0, -2.5, -2.0, -1.5, 1.0, 1.5, 2.0, 2.5}), {1, 1, 1, 1, 2, 2, 2, 2});
    const auto set = mine_triplets_image(ds, 1, 1);
    const auto problem = TrainingProblem::image(ds, set);
    const auto duals = initial_duals(problem);
    TrainConfig cfg;
    cfg.seed = 3;
    const auto wl = learn_hash(problem, duals, cfg);

    std::vector<double> xs{-3.0, -2.5, -2.0, -1.5, 1.0, 1.5, 2.0, 2.5};
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double cut = 0.5 * (xs[i] + xs[i + 1]);
        for (double dir : {1.0, -1.0}) {
            const HashFunction h({dir}, -dir * cut);
            for (int r = 1; r <= 2; ++r) best = std::max(best, weak_objective(h, problem, duals, r));
        }
    }
    CHECK(wl.objective > 0.0);
    CHECK(wl.objective == doctest::Approx(best).epsilon(1e-12));
    CHECK(wl.objective == doctest::Approx(weak_objective(wl.function, problem, duals, wl.r)).epsilon(1e-15));
    // The class split itself scores 0 for both classes: the two Pi terms cancel.
    CHECK(weak_objective(HashFunction({1.0}, 0.25), problem, duals, 1) == 0.0);
}

TEST_CASE("learn_hash with zero duals returns a zero objective") {
    std::mt19937_64 rng(2);
    const Dataset ds(testing::random_matrix(rng, 10, 2), testing::balanced_labels(2, 5));
    const auto problem = TrainingProblem::image(ds, mine_triplets_image(ds, 2, 2));
    DualState zero;
    zero.values.assign(problem.term_count(), 0.0);
    TrainConfig cfg;
    cfg.restarts = 10;
    const auto wl = learn_hash(problem, zero, cfg);
    CHECK(wl.objective == 0.0);
}

TEST_CASE("learn_hash is deterministic for a fixed seed") {
    std::mt19937_64 rng(6);
    const Dataset ds(testing::random_matrix(rng, 18, 3), testing::balanced_labels(3, 6));
    const auto problem = TrainingProblem::image(ds, mine_triplets_image(ds, 2, 2));
    const auto duals = initial_duals(problem);
    TrainConfig cfg;
    cfg.seed = 77;
    cfg.restarts = 20;
    const auto a = learn_hash(problem, duals, cfg, 4);
    const auto b = learn_hash(problem, duals, cfg, 4);
    CHECK(a.function == b.function);
    CHECK(a.r == b.r);
    CHECK(a.objective == b.objective);
}

TEST_CASE("initial duals") {
    const Dataset ds(Matrix(4, 2, {0.0, 0.0, 0.1, 0.0, 5.0, 5.0, 5.1, 5.0}), {1, 1, 2, 2});
    const auto problem = TrainingProblem::image(ds, mine_triplets_image(ds, 1, 1));
    const auto d = initial_duals(problem);
    REQUIRE(d.size() == 4);
    for (double u : d.values) CHECK(u == doctest::Approx(1.0 / 8.0));

    const PatchSet ps(Matrix(4, 1, {0.0, 0.1, 5.0, 5.1}), {0, 0, 1, 2}, {1, 2, 2});
    const auto pp = TrainingProblem::patch(ps, mine_neighbors_patch(ps));
    const auto v = initial_duals(pp);
    REQUIRE(v.size() == 3);
    for (double u : v.values) CHECK(u == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("solve_primal: no columns gives terms * ln 2") {
    const BitFeatures features(6);
    const std::vector<MarginTerm> terms(6, MarginTerm{0, 1});
    const LogisticLoss loss;
    const auto sol = solve_primal(features, terms, 2, loss, PrimalOptions{});
    CHECK(sol.weights.bits() == 0);
    CHECK(sol.objective == doctest::Approx(6 * std::numbers::ln2).epsilon(1e-14));
}

TEST_CASE("solve_primal: a huge nu drives W to zero") {
    const HandInstance inst;
    const LogisticLoss loss;
    PrimalOptions options;
    options.nu = 1e6;
    const auto sol = solve_primal(inst.features, inst.terms, 2, loss, options);
    for (double w : sol.weights.entries()) CHECK(w == 0.0);
    CHECK(sol.objective == doctest::Approx(4 * std::numbers::ln2).epsilon(1e-12));
}

TEST_CASE("solve_primal matches the grid-search oracle (l1)") {
    const HandInstance inst;
    const LogisticLoss loss;
    PrimalOptions options;
    options.nu = 0.5;
    const auto sol = solve_primal(inst.features, inst.terms, 2, loss, options);
    const double grid = grid_minimum(inst, options);
    CHECK(std::abs(sol.objective - grid) <= 1e-3);
    CHECK(sol.objective <= grid + 1e-12);
    CHECK(sol.objective ==
          doctest::Approx(primal_objective(sol.weights, inst.features, inst.terms, loss, options)).epsilon(1e-12));
}

TEST_CASE("solve_primal matches the grid-search oracle (linf)") {
    const HandInstance inst;
    const LogisticLoss loss;
    PrimalOptions options;
    options.nu = 0.5;
    options.penalty = Penalty::ellinf;
    const auto sol = solve_primal(inst.features, inst.terms, 2, loss, options);
    const double grid = grid_minimum(inst, options);
    CHECK(std::abs(sol.objective - grid) <= 1e-3);
    CHECK(sol.objective <= grid + 1e-9);
}

TEST_CASE("solve_primal: warm start is never worsened and column counts are checked") {
    const HandInstance inst;
    const LogisticLoss loss;
    PrimalOptions options;
    options.nu = 0.5;
    const auto cold = solve_primal(inst.features, inst.terms, 2, loss, options);
    const auto warm = solve_primal(inst.features, inst.terms, 2, loss, options, &cold.weights);
    CHECK(warm.objective <= cold.objective);
    const WeightMatrix wrong(2, 3);
    CHECK_THROWS_AS(solve_primal(inst.features, inst.terms, 2, loss, options, &wrong), DimensionError);
    CHECK_THROWS_AS(solve_primal(inst.features, inst.terms, 1, loss, options), DimensionError);
}

TEST_CASE("solve_primal reports non-convergence with the last iterate") {
    const HandInstance inst;
    const LogisticLoss loss;
    PrimalOptions options;
    options.nu = 0.5;
    options.solver.max_iterations = 1;
    options.solver.value_tolerance = 0.0;
    try {
        solve_primal(inst.features, inst.terms, 2, loss, options);
        FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
        CHECK(e.last_iterate().weights.bits() == 2);
        CHECK(e.last_iterate().iterations == 1);
    }
}

TEST_CASE("update_duals examples") {
    const HandInstance inst;
    const LogisticLoss loss;
    const auto half = update_duals(WeightMatrix(2, 2), inst.features, inst.terms, loss);
    for (double u : half.values) CHECK(u == 0.5);

    BitFeatures one(1);
    one.append({1.0});
    const std::vector<MarginTerm> term{{0, std::nullopt}};
    const auto d = update_duals(WeightMatrix(1, 1, {std::log(3.0)}), one, term, loss);
    CHECK(d.values[0] == doctest::Approx(0.25).epsilon(1e-15));

    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const WeightMatrix w(2, 2, testing::random_weights(rng, 4));
        const auto u = update_duals(w, inst.features, inst.terms, loss);
        const auto rho = margins(w, inst.features, inst.terms);
        for (std::size_t t = 0; t < 4; ++t) {
            CHECK(u.values[t] == doctest::Approx(-loss.derivative(rho[t])).epsilon(1e-15));
            CHECK(u.values[t] > 0.0);
            CHECK(u.values[t] < 1.0);
        }
    }
}

TEST_CASE("margins follow rho = a . (w_anchor - w_miss)") {
    const HandInstance inst;
    const WeightMatrix w(2, 2, {1.0, 0.25, 0.5, 2.0});
    const auto rho = margins(w, inst.features, inst.terms);
    CHECK(rho[0] == doctest::Approx(2.0 * (1.0 - 0.25)));
    CHECK(rho[1] == doctest::Approx(2.0 * (1.0 - 0.25) - 2.0 * (0.5 - 2.0)));
    CHECK(rho[2] == doctest::Approx(2.0 * (2.0 - 0.5)));
    CHECK(rho[3] == doctest::Approx(-2.0 * (0.25 - 1.0) + 2.0 * (2.0 - 0.5)));
}

TEST_CASE("dual feasibility and gap after a weight solve") {
    std::mt19937_64 rng(21);
    const Dataset ds(testing::random_matrix(rng, 9, 2), testing::balanced_labels(3, 3));
    auto set = mine_triplets_image(ds, 1, 1);
    set.triples.resize(8);
    const auto problem = TrainingProblem::image(ds, set);
    CodeBook cb(2);
    std::normal_distribution<double> normal;
    for (int s = 0; s < 3; ++s) cb.append(HashFunction({normal(rng), normal(rng)}, 0.2 * normal(rng)));
    const auto features = bit_features(problem, cb);
    const LogisticLoss loss;
    PrimalOptions options;
    options.nu = 0.1;
    const auto sol = solve_primal(features, problem.terms(), 3, loss, options);
    const auto u = update_duals(sol.weights, features, problem.terms(), loss);
    const auto pi = dual_constraint_values(u, features, problem.terms(), 3);
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t c = 0; c < 3; ++c) CHECK(pi(s, c) <= options.nu + 1e-6);
    }
    const double dual = dual_objective(u, loss);
    // The duals are only feasible to within tolerance, so the gap may be slightly negative.
    CHECK(std::abs(sol.objective - dual) / std::max(1.0, std::abs(sol.objective)) <= 1e-4);
}

TEST_CASE("train: one bit on separable blobs gives a positive average margin") {
    synthetic::BlobOptions bo;
    bo.classes = 2;
    bo.per_class = 20;
    bo.dim = 3;
    const auto ds = synthetic::blobs(bo, 4);
    const auto set = mine_triplets_image(ds, 3, 3);
    TrainConfig cfg;
    cfg.bits = 1;
    cfg.restarts = 30;
    const auto model = train(ds, set, cfg);
    REQUIRE(model.codebook.bit_count() == 1);
    const auto problem = TrainingProblem::image(ds, set);
    const auto rho = margins(model.weights, bit_features(problem, model.codebook), problem.terms());
    double mean = 0.0;
    for (double r : rho) mean += r;
    CHECK(mean / static_cast<double>(rho.size()) > 0.0);
}

TEST_CASE("train: trace is non-increasing and runs are reproducible") {
    synthetic::SpiralOptions so;
    so.per_class = 40;
    const auto ds = synthetic::spiral(so, 3);
    const auto set = mine_triplets_image(ds, 3, 3);
    TrainConfig cfg;
    cfg.bits = 5;
    cfg.restarts = 20;
    cfg.seed = 9;
    const auto a = train(ds, set, cfg);
    const auto b = train(ds, set, cfg);
    CHECK(a.codebook == b.codebook);
    CHECK(a.weights == b.weights);
    REQUIRE(a.trace.size() == a.codebook.bit_count());
    for (std::size_t i = 1; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].objective <= a.trace[i - 1].objective + 1e-8);
        CHECK(a.trace[i].iteration == i + 1);
    }
    CHECK(a.trace.front().objective <= static_cast<double>(set.size()) * std::numbers::ln2);
}

TEST_CASE("train: patch mode uses one weight column and per-image duals") {
    std::mt19937_64 rng(15);
    std::vector<double> values;
    std::vector<std::size_t> owners;
    std::normal_distribution<double> noise(0.0, 0.3);
    const std::vector<int> image_labels{1, 1, 2, 2, 1, 2};
    for (std::size_t i = 0; i < image_labels.size(); ++i) {
        for (int j = 0; j < 4; ++j) {
            const double center = image_labels[i] == 1 ? -1.0 : 1.0;
            values.push_back(center + noise(rng));
            values.push_back(noise(rng));
            owners.push_back(i);
        }
    }
    const PatchSet ps(Matrix(owners.size(), 2, values), owners, image_labels);
    const auto set = mine_neighbors_patch(ps);
    const auto problem = TrainingProblem::patch(ps, set);
    CHECK(problem.term_count() == 6);
    CHECK(problem.columns() == 1);

    // Patch objective: sum_i v_i sum_j a_(i,j).
    const auto duals = initial_duals(problem);
    const HashFunction h({1.0, 0.2}, 0.1);
    double expected = 0.0;
    for (const auto& tr : set.triples) {
        const int a = eval_sign(h, ps.row(tr.anchor));
        expected += duals.values[ps.owner(tr.anchor)] *
                    triplet_bit_feature(a, eval_sign(h, ps.row(tr.hit)), eval_sign(h, ps.row(tr.miss)));
    }
    CHECK(weak_objective(h, problem, duals, 0) == doctest::Approx(expected).epsilon(1e-14));

    TrainConfig cfg;
    cfg.bits = 3;
    cfg.restarts = 20;
    const auto model = train(ps, set, cfg);
    CHECK(model.mode == Mode::patch);
    CHECK(model.weights.columns() == 1);
    CHECK(model.weights.bits() == model.codebook.bit_count());
    for (const auto& row : model.trace) CHECK(row.chosen_class == 0);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.bits = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.nu = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.restarts = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.loss = "hinge";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
