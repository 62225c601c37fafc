#pragma once

#include "cbid/data_model.hpp"
#include "cbid/errors.hpp"
#include "cbid/hashfn.hpp"
#include "cbid/lbfgs.hpp"
#include "cbid/newton.hpp"
#include "cbid/losses.hpp"
#include "cbid/weights.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cbid {

/// One margin term of the primal: rho = A . (w_positive - w_negative).
/// Image mode has one term per triple (positive = anchor class, negative = miss class);
/// patch mode has one term per image, a single weight column and no negative column.
struct MarginTerm {
    std::size_t positive_column = 0;
    std::optional<std::size_t> negative_column;
};

/// Points on which hash functions are evaluated, the mined triples over them, and the
/// grouping of triples into margin terms.
class TrainingProblem {
public:
    static TrainingProblem image(const Dataset& ds, const TripletSet& triplets);
    static TrainingProblem patch(const PatchSet& ps, const TripletSet& triplets);

    Mode mode() const noexcept { return mode_; }
    const Matrix& points() const noexcept { return points_; }
    std::size_t dim() const noexcept { return points_.cols(); }
    const std::vector<Triplet>& triples() const noexcept { return triples_; }
    /// Margin term that triple `t` contributes to.
    std::size_t term_of(std::size_t t) const { return term_of_[t]; }
    const std::vector<MarginTerm>& terms() const noexcept { return terms_; }
    std::size_t term_count() const noexcept { return terms_.size(); }
    /// Weight columns: k in image mode, 1 in patch mode.
    std::size_t columns() const noexcept { return columns_; }
    int classes() const noexcept { return classes_; }

private:
    Mode mode_ = Mode::image;
    Matrix points_;
    std::vector<Triplet> triples_;
    std::vector<std::size_t> term_of_;
    std::vector<MarginTerm> terms_;
    std::size_t columns_ = 0;
    int classes_ = 0;
};

/// Dual variables, one per margin term (u per triple in image mode, v per image in
/// patch mode).
struct DualState {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

/// Uniform start: 1/(|S| k) per triple in image mode, 1/m per image in patch mode.
DualState initial_duals(const TrainingProblem& problem);

/// |h(anchor) - h(miss)| - |h(anchor) - h(hit)| for +-1 symbols; one of -2, 0, +2.
inline int triplet_bit_feature(int anchor, int hit, int miss) {
    return (anchor != miss ? 2 : 0) - (anchor != hit ? 2 : 0);
}

/// Per-term bit features, one column per learned bit. Entry (term, s) is the sum of
/// a_s over the triples of the term.
class BitFeatures {
public:
    explicit BitFeatures(std::size_t terms = 0) : terms_(terms) {}

    std::size_t terms() const noexcept { return terms_; }
    std::size_t bits() const noexcept { return columns_.size(); }
    double operator()(std::size_t term, std::size_t s) const { return columns_[s][term]; }
    std::span<const double> bit(std::size_t s) const { return columns_[s]; }

    void append(std::vector<double> column);

private:
    std::size_t terms_;
    std::vector<std::vector<double>> columns_;
};

/// Feature column of a single hash function over the problem.
std::vector<double> bit_feature_column(const TrainingProblem& problem, const HashFunction& h);
BitFeatures bit_features(const TrainingProblem& problem, const CodeBook& cb);

/// Sign-evaluated dual-violation objective of h for class `r` (1-based; ignored in
/// patch mode): sum over triples of u_term (delta(r, positive) - delta(r, negative)) a.
double weak_objective(const HashFunction& h, const TrainingProblem& problem,
                      const DualState& duals, int r);

/// Same objective with sign replaced by (2/pi) arctan and |.| by (.)^2.
double smoothed_weak_objective(const HashFunction& h, const TrainingProblem& problem,
                               const DualState& duals, int r);

struct WeakGradient {
    std::vector<double> beta;
    double bias = 0.0;
};

/// Analytic gradient of smoothed_weak_objective with respect to (beta, bias).
WeakGradient weak_gradient(const HashFunction& h, const TrainingProblem& problem,
                           const DualState& duals, int r);

struct TrainConfig {
    std::size_t bits = 8;
    double nu = 1e-6;
    std::size_t restarts = 100;
    std::size_t memory = 10;
    double gradient_tolerance = 1e-6;
    std::size_t max_iterations = 500;
    std::uint64_t seed = 0;
    std::string loss = "logistic";
    Penalty penalty = Penalty::ell1;

    /// Throws ConfigError on an invalid value.
    void validate() const;
    LbfgsOptions lbfgs() const { return {memory, gradient_tolerance, max_iterations}; }
    NewtonOptions newton() const { return {gradient_tolerance, max_iterations}; }
};

struct WeakLearner {
    HashFunction function;
    /// Class label of the violated constraint (1-based); 0 in patch mode.
    int r = 0;
    /// Sign-evaluated objective.
    double objective = 0.0;
};

/// Most violated dual constraint search. `round` decorrelates the seed stream of
/// successive column-generation rounds.
WeakLearner learn_hash(const TrainingProblem& problem, const DualState& duals,
                       const TrainConfig& cfg, std::size_t round = 0);

struct PrimalOptions {
    double nu = 1e-6;
    Penalty penalty = Penalty::ell1;
    NewtonOptions solver;
};

struct PrimalSolution {
    WeightMatrix weights;
    double objective = 0.0;
    double projected_gradient = 0.0;
    std::size_t iterations = 0;
};

/// Thrown when the weight solve does not reach the gradient tolerance; carries the last iterate.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, PrimalSolution last)
        : Error(what), last_(std::move(last)) {}
    const PrimalSolution& last_iterate() const noexcept { return last_; }

private:
    PrimalSolution last_;
};

/// Margins rho per term for the given weights.
std::vector<double> margins(const WeightMatrix& w, const BitFeatures& features,
                            std::span<const MarginTerm> terms);

/// sum_terms L(rho) + nu * Omega(W).
double primal_objective(const WeightMatrix& w, const BitFeatures& features,
                        std::span<const MarginTerm> terms, const LossPlugin& loss,
                        const PrimalOptions& options);

/// Totally corrective weight solve over W >= 0. `warm_start` may have fewer bit rows
/// than `features` (missing rows start at zero).
PrimalSolution solve_primal(const BitFeatures& features, std::span<const MarginTerm> terms,
                            std::size_t columns, const LossPlugin& loss,
                            const PrimalOptions& options,
                            const WeightMatrix* warm_start = nullptr);

/// u = -L'(rho) per term.
DualState update_duals(const WeightMatrix& w, const BitFeatures& features,
                       std::span<const MarginTerm> terms, const LossPlugin& loss);

/// Left-hand side of every generated dual constraint, (bits x columns):
/// sum_terms u (delta(c, positive) - delta(c, negative)) A(term, s).
Matrix dual_constraint_values(const DualState& duals, const BitFeatures& features,
                              std::span<const MarginTerm> terms, std::size_t columns);

/// Dual objective -sum L*(-u), comparable to the primal objective.
double dual_objective(const DualState& duals, const LossPlugin& loss);

struct TraceRow {
    std::size_t iteration = 0;
    double objective = 0.0;
    double max_violation = 0.0;
    int chosen_class = 0;
};

struct TrainedModel {
    Mode mode = Mode::image;
    CodeBook codebook;
    WeightMatrix weights;
    std::vector<TraceRow> trace;
};

/// Column generation: learn_hash, append the bit, re-solve all weights, refresh duals.
/// Stops after cfg.bits rounds or once no dual constraint is violated.
TrainedModel train(const TrainingProblem& problem, const TrainConfig& cfg);
TrainedModel train(const Dataset& ds, const TripletSet& triplets, const TrainConfig& cfg);
TrainedModel train(const PatchSet& ps, const TripletSet& triplets, const TrainConfig& cfg);

}  // namespace cbid
