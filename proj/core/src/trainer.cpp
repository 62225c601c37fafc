#include "cbid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>

namespace cbid {

// ---------------------------------------------------------------------------
// Problem layout

TrainingProblem TrainingProblem::image(const Dataset& ds, const TripletSet& triplets) {
    if (triplets.mode != Mode::image) throw DataError("image training needs image-mode triplets");
    validate_triplets(triplets, ds.labels());
    TrainingProblem p;
    p.mode_ = Mode::image;
    p.points_ = ds.features();
    p.triples_ = triplets.triples;
    p.columns_ = static_cast<std::size_t>(ds.classes());
    p.classes_ = ds.classes();
    p.term_of_.resize(p.triples_.size());
    p.terms_.reserve(p.triples_.size());
    for (std::size_t t = 0; t < p.triples_.size(); ++t) {
        const auto& tr = p.triples_[t];
        p.term_of_[t] = t;
        p.terms_.push_back({static_cast<std::size_t>(ds.label(tr.anchor) - 1),
                            static_cast<std::size_t>(tr.miss_class - 1)});
    }
    return p;
}

TrainingProblem TrainingProblem::patch(const PatchSet& ps, const TripletSet& triplets) {
    if (triplets.mode != Mode::patch) throw DataError("patch training needs patch-mode triplets");
    validate_triplets(triplets, ps.patch_labels());
    TrainingProblem p;
    p.mode_ = Mode::patch;
    p.points_ = ps.patches();
    p.triples_ = triplets.triples;
    p.columns_ = 1;
    p.classes_ = ps.classes();
    p.terms_.assign(ps.images(), MarginTerm{0, std::nullopt});
    p.term_of_.resize(p.triples_.size());
    for (std::size_t t = 0; t < p.triples_.size(); ++t) p.term_of_[t] = ps.owner(p.triples_[t].anchor);
    return p;
}

DualState initial_duals(const TrainingProblem& problem) {
    DualState d;
    if (problem.term_count() == 0) return d;
    const double value = problem.mode() == Mode::image
                             ? 1.0 / (static_cast<double>(problem.term_count()) *
                                      static_cast<double>(problem.classes()))
                             : 1.0 / static_cast<double>(problem.term_count());
    d.values.assign(problem.term_count(), value);
    return d;
}

// ---------------------------------------------------------------------------
// Bit features

void BitFeatures::append(std::vector<double> column) {
    if (column.size() != terms_) throw DimensionError("bit feature column has the wrong length");
    columns_.push_back(std::move(column));
}

namespace {

std::vector<int> point_signs(const TrainingProblem& problem, const HashFunction& h) {
    if (h.dim() != problem.dim()) throw DimensionError("hash function dimension mismatch");
    std::vector<int> signs(problem.points().rows());
    for (std::size_t i = 0; i < signs.size(); ++i) signs[i] = eval_sign(h, problem.points().row(i));
    return signs;
}

std::vector<double> projections(const Matrix& points, std::span<const double> beta, double bias) {
    std::vector<double> z(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto x = points.row(i);
        double v = bias;
        for (std::size_t j = 0; j < x.size(); ++j) v += beta[j] * x[j];
        z[i] = v;
    }
    return z;
}

std::size_t column_of(const TrainingProblem& problem, int r) {
    if (problem.mode() == Mode::patch) return 0;
    if (r < 1 || r > problem.classes()) {
        throw DataError("class " + std::to_string(r) + " outside 1.." +
                        std::to_string(problem.classes()));
    }
    return static_cast<std::size_t>(r - 1);
}

// Per-triple coefficient of a in the objective for one weight column.
std::vector<double> triple_weights(const TrainingProblem& problem, const DualState& duals,
                                   std::size_t column) {
    if (duals.size() != problem.term_count()) {
        throw DimensionError("dual state has " + std::to_string(duals.size()) + " entries, problem has " +
                             std::to_string(problem.term_count()) + " terms");
    }
    const auto& triples = problem.triples();
    std::vector<double> omega(triples.size(), 0.0);
    for (std::size_t t = 0; t < triples.size(); ++t) {
        const std::size_t term = problem.term_of(t);
        const MarginTerm& mt = problem.terms()[term];
        double coef = 0.0;
        if (mt.positive_column == column) coef += 1.0;
        if (mt.negative_column && *mt.negative_column == column) coef -= 1.0;
        omega[t] = coef * duals.values[term];
    }
    return omega;
}

double sign_objective(const TrainingProblem& problem, std::span<const double> omega,
                      std::span<const double> z) {
    const auto& triples = problem.triples();
    double sum = 0.0;
    for (std::size_t t = 0; t < triples.size(); ++t) {
        if (omega[t] == 0.0) continue;
        const auto& tr = triples[t];
        const int a = z[tr.anchor] >= 0.0 ? 1 : -1;
        const int hp = z[tr.hit] >= 0.0 ? 1 : -1;
        const int hm = z[tr.miss] >= 0.0 ? 1 : -1;
        sum += omega[t] * triplet_bit_feature(a, hp, hm);
    }
    return sum;
}

// Smoothed objective at (beta, bias); fills the gradient when `grad` is non-empty
// (layout: beta followed by bias).
double smooth_objective(const TrainingProblem& problem, std::span<const double> omega,
                        std::span<const double> beta, double bias, std::span<double> grad) {
    const Matrix& points = problem.points();
    const auto z = projections(points, beta, bias);
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) g[i] = smooth_sign(z[i]);

    const bool want_grad = !grad.empty();
    std::vector<double> dg;
    if (want_grad) dg.assign(z.size(), 0.0);

    const auto& triples = problem.triples();
    double sum = 0.0;
    for (std::size_t t = 0; t < triples.size(); ++t) {
        const double w = omega[t];
        if (w == 0.0) continue;
        const auto& tr = triples[t];
        const double to_miss = g[tr.anchor] - g[tr.miss];
        const double to_hit = g[tr.anchor] - g[tr.hit];
        sum += w * (to_miss * to_miss - to_hit * to_hit);
        if (want_grad) {
            dg[tr.anchor] += 2.0 * w * (to_miss - to_hit);
            dg[tr.miss] -= 2.0 * w * to_miss;
            dg[tr.hit] += 2.0 * w * to_hit;
        }
    }
    if (want_grad) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const std::size_t d = beta.size();
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (dg[i] == 0.0) continue;
            const double coef = dg[i] * smooth_sign_derivative(z[i]);
            const auto x = points.row(i);
            for (std::size_t j = 0; j < d; ++j) grad[j] += coef * x[j];
            grad[d] += coef;
        }
    }
    return sum;
}

}  // namespace

std::vector<double> bit_feature_column(const TrainingProblem& problem, const HashFunction& h) {
    const auto signs = point_signs(problem, h);
    std::vector<double> column(problem.term_count(), 0.0);
    const auto& triples = problem.triples();
    for (std::size_t t = 0; t < triples.size(); ++t) {
        const auto& tr = triples[t];
        column[problem.term_of(t)] +=
            triplet_bit_feature(signs[tr.anchor], signs[tr.hit], signs[tr.miss]);
    }
    return column;
}

BitFeatures bit_features(const TrainingProblem& problem, const CodeBook& cb) {
    BitFeatures out(problem.term_count());
    for (const auto& h : cb.functions()) out.append(bit_feature_column(problem, h));
    return out;
}

double weak_objective(const HashFunction& h, const TrainingProblem& problem,
                      const DualState& duals, int r) {
    const auto omega = triple_weights(problem, duals, column_of(problem, r));
    if (h.dim() != problem.dim()) throw DimensionError("hash function dimension mismatch");
    const auto z = projections(problem.points(), h.beta(), h.bias());
    return sign_objective(problem, omega, z);
}

double smoothed_weak_objective(const HashFunction& h, const TrainingProblem& problem,
                               const DualState& duals, int r) {
    const auto omega = triple_weights(problem, duals, column_of(problem, r));
    if (h.dim() != problem.dim()) throw DimensionError("hash function dimension mismatch");
    return smooth_objective(problem, omega, h.beta(), h.bias(), {});
}

WeakGradient weak_gradient(const HashFunction& h, const TrainingProblem& problem,
                           const DualState& duals, int r) {
    const auto omega = triple_weights(problem, duals, column_of(problem, r));
    if (h.dim() != problem.dim()) throw DimensionError("hash function dimension mismatch");
    std::vector<double> grad(h.dim() + 1);
    smooth_objective(problem, omega, h.beta(), h.bias(), grad);
    WeakGradient out;
    out.bias = grad.back();
    grad.pop_back();
    out.beta = std::move(grad);
    return out;
}

// ---------------------------------------------------------------------------
// Weak learner

void TrainConfig::validate() const {
    if (bits < 1) throw ConfigError("t must be at least 1");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("nu must be positive");
    if (restarts < 1) throw ConfigError("restarts must be at least 1");
    if (memory < 1) throw ConfigError("quasi-Newton memory must be at least 1");
    if (!(gradient_tolerance >= 0.0)) throw ConfigError("gradient tolerance must be non-negative");
    try {
        make_loss(loss);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

namespace {

std::optional<HashFunction> make_function(std::span<const double> params) {
    std::vector<double> beta(params.begin(), params.end() - 1);
    const double bias = params.back();
    bool nonzero = false;
    for (double b : beta) {
        if (!std::isfinite(b)) return std::nullopt;
        nonzero = nonzero || b != 0.0;
    }
    if (!nonzero || !std::isfinite(bias)) return std::nullopt;
    return HashFunction(std::move(beta), bias);
}

}  // namespace

WeakLearner learn_hash(const TrainingProblem& problem, const DualState& duals,
                       const TrainConfig& cfg, std::size_t round) {
    const std::size_t d = problem.dim();
    const std::size_t columns = problem.columns();
    const Matrix& points = problem.points();
    if (points.empty()) throw DataError("training problem has no points");

    std::vector<std::vector<double>> omegas;
    omegas.reserve(columns);
    for (std::size_t c = 0; c < columns; ++c) omegas.push_back(triple_weights(problem, duals, c));

    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(round)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Random seeds: unit-norm directions with a threshold inside the data range.
    struct Candidate {
        std::vector<double> params;
        double smoothed = -std::numeric_limits<double>::infinity();
    };
    std::vector<Candidate> best(columns);
    std::vector<double> params(d + 1);
    for (std::size_t k = 0; k < cfg.restarts; ++k) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                params[j] = normal(rng);
                norm += params[j] * params[j];
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < d; ++j) params[j] /= norm;
        const auto z = projections(points, std::span<const double>(params.data(), d), 0.0);
        const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
        std::uniform_real_distribution<double> offset(-*hi, -*lo);
        params[d] = *hi > *lo ? offset(rng) : -*lo;

        for (std::size_t c = 0; c < columns; ++c) {
            const double value = smooth_objective(problem, omegas[c],
                                                  std::span<const double>(params.data(), d),
                                                  params[d], {});
            if (value > best[c].smoothed) best[c] = {params, value};
        }
    }

    const LbfgsOptions opts = cfg.lbfgs();
    WeakLearner winner;
    bool have_winner = false;
    for (std::size_t c = 0; c < columns; ++c) {
        const auto& omega = omegas[c];
        const Objective negated = [&](std::span<const double> x, std::span<double> grad) {
            const double value = smooth_objective(problem, omega, x.first(d), x[d], grad);
            for (auto& g : grad) g = -g;
            return -value;
        };
        auto seed_fn = make_function(best[c].params);
        const auto ascent = minimize(negated, best[c].params, opts);
        auto ascended = make_function(ascent.x);

        std::optional<HashFunction> chosen;
        double chosen_value = -std::numeric_limits<double>::infinity();
        for (auto* candidate : {&ascended, &seed_fn}) {
            if (!*candidate) continue;
            const auto z = projections(points, (*candidate)->beta(), (*candidate)->bias());
            const double value = sign_objective(problem, omega, z);
            if (value > chosen_value) {
                chosen_value = value;
                chosen = *candidate;
            }
        }
        if (!chosen) continue;
        if (!have_winner || chosen_value > winner.objective) {
            winner.function = std::move(*chosen);
            winner.objective = chosen_value;
            winner.r = problem.mode() == Mode::image ? static_cast<int>(c) + 1 : 0;
            have_winner = true;
        }
    }
    if (!have_winner) throw DataError("weak learner found no valid hash function");
    return winner;
}

// ---------------------------------------------------------------------------
// Weight solve

namespace {

std::size_t check_terms(const BitFeatures& features, std::span<const MarginTerm> terms,
                        std::size_t columns) {
    if (features.terms() != terms.size()) {
        throw DimensionError("bit features cover " + std::to_string(features.terms()) +
                             " terms, layout has " + std::to_string(terms.size()));
    }
    for (const auto& t : terms) {
        if (t.positive_column >= columns || (t.negative_column && *t.negative_column >= columns)) {
            throw DimensionError("margin term refers to a missing weight column");
        }
    }
    return features.bits();
}

// Term-major copy of the bit features, with the loss part of the primal objective.
class LossPart {
public:
    LossPart(const BitFeatures& features, std::span<const MarginTerm> terms, std::size_t columns,
             const LossPlugin& loss)
        : terms_(terms), columns_(columns), bits_(features.bits()), loss_(loss),
          dense_(terms.size() * features.bits()) {
        for (std::size_t s = 0; s < bits_; ++s) {
            const auto col = features.bit(s);
            for (std::size_t t = 0; t < terms.size(); ++t) dense_[t * bits_ + s] = col[t];
        }
    }

    std::size_t variables() const noexcept { return bits_ * columns_; }

    // When every term is a column difference, the loss ignores a constant added to a row.
    FlatGroups flat_groups() const {
        FlatGroups groups;
        if (columns_ < 2) return groups;
        for (const auto& t : terms_) {
            if (!t.negative_column) return groups;
        }
        for (std::size_t s = 0; s < bits_; ++s) {
            auto& row = groups.emplace_back(columns_);
            for (std::size_t c = 0; c < columns_; ++c) row[c] = s * columns_ + c;
        }
        return groups;
    }

    double margin(std::size_t t, std::span<const double> w) const {
        const auto& term = terms_[t];
        double rho = 0.0;
        const double* a = dense_.data() + t * bits_;
        for (std::size_t s = 0; s < bits_; ++s) {
            if (a[s] == 0.0) continue;
            double diff = w[s * columns_ + term.positive_column];
            if (term.negative_column) diff -= w[s * columns_ + *term.negative_column];
            rho += a[s] * diff;
        }
        return rho;
    }

    double operator()(std::span<const double> w, std::span<double> grad) const {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
        long double sum = 0.0L;
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const double rho = margin(t, w);
            sum += loss_.value(rho);
            if (grad.empty()) continue;
            const double dl = loss_.derivative(rho);
            const auto& term = terms_[t];
            const double* a = dense_.data() + t * bits_;
            for (std::size_t s = 0; s < bits_; ++s) {
                if (a[s] == 0.0) continue;
                grad[s * columns_ + term.positive_column] += dl * a[s];
                if (term.negative_column) grad[s * columns_ + *term.negative_column] -= dl * a[s];
            }
        }
        return static_cast<double>(sum);
    }

    // Hessian of the loss part at w: sum over terms of L''(rho) b b^T.
    HessianProduct hessian_at(std::span<const double> w) const {
        std::vector<double> curvature(terms_.size());
        for (std::size_t t = 0; t < terms_.size(); ++t) curvature[t] = loss_.curvature(margin(t, w));
        return [this, curvature = std::move(curvature)](std::span<const double> v, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t t = 0; t < terms_.size(); ++t) {
                const double c = curvature[t] * margin(t, v);
                if (c == 0.0) continue;
                const auto& term = terms_[t];
                const double* a = dense_.data() + t * bits_;
                for (std::size_t s = 0; s < bits_; ++s) {
                    if (a[s] == 0.0) continue;
                    out[s * columns_ + term.positive_column] += c * a[s];
                    if (term.negative_column) out[s * columns_ + *term.negative_column] -= c * a[s];
                }
            }
        };
    }

private:
    std::span<const MarginTerm> terms_;
    std::size_t columns_;
    std::size_t bits_;
    const LossPlugin& loss_;
    std::vector<double> dense_;
};

std::vector<double> padded_start(const WeightMatrix* warm, std::size_t bits, std::size_t columns) {
    std::vector<double> x(bits * columns, 0.0);
    if (warm == nullptr) return x;
    if (warm->columns() != columns) throw DimensionError("warm start has the wrong column count");
    const std::size_t rows = std::min(bits, warm->bits());
    for (std::size_t s = 0; s < rows; ++s) {
        for (std::size_t c = 0; c < columns; ++c) x[s * columns + c] = (*warm)(s, c);
    }
    return x;
}

WeightMatrix to_weights(std::span<const double> x, std::size_t bits, std::size_t columns) {
    std::vector<double> entries(x.begin(), x.end());
    for (auto& w : entries) w = std::max(w, 0.0);
    return WeightMatrix(bits, columns, std::move(entries));
}

PrimalSolution solve_ell1(const LossPart& part, std::size_t bits, std::size_t columns,
                          const PrimalOptions& options, std::vector<double> x0) {
    const std::size_t n = part.variables();
    const double nu = options.nu;
    const Objective f = [&](std::span<const double> w, std::span<double> grad) {
        double value = part(w, grad);
        double total = 0.0;
        for (double v : w) total += v;
        for (auto& g : grad) g += nu;
        return value + nu * total;
    };
    const Hessian hessian = [&](std::span<const double> w) { return part.hessian_at(w); };
    const std::vector<double> lower(n, 0.0);
    const auto result = minimize_newton_bounded(f, hessian, std::move(x0), lower, {}, options.solver,
                                                part.flat_groups());
    PrimalSolution sol{to_weights(result.x, bits, columns), result.value,
                       result.projected_gradient, result.iterations};
    if (!succeeded(result.status)) {
        throw NonConvergenceError(std::string("weight solve did not converge (") +
                                      to_string(result.status) + ", projected gradient " +
                                      std::to_string(result.projected_gradient) + ")",
                                  std::move(sol));
    }
    return sol;
}

// min_W loss(W) + nu max(W) as a one-dimensional convex search over the cap M of
// min_{0 <= W <= M} loss(W) + nu M, bisecting on the sign of its derivative
// nu - (sum of upper-bound multipliers).
PrimalSolution solve_ellinf(const LossPart& part, std::size_t bits, std::size_t columns,
                            const PrimalOptions& options, std::vector<double> x0) {
    const std::size_t n = part.variables();
    const double nu = options.nu;
    NewtonOptions inner = options.solver;
    inner.gradient_tolerance = options.solver.gradient_tolerance / static_cast<double>(n + 1);
    const std::vector<double> lower(n, 0.0);
    const Objective f = [&](std::span<const double> w, std::span<double> grad) {
        return part(w, grad);
    };
    const Hessian hessian = [&](std::span<const double> w) { return part.hessian_at(w); };
    const FlatGroups flat = part.flat_groups();

    struct Probe {
        double cap = 0.0;
        LbfgsResult inner;
        double objective = 0.0;
        double slope = 0.0;
    };
    std::vector<double> start = x0;
    auto probe = [&](double cap) {
        std::vector<double> upper(n, cap);
        for (auto& v : start) v = std::min(v, cap);
        Probe p;
        p.cap = cap;
        p.inner = minimize_newton_bounded(f, hessian, start, lower, upper, inner, flat);
        start = p.inner.x;
        double multipliers = 0.0;
        double largest = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            largest = std::max(largest, p.inner.x[i]);
            if (p.inner.x[i] >= cap) multipliers += std::max(-p.inner.gradient[i], 0.0);
        }
        p.objective = p.inner.value + nu * largest;
        p.slope = nu - multipliers;
        return p;
    };

    Probe best = probe(0.0);
    std::vector<Probe> probes;
    auto keep = [&](Probe p) {
        if (p.objective < best.objective) best = p;
        probes.push_back(p);
        return p;
    };
    if (best.slope < 0.0) {
        double lo = 0.0;
        double hi = 1.0;
        double slope_lo = best.slope;
        double slope_hi = 0.0;
        for (double v : x0) hi = std::max(hi, v);
        for (int i = 0; i < 200; ++i) {
            const Probe p = keep(probe(hi));
            slope_hi = p.slope;
            if (p.slope >= 0.0) break;
            lo = hi;
            slope_lo = p.slope;
            hi *= 2.0;
        }
        for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            const Probe p = keep(probe(mid));
            if (p.slope >= 0.0) {
                hi = mid;
                slope_hi = p.slope;
            } else {
                lo = mid;
                slope_lo = p.slope;
            }
        }
        if (slope_hi > slope_lo) keep(probe(lo + (hi - lo) * (-slope_lo) / (slope_hi - slope_lo)));
        // Objectives near the optimal cap differ by rounding only; prefer the flattest slope there.
        const double noise = 1e-12 * std::max(1.0, std::abs(best.objective));
        for (const Probe& p : probes) {
            if (p.objective <= best.objective + noise && std::abs(p.slope) < std::abs(best.slope)) best = p;
        }
    }

    PrimalSolution sol{to_weights(best.inner.x, bits, columns), best.objective,
                       best.inner.projected_gradient, best.inner.iterations};
    if (!succeeded(best.inner.status)) {
        throw NonConvergenceError(std::string("capped weight solve did not converge (") +
                                      to_string(best.inner.status) + ")",
                                  std::move(sol));
    }
    return sol;
}

}  // namespace

std::vector<double> margins(const WeightMatrix& w, const BitFeatures& features,
                            std::span<const MarginTerm> terms) {
    const std::size_t bits = check_terms(features, terms, w.columns());
    if (w.bits() != bits) throw DimensionError("weight rows do not match the bit count");
    static const LogisticLoss unused;
    const LossPart part(features, terms, w.columns(), unused);
    std::vector<double> rho(terms.size());
    for (std::size_t t = 0; t < terms.size(); ++t) rho[t] = part.margin(t, w.entries());
    return rho;
}

double primal_objective(const WeightMatrix& w, const BitFeatures& features,
                        std::span<const MarginTerm> terms, const LossPlugin& loss,
                        const PrimalOptions& options) {
    const auto rho = margins(w, features, terms);
    long double sum = 0.0L;
    for (double r : rho) sum += loss.value(r);
    return static_cast<double>(sum) + options.nu * reg_value(options.penalty, w);
}

PrimalSolution solve_primal(const BitFeatures& features, std::span<const MarginTerm> terms,
                            std::size_t columns, const LossPlugin& loss,
                            const PrimalOptions& options, const WeightMatrix* warm_start) {
    const std::size_t bits = check_terms(features, terms, columns);
    if (!(options.nu > 0.0)) throw DataError("nu must be positive");
    const LossPart part(features, terms, columns, loss);
    auto x0 = padded_start(warm_start, bits, columns);

    PrimalSolution sol = options.penalty == Penalty::ell1
                             ? solve_ell1(part, bits, columns, options, x0)
                             : solve_ellinf(part, bits, columns, options, x0);
    if (warm_start != nullptr) {
        // The padded warm start is feasible; never return anything worse than it.
        const WeightMatrix start = to_weights(x0, bits, columns);
        const double start_value = primal_objective(start, features, terms, loss, options);
        if (start_value < sol.objective) {
            sol.weights = start;
            sol.objective = start_value;
        }
    }
    return sol;
}

DualState update_duals(const WeightMatrix& w, const BitFeatures& features,
                       std::span<const MarginTerm> terms, const LossPlugin& loss) {
    const auto rho = margins(w, features, terms);
    DualState d;
    d.values.resize(rho.size());
    for (std::size_t t = 0; t < rho.size(); ++t) d.values[t] = -loss.derivative(rho[t]);
    return d;
}

Matrix dual_constraint_values(const DualState& duals, const BitFeatures& features,
                              std::span<const MarginTerm> terms, std::size_t columns) {
    const std::size_t bits = check_terms(features, terms, columns);
    if (duals.size() != terms.size()) throw DimensionError("dual state does not match the terms");
    Matrix out(bits, columns);
    for (std::size_t s = 0; s < bits; ++s) {
        const auto col = features.bit(s);
        for (std::size_t t = 0; t < terms.size(); ++t) {
            const double v = duals.values[t] * col[t];
            if (v == 0.0) continue;
            out(s, terms[t].positive_column) += v;
            if (terms[t].negative_column) out(s, *terms[t].negative_column) -= v;
        }
    }
    return out;
}

double dual_objective(const DualState& duals, const LossPlugin& loss) {
    long double sum = 0.0L;
    for (double u : duals.values) sum -= loss.conjugate(-u);
    return static_cast<double>(sum);
}

// ---------------------------------------------------------------------------
// Column generation

TrainedModel train(const TrainingProblem& problem, const TrainConfig& cfg) {
    cfg.validate();
    if (problem.triples().empty()) throw DataError("no triplets to train on");
    const auto loss = make_loss(cfg.loss);
    const PrimalOptions options{cfg.nu, cfg.penalty, cfg.newton()};
    const auto terms = std::span<const MarginTerm>(problem.terms());

    TrainedModel model;
    model.mode = problem.mode();
    model.codebook = CodeBook(problem.dim());
    model.weights = WeightMatrix(0, problem.columns());
    BitFeatures features(problem.term_count());
    DualState duals = initial_duals(problem);

    for (std::size_t round = 0; round < cfg.bits; ++round) {
        WeakLearner learner = learn_hash(problem, duals, cfg, round);
        if (learner.objective <= cfg.nu * (1.0 + 1e-6)) break;

        features.append(bit_feature_column(problem, learner.function));
        model.codebook.append(std::move(learner.function));
        const PrimalSolution sol =
            solve_primal(features, terms, problem.columns(), *loss, options, &model.weights);
        model.weights = sol.weights;
        duals = update_duals(model.weights, features, terms, *loss);
        model.trace.push_back({round + 1, sol.objective, learner.objective - cfg.nu, learner.r});
    }
    return model;
}

TrainedModel train(const Dataset& ds, const TripletSet& triplets, const TrainConfig& cfg) {
    return train(TrainingProblem::image(ds, triplets), cfg);
}

TrainedModel train(const PatchSet& ps, const TripletSet& triplets, const TrainConfig& cfg) {
    return train(TrainingProblem::patch(ps, triplets), cfg);
}

}  // namespace cbid
