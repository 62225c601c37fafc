#include "cbid/newton.hpp"

#include "cbid/errors.hpp"

#include "box.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cbid {

namespace {

using detail::Box;
using detail::projected_gradient_norm;

// Sufficient model decrease for the Cauchy and projected searches.
constexpr double mu0 = 0.01;
// Acceptance and radius update thresholds on actual / predicted reduction.
constexpr double eta0 = 1e-4;
constexpr double eta1 = 0.25;
constexpr double eta2 = 0.75;
constexpr int max_searches = 30;
constexpr int max_subspace_passes = 50;
constexpr double noise_fraction = 1e-12;
constexpr double min_damping = 1e-8;

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// q(s) = g.s + s.Hs / 2 around the current iterate.
class Model {
public:
    Model(std::span<const double> g, HessianProduct hv) : g_(g), hv_(std::move(hv)), hs_(g.size()) {}

    double operator()(std::span<const double> s) {
        hv_(s, hs_);
        return dot(g_, s) + 0.5 * dot(s, hs_);
    }
    // g + Hs for the s of the last evaluation.
    void gradient(std::span<double> out) const {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = g_[i] + hs_[i];
    }
    const HessianProduct& hessian() const { return hv_; }

private:
    std::span<const double> g_;
    HessianProduct hv_;
    std::vector<double> hs_;
};

void project_step(const Box& box, std::span<const double> x, std::span<const double> target,
                  std::span<double> s) {
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = box.clamp(i, target[i]) - x[i];
}

// s = P(x - alpha g) - x with q(s) <= mu0 g.s and |s| <= radius; alpha persists across calls.
void cauchy_step(const Box& box, std::span<const double> x, std::span<const double> g, Model& model,
                 double radius, double& alpha, std::span<double> s) {
    const std::size_t n = x.size();
    std::vector<double> target(n);
    auto acceptable = [&](double a) {
        for (std::size_t i = 0; i < n; ++i) target[i] = x[i] - a * g[i];
        project_step(box, x, target, s);
        return norm(s) <= radius && model(s) <= mu0 * dot(g, s);
    };
    if (acceptable(alpha)) {
        std::vector<double> good(s.begin(), s.end());
        for (int i = 0; i < max_searches; ++i) {
            const double bigger = alpha * 10.0;
            if (!acceptable(bigger) || std::equal(good.begin(), good.end(), s.begin())) break;
            alpha = bigger;
            good.assign(s.begin(), s.end());
        }
        std::copy(good.begin(), good.end(), s.begin());
        return;
    }
    for (int i = 0; i < max_searches; ++i) {
        alpha *= 0.1;
        if (acceptable(alpha)) return;
    }
    std::fill(s.begin(), s.end(), 0.0);
}

// Removes the mean over every flat group whose members are all free.
class GroupProjector {
public:
    GroupProjector(const FlatGroups& flat, const std::vector<char>& free) {
        for (const auto& group : flat) {
            if (!group.empty() && std::all_of(group.begin(), group.end(), [&](std::size_t i) { return free[i]; })) {
                groups_.push_back(&group);
            }
        }
    }
    void operator()(std::span<double> v) const {
        for (const auto* group : groups_) {
            double mean = 0.0;
            for (auto i : *group) mean += v[i];
            mean /= static_cast<double>(group->size());
            for (auto i : *group) v[i] -= mean;
        }
    }

private:
    std::vector<const std::vector<std::size_t>*> groups_;
};

// Steihaug CG for min -r0.w + w.(H + shift I)w / 2 over the free coordinates with |w| <= radius,
// restricted to the complement of the free flat groups.
// Returns true when the step ends on the trust-region boundary.
bool steihaug(const HessianProduct& hv, std::span<const double> r0, const std::vector<char>& free,
              const GroupProjector& project, double shift, double radius, double tolerance,
              std::span<double> w) {
    const std::size_t n = r0.size();
    std::vector<double> r(r0.begin(), r0.end()), p(n), hp(n), next_w(n);
    std::fill(w.begin(), w.end(), 0.0);
    project(r);
    p = r;
    double rr = dot(r, r);
    const double target = tolerance * tolerance * rr;
    std::size_t free_count = 0;
    for (char f : free) free_count += f ? 1 : 0;

    auto to_boundary = [&]() {
        const double pp = dot(p, p);
        const double wp = dot(w, p);
        const double ww = dot(w, w);
        const double tau = (-wp + std::sqrt(std::max(wp * wp + pp * (radius * radius - ww), 0.0))) / pp;
        for (std::size_t i = 0; i < n; ++i) w[i] += tau * p[i];
    };

    for (std::size_t it = 0; it < free_count + 10 && rr > target; ++it) {
        hv(p, hp);
        for (std::size_t i = 0; i < n; ++i) {
            hp[i] = free[i] ? hp[i] + shift * p[i] : 0.0;
        }
        project(hp);
        const double curvature = dot(p, hp);
        if (!(curvature > 0.0)) {
            to_boundary();
            return true;
        }
        const double alpha = rr / curvature;
        for (std::size_t i = 0; i < n; ++i) next_w[i] = w[i] + alpha * p[i];
        if (norm(next_w) >= radius) {
            to_boundary();
            return true;
        }
        std::copy(next_w.begin(), next_w.end(), w.begin());
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * hp[i];
        const double next = dot(r, r);
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + (next / rr) * p[i];
        rr = next;
    }
    return false;
}

}  // namespace

LbfgsResult minimize_newton_bounded(const Objective& f, const Hessian& hessian, std::vector<double> x0,
                                    std::span<const double> lower, std::span<const double> upper,
                                    const NewtonOptions& options, const FlatGroups& flat) {
    const std::size_t n = x0.size();
    if ((!lower.empty() && lower.size() != n) || (!upper.empty() && upper.size() != n)) {
        throw DimensionError("bound vectors must match the variable count");
    }
    for (const auto& group : flat) {
        for (auto i : group) {
            if (i >= n) throw DimensionError("flat group refers to a missing variable");
        }
    }
    const Box box{lower, upper};
    for (std::size_t i = 0; i < n; ++i) x0[i] = box.clamp(i, x0[i]);

    LbfgsResult result;
    result.x = std::move(x0);
    result.gradient.assign(n, 0.0);
    result.value = f(result.x, result.gradient);
    result.projected_gradient = projected_gradient_norm(box, result.x, result.gradient);

    // f is affine along a flat group, so sliding it down is exact when its gradient sum is positive.
    auto slide = [&]() {
        bool moved = false;
        for (const auto& group : flat) {
            double slope = 0.0;
            double room = std::numeric_limits<double>::infinity();
            for (auto i : group) {
                slope += result.gradient[i];
                room = std::min(room, result.x[i] - box.lo(i));
            }
            if (!(slope > 0.0) || !(room > 0.0) || !std::isfinite(room)) continue;
            for (auto i : group) result.x[i] = std::max(result.x[i] - room, box.lo(i));
            moved = true;
        }
        if (!moved) return;
        const double value = f(result.x, result.gradient);
        result.value = std::min(result.value, value);
        result.projected_gradient = projected_gradient_norm(box, result.x, result.gradient);
    };
    slide();

    std::vector<double> s(n), trial(n), trial_grad(n), residual(n), w(n), target(n), candidate(n);
    std::vector<char> free(n);
    double alpha = 1.0;
    double damping = 1.0;
    double radius = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = result.x[i] - box.clamp(i, result.x[i] - result.gradient[i]);
        radius += d * d;
    }
    radius = radius > 0.0 ? std::sqrt(radius) : 1.0;

    for (result.iterations = 0;; ++result.iterations) {
        if (result.projected_gradient <= options.gradient_tolerance) {
            result.status = LbfgsStatus::converged;
            return result;
        }
        if (result.iterations >= options.max_iterations) {
            result.status = LbfgsStatus::max_iterations;
            return result;
        }
        const auto& x = result.x;
        const auto& g = result.gradient;
        Model model(g, hessian(x));

        cauchy_step(box, x, g, model, radius, alpha, s);
        double q = model(s);

        // Newton refinement on the coordinates the Cauchy step left strictly inside the box.
        const double tolerance = std::min(0.1, std::sqrt(result.projected_gradient));
        const double shift = damping * result.projected_gradient;
        bool cut_short = false;
        for (int pass = 0; pass < max_subspace_passes; ++pass) {
            model(s);
            model.gradient(residual);
            for (std::size_t i = 0; i < n; ++i) {
                const double xi = x[i] + s[i];
                free[i] = xi > box.lo(i) && xi < box.hi(i);
                residual[i] = free[i] ? -residual[i] : 0.0;
            }
            const double room = radius * radius - dot(s, s);
            if (norm(residual) == 0.0 || room <= 0.0) break;
            const bool at_boundary = steihaug(model.hessian(), residual, free, GroupProjector(flat, free),
                                              shift, std::sqrt(room), tolerance, w);

            // The projected full step, else the straight step to the first bound it crosses.
            // The latter always lowers the convex model and pins one more coordinate.
            bool clipped = false;
            for (std::size_t j = 0; j < n; ++j) {
                target[j] = x[j] + s[j] + w[j];
                clipped = clipped || target[j] < box.lo(j) || target[j] > box.hi(j);
            }
            project_step(box, x, target, candidate);
            double linear = 0.0;
            for (std::size_t j = 0; j < n; ++j) linear -= residual[j] * (candidate[j] - s[j]);
            double qc = model(candidate);
            if (!(qc <= q + mu0 * std::min(linear, 0.0))) {
                double beta = 1.0;
                std::size_t hit = n;
                for (std::size_t j = 0; j < n; ++j) {
                    if (w[j] == 0.0) continue;
                    const double room = ((w[j] < 0.0 ? box.lo(j) : box.hi(j)) - x[j] - s[j]) / w[j];
                    if (room < beta) {
                        beta = room;
                        hit = j;
                    }
                }
                for (std::size_t j = 0; j < n; ++j) target[j] = x[j] + s[j] + beta * w[j];
                if (hit < n) target[hit] = w[hit] < 0.0 ? box.lo(hit) : box.hi(hit);
                project_step(box, x, target, candidate);
                qc = model(candidate);
                clipped = hit < n;
                cut_short = cut_short || beta < 0.5;
            }
            if (!(qc < q)) break;
            s.swap(candidate);
            q = qc;
            // Another pass only helps when new bounds became active.
            if (at_boundary || !clipped) break;
        }

        const double step_norm = norm(s);
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + s[i];
        const double trial_value = f(trial, trial_grad);
        const double predicted = -q;
        const double actual = result.value - trial_value;
        const double noise = noise_fraction * std::max(std::abs(result.value), 1.0);

        bool accept = false;
        double ratio = 0.0;
        if (std::isfinite(trial_value) && predicted > 0.0) {
            ratio = actual / predicted;
            accept = ratio > eta0;
            if (!accept && predicted <= noise && std::abs(actual) <= noise) {
                // Both reductions are lost in rounding: trust the model if the gradient improved.
                ratio = 1.0;
                accept = projected_gradient_norm(box, trial, trial_grad) < result.projected_gradient;
            }
        }
        // Levenberg-style damping: relax it while full Newton steps keep working.
        if (accept && ratio > eta2 && !cut_short) {
            damping = std::max(damping * 0.1, min_damping);
        } else if (!accept || ratio < eta1 || cut_short) {
            damping = std::min(damping * 10.0, 1.0);
        }
        if (!accept || ratio < eta1) {
            radius = 0.25 * std::min(radius, step_norm);
        } else if (ratio > eta2) {
            radius = std::max(radius, 4.0 * step_norm);
        }

        if (!accept) {
            if (!(radius > 1e-15 * (1.0 + norm(x)))) {
                result.status = LbfgsStatus::line_search_failed;
                return result;
            }
            continue;
        }
        const double previous = result.projected_gradient;
        result.x.swap(trial);
        result.gradient.swap(trial_grad);
        result.value = trial_value;
        result.projected_gradient = projected_gradient_norm(box, result.x, result.gradient);
        slide();
        if (result.projected_gradient > options.gradient_tolerance &&
            actual <= options.value_tolerance * std::abs(result.value) &&
            result.projected_gradient > 0.5 * previous) {
            ++result.iterations;
            result.status = LbfgsStatus::stalled;
            return result;
        }
    }
}

}  // namespace cbid
