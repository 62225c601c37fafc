#include "cbid/lbfgs.hpp"

#include "cbid/errors.hpp"

#include "box.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace cbid {

namespace {

using detail::Box;
using detail::projected_gradient_norm;

constexpr double armijo_c = 1e-4;
constexpr int max_backtracks = 60;
constexpr double active_eps = 1e-3;
// Objective changes below this fraction of |f| are treated as rounding noise.
constexpr double noise_fraction = 1e-12;

struct CorrectionPair {
    std::vector<double> s;
    std::vector<double> y;
};

double masked_dot(std::span<const double> a, std::span<const double> b,
                  const std::vector<char>& free) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (free[i]) sum += a[i] * b[i];
    }
    return sum;
}

}  // namespace

const char* to_string(LbfgsStatus status) noexcept {
    switch (status) {
        case LbfgsStatus::converged: return "converged";
        case LbfgsStatus::stalled: return "stalled";
        case LbfgsStatus::max_iterations: return "max_iterations";
        case LbfgsStatus::line_search_failed: return "line_search_failed";
    }
    return "unknown";
}

LbfgsResult minimize_bounded(const Objective& f, std::vector<double> x0,
                             std::span<const double> lower, std::span<const double> upper,
                             const LbfgsOptions& options) {
    const std::size_t n = x0.size();
    if ((!lower.empty() && lower.size() != n) || (!upper.empty() && upper.size() != n)) {
        throw DimensionError("bound vectors must match the variable count");
    }
    const Box box{lower, upper};
    for (std::size_t i = 0; i < n; ++i) x0[i] = box.clamp(i, x0[i]);

    LbfgsResult result;
    result.x = std::move(x0);
    result.gradient.assign(n, 0.0);
    result.value = f(result.x, result.gradient);

    std::deque<CorrectionPair> memory;
    std::vector<char> free(n, 1);
    std::vector<double> direction(n), trial(n), trial_grad(n), alpha(options.memory + 1);

    for (result.iterations = 0;; ++result.iterations) {
        result.projected_gradient = projected_gradient_norm(box, result.x, result.gradient);
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

        // Variables within eps of a bound that the gradient pushes against are held fixed.
        const double eps = std::min(active_eps, result.projected_gradient);
        for (std::size_t i = 0; i < n; ++i) {
            const bool pinned_low = x[i] <= box.lo(i) + eps && g[i] > 0.0;
            const bool pinned_high = x[i] >= box.hi(i) - eps && g[i] < 0.0;
            free[i] = !(pinned_low || pinned_high);
        }

        // Two-loop recursion restricted to the free variables.
        for (std::size_t i = 0; i < n; ++i) direction[i] = free[i] ? g[i] : 0.0;
        std::size_t used = 0;
        double gamma = 1.0;
        for (std::size_t j = memory.size(); j-- > 0;) {
            const auto& pair = memory[j];
            const double sy = masked_dot(pair.s, pair.y, free);
            if (sy <= 0.0) {
                alpha[j] = 0.0;
                continue;
            }
            alpha[j] = masked_dot(pair.s, direction, free) / sy;
            for (std::size_t i = 0; i < n; ++i) {
                if (free[i]) direction[i] -= alpha[j] * pair.y[i];
            }
            if (used++ == 0) gamma = sy / masked_dot(pair.y, pair.y, free);
        }
        for (std::size_t i = 0; i < n; ++i) direction[i] *= gamma;
        for (std::size_t j = 0; j < memory.size(); ++j) {
            const auto& pair = memory[j];
            const double sy = masked_dot(pair.s, pair.y, free);
            if (sy <= 0.0) continue;
            const double beta = masked_dot(pair.y, direction, free) / sy;
            for (std::size_t i = 0; i < n; ++i) {
                if (free[i]) direction[i] += (alpha[j] - beta) * pair.s[i];
            }
        }
        for (auto& d : direction) d = -d;
        // Held variables travel straight to their bound.
        for (std::size_t i = 0; i < n; ++i) {
            if (!free[i]) direction[i] = (g[i] > 0.0 ? box.lo(i) : box.hi(i)) - x[i];
        }

        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) slope += g[i] * direction[i];
        if (!(slope < 0.0) || !std::isfinite(slope)) {
            memory.clear();
            for (std::size_t i = 0; i < n; ++i) {
                direction[i] = free[i] ? -g[i] : (g[i] > 0.0 ? box.lo(i) : box.hi(i)) - x[i];
            }
        }

        double step = 1.0;
        if (memory.empty()) {
            double gmax = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (free[i]) gmax = std::max(gmax, std::abs(direction[i]));
            }
            if (gmax > 0.0) step = std::min(1.0, 1.0 / gmax);
        }

        bool accepted = false;
        double trial_value = 0.0;
        const double noise = noise_fraction * std::abs(result.value);
        for (int attempt = 0; attempt < max_backtracks; ++attempt, step *= 0.5) {
            bool moved = false;
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = box.clamp(i, x[i] + step * direction[i]);
                moved = moved || trial[i] != x[i];
                decrease += g[i] * (trial[i] - x[i]);
            }
            if (!moved) break;
            trial_value = f(trial, trial_grad);
            if (!std::isfinite(trial_value)) continue;
            if (trial_value <= result.value + armijo_c * decrease) {
                accepted = true;
                break;
            }
            // Near the optimum the value difference drowns in rounding; fall back on the
            // slope at the trial point (approximate Wolfe test).
            if (trial_value <= result.value + noise) {
                double end_slope = 0.0;
                for (std::size_t i = 0; i < n; ++i) end_slope += trial_grad[i] * (trial[i] - x[i]);
                if (end_slope <= -0.8 * decrease) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            result.status = LbfgsStatus::line_search_failed;
            return result;
        }

        CorrectionPair pair{std::vector<double>(n), std::vector<double>(n)};
        double sy = 0.0;
        double yy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pair.s[i] = trial[i] - x[i];
            pair.y[i] = trial_grad[i] - g[i];
            sy += pair.s[i] * pair.y[i];
            yy += pair.y[i] * pair.y[i];
        }
        if (sy > std::numeric_limits<double>::epsilon() * yy) {
            memory.push_back(std::move(pair));
            if (memory.size() > options.memory) memory.pop_front();
        }
        const double reduction = result.value - trial_value;
        result.x.swap(trial);
        result.gradient.swap(trial_grad);
        result.value = trial_value;
        if (reduction <= options.value_tolerance * std::max(std::abs(trial_value), 1.0)) {
            ++result.iterations;
            result.projected_gradient = projected_gradient_norm(box, result.x, result.gradient);
            result.status = result.projected_gradient <= options.gradient_tolerance
                                ? LbfgsStatus::converged
                                : LbfgsStatus::stalled;
            return result;
        }
    }
}

LbfgsResult minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& options) {
    return minimize_bounded(f, std::move(x0), {}, {}, options);
}

}  // namespace cbid
