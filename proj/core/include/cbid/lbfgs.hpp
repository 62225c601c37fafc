#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cbid {

struct LbfgsOptions {
    std::size_t memory = 10;
    /// Stop when the infinity norm of the projected gradient falls below this.
    double gradient_tolerance = 1e-6;
    std::size_t max_iterations = 500;
    /// Also stop when one iteration lowers f by no more than this fraction of max(|f|, 1).
    double value_tolerance = 1e-14;
};

enum class LbfgsStatus { converged, stalled, max_iterations, line_search_failed };

/// converged or stalled.
inline bool succeeded(LbfgsStatus status) noexcept {
    return status == LbfgsStatus::converged || status == LbfgsStatus::stalled;
}

const char* to_string(LbfgsStatus status) noexcept;

struct LbfgsResult {
    std::vector<double> x;
    double value = 0.0;
    std::vector<double> gradient;
    /// Infinity norm of x - P(x - grad).
    double projected_gradient = 0.0;
    std::size_t iterations = 0;
    LbfgsStatus status = LbfgsStatus::max_iterations;
};

/// Returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Limited-memory quasi-Newton minimization over the box lower <= x <= upper.
///
/// Variables on or within a small distance of a bound, with the gradient pointing
/// outward, are sent to that bound; the two-loop recursion runs on the remaining free
/// variables and the step is projected back onto the box with an Armijo backtracking
/// search along the projection arc. Empty bound spans mean unbounded on that side.
LbfgsResult minimize_bounded(const Objective& f, std::vector<double> x0,
                             std::span<const double> lower, std::span<const double> upper,
                             const LbfgsOptions& options = {});

/// Unconstrained convenience overload.
LbfgsResult minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& options = {});

}  // namespace cbid
