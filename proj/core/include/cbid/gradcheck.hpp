#pragma once

#include "cbid/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>

namespace cbid {

using GradientFn = std::function<WeakGradient(const HashFunction&, const TrainingProblem&,
                                              const DualState&, int)>;

struct GradcheckOptions {
    std::uint64_t seed = 0;
    std::size_t trials = 100;
    double tolerance = 1e-4;
    /// Central-difference step.
    double step = 1e-5;
    std::size_t max_dim = 16;
    std::size_t max_triplets = 50;
};

struct GradcheckReport {
    std::size_t trials = 0;
    std::size_t failures = 0;
    double max_relative_error = 0.0;
    bool passed() const noexcept { return trials > 0 && failures == 0; }
};

/// ||g - g_fd|| / max(||g||, ||g_fd||, 1e-8), with g_fd the central finite difference
/// of smoothed_weak_objective.
double gradient_relative_error(const HashFunction& h, const TrainingProblem& problem,
                               const DualState& duals, int r, const WeakGradient& analytic,
                               double step = 1e-5);

/// Compares `gradient` against central differences on random seeded instances.
GradcheckReport gradcheck(const GradcheckOptions& options, const GradientFn& gradient = weak_gradient);

}  // namespace cbid
