#include "cbid/gradcheck.hpp"

#include "cbid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cbid {

double gradient_relative_error(const HashFunction& h, const TrainingProblem& problem,
                               const DualState& duals, int r, const WeakGradient& analytic,
                               double step) {
    const std::size_t d = h.dim();
    std::vector<double> params(h.beta().begin(), h.beta().end());
    params.push_back(h.bias());

    auto value_at = [&](const std::vector<double>& p) {
        std::vector<double> beta(p.begin(), p.end() - 1);
        return smoothed_weak_objective(HashFunction(std::move(beta), p.back()), problem, duals, r);
    };

    double diff2 = 0.0;
    double norm_a = 0.0;
    double norm_fd = 0.0;
    for (std::size_t j = 0; j <= d; ++j) {
        auto plus = params;
        auto minus = params;
        plus[j] += step;
        minus[j] -= step;
        const double fd = (value_at(plus) - value_at(minus)) / (2.0 * step);
        const double an = j < d ? analytic.beta[j] : analytic.bias;
        diff2 += (an - fd) * (an - fd);
        norm_a += an * an;
        norm_fd += fd * fd;
    }
    const double scale = std::max({std::sqrt(norm_a), std::sqrt(norm_fd), 1e-8});
    return std::sqrt(diff2) / scale;
}

GradcheckReport gradcheck(const GradcheckOptions& options, const GradientFn& gradient) {
    std::mt19937_64 rng(options.seed);
    GradcheckReport report;
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        auto inst = synthetic::random_instance(rng, options.max_dim, options.max_triplets);
        const auto problem = TrainingProblem::image(inst.dataset, inst.triplets);
        const auto analytic = gradient(inst.function, problem, inst.duals, inst.r);
        const double err = gradient_relative_error(inst.function, problem, inst.duals, inst.r,
                                                   analytic, options.step);
        report.max_relative_error = std::max(report.max_relative_error, err);
        if (!(err <= options.tolerance)) ++report.failures;
        ++report.trials;
    }
    return report;
}

}  // namespace cbid
