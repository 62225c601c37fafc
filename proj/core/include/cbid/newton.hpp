#pragma once

#include "cbid/lbfgs.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cbid {

struct NewtonOptions {
    /// Stop when the infinity norm of the projected gradient falls below this.
    double gradient_tolerance = 1e-6;
    std::size_t max_iterations = 200;
    /// Also stop when one iteration lowers f by no more than this fraction of |f|
    /// and fails to halve the projected gradient.
    double value_tolerance = 1e-14;
};

/// out = H(x) v.
using HessianProduct = std::function<void(std::span<const double> v, std::span<double> out)>;
/// Hessian-vector product at x; called once per outer iteration, so it may cache.
using Hessian = std::function<HessianProduct(std::span<const double> x)>;

/// Index groups G along which f is affine: f(x + t 1_G) - f(x) is linear in t.
using FlatGroups = std::vector<std::vector<std::size_t>>;

/// Trust-region Newton over the box lower <= x <= upper for a convex objective.
///
/// Each iteration takes a projected Cauchy step, then refines it with damped conjugate
/// gradients on the coordinates still inside the box. Flat groups are projected out of
/// the conjugate gradient system, and after each step every group lying strictly above
/// its lower bounds slides down until one member reaches its bound, when that lowers f.
/// Same result type as minimize_bounded.
LbfgsResult minimize_newton_bounded(const Objective& f, const Hessian& hessian, std::vector<double> x0,
                                    std::span<const double> lower, std::span<const double> upper,
                                    const NewtonOptions& options = {}, const FlatGroups& flat = {});

}  // namespace cbid
