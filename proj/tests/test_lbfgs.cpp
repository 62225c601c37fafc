#include "cbid/errors.hpp"
#include "cbid/lbfgs.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace cbid;

TEST_CASE("minimize: ill-conditioned quadratic") {
    const std::vector<double> scale{1.0, 10.0, 100.0, 1000.0};
    const Objective f = [&](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - static_cast<double>(i);
            v += 0.5 * scale[i] * d * d;
            g[i] = scale[i] * d;
        }
        return v;
    };
    const auto r = minimize(f, std::vector<double>(4, 5.0));
    CHECK(r.status == LbfgsStatus::converged);
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.x[i] == doctest::Approx(static_cast<double>(i)).epsilon(1e-6));
}

TEST_CASE("minimize: Rosenbrock") {
    const Objective f = [](std::span<const double> x, std::span<double> g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    LbfgsOptions opts;
    opts.value_tolerance = 0.0;
    const auto r = minimize(f, {-1.2, 1.0}, opts);
    CHECK(succeeded(r.status));
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("minimize_bounded: active lower bounds") {
    // min 0.5 |x - c|^2 over x >= 0 -> x = max(c, 0).
    const std::vector<double> c{1.5, -2.0, 0.25, -0.1};
    const Objective f = [&](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            v += 0.5 * (x[i] - c[i]) * (x[i] - c[i]);
            g[i] = x[i] - c[i];
        }
        return v;
    };
    const std::vector<double> lower(4, 0.0);
    const auto r = minimize_bounded(f, std::vector<double>(4, 1.0), lower, {});
    CHECK(r.status == LbfgsStatus::converged);
    CHECK(r.x[0] == doctest::Approx(1.5));
    CHECK(r.x[1] == 0.0);
    CHECK(r.x[2] == doctest::Approx(0.25));
    CHECK(r.x[3] == 0.0);
    CHECK(r.projected_gradient <= 1e-6);
}

TEST_CASE("minimize_bounded: linear objective runs to the box corner") {
    const Objective f = [](std::span<const double> x, std::span<double> g) {
        g[0] = 1.0;
        g[1] = -2.0;
        return x[0] - 2.0 * x[1];
    };
    const std::vector<double> lower{-1.0, -1.0}, upper{3.0, 4.0};
    const auto r = minimize_bounded(f, {0.0, 0.0}, lower, upper);
    CHECK(r.status == LbfgsStatus::converged);
    CHECK(r.x[0] == -1.0);
    CHECK(r.x[1] == 4.0);
}

TEST_CASE("minimize_bounded: start outside the box is projected") {
    const Objective f = [](std::span<const double> x, std::span<double> g) {
        g[0] = 2.0 * (x[0] - 2.0);
        return (x[0] - 2.0) * (x[0] - 2.0);
    };
    const std::vector<double> lower{0.0}, upper{1.0};
    const auto r = minimize_bounded(f, {-5.0}, lower, upper);
    CHECK(r.x[0] == 1.0);
}

TEST_CASE("minimize: iteration cap is reported") {
    const Objective f = [](std::span<const double> x, std::span<double> g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    LbfgsOptions opts;
    opts.max_iterations = 3;
    opts.value_tolerance = 0.0;
    const auto r = minimize(f, {-1.2, 1.0}, opts);
    CHECK(r.status == LbfgsStatus::max_iterations);
    CHECK(r.iterations == 3);
}

TEST_CASE("minimize_bounded: bound size mismatch") {
    const Objective f = [](std::span<const double>, std::span<double> g) {
        g[0] = 0.0;
        return 0.0;
    };
    const std::vector<double> lower{0.0, 0.0};
    CHECK_THROWS_AS(minimize_bounded(f, {1.0}, lower, {}), DimensionError);
}
