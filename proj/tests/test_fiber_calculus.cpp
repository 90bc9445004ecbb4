#include <doctest.h>

#include <cmath>

#include "maxslice/fiber_calculus.hpp"
#include "maxslice/solver.hpp"

using namespace maxslice;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

SymTensorField flat_metric(const FiberGrid& grid, double scale = 1.0) {
    SymMat m = SymMat::identity(grid.dim()).scaled(scale);
    return SymTensorField::constant(grid, m);
}

/// Smooth non-diagonal positive definite metric on a 2-torus.
SymTensorField wavy_metric(const FiberGrid& grid) {
    SymTensorField g(grid);
    double x[2];
    for (int node = 0; node < grid.node_count(); ++node) {
        grid.coords(node, x);
        SymMat m;
        m.dim = 2;
        m.a[0] = 1.0 + 0.3 * std::sin(kTwoPi * x[0] / grid.length(0));
        m.a[1] = 0.2 * std::cos(kTwoPi * (x[0] / grid.length(0) + x[1] / grid.length(1)));
        m.a[2] = 1.3 + 0.3 * std::cos(kTwoPi * x[1] / grid.length(1));
        g.set(node, m);
    }
    return g;
}

ScalarField sample_1d(const FiberGrid& grid, double (*fn)(double)) {
    ScalarField f(grid);
    for (int node = 0; node < grid.node_count(); ++node)
        f[node] = fn(node * grid.spacing(0));
    return f;
}

}  // namespace

TEST_CASE("gradient: flat 1-D torus, analytic derivative within O(h^2)") {
    const double L = 1.0;
    double prev_err = 0.0;
    for (int n : {64, 128}) {
        const FiberGrid grid = FiberGrid::line(n, L);
        ScalarField f(grid);
        for (int i = 0; i < n; ++i) f[i] = std::sin(kTwoPi * i * grid.spacing(0) / L);
        const VectorField grad = gradient(f, flat_metric(grid));
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = i * grid.spacing(0);
            err = std::max(err, std::abs(grad.at(0, i) - (kTwoPi / L) * std::cos(kTwoPi * x / L)));
        }
        CHECK(err < 0.05);
        if (prev_err > 0.0) {
            const double order = std::log2(prev_err / err);
            CHECK(order >= 1.9);
        }
        prev_err = err;
    }
}

TEST_CASE("gradient: constant field is exactly zero") {
    const FiberGrid grid = FiberGrid::torus(16, 16, 1.0, 2.0);
    ScalarField f(grid, 3.25);
    const VectorField grad = gradient(f, wavy_metric(grid));
    for (int a = 0; a < 2; ++a)
        for (int node = 0; node < grid.node_count(); ++node)
            CHECK(grad.at(a, node) == 0.0);
}

TEST_CASE("gradient: scaling the metric by 4 scales the gradient by 1/4") {
    const FiberGrid grid = FiberGrid::line(64, 1.0);
    ScalarField f(grid);
    for (int i = 0; i < 64; ++i) f[i] = std::sin(kTwoPi * i * grid.spacing(0));
    const VectorField g1 = gradient(f, flat_metric(grid));
    const VectorField g4 = gradient(f, flat_metric(grid, 4.0));
    for (int i = 0; i < 64; ++i)
        CHECK(g4.at(0, i) == doctest::Approx(0.25 * g1.at(0, i)).epsilon(1e-14));
}

TEST_CASE("gradient: degenerate metric throws") {
    const FiberGrid grid = FiberGrid::line(8, 1.0);
    ScalarField f(grid, 1.0);
    SymTensorField g = flat_metric(grid);
    g.comp(0, 3) = -1.0;
    CHECK_THROWS_AS(gradient(f, g), DegenerateMetric);
}

TEST_CASE("divergence: integral vanishes to machine precision for any X") {
    const FiberGrid grid = FiberGrid::torus(24, 16, 1.0, 1.5);
    const SymTensorField g = wavy_metric(grid);
    VectorField X(grid);
    for (int a = 0; a < 2; ++a) {
        const ScalarField noise = band_limited_noise(grid, 42 + a, 3);
        for (int node = 0; node < grid.node_count(); ++node) X.at(a, node) = noise[node];
    }
    const ScalarField div = divergence(X, g);
    CHECK(std::abs(integrate(div, g)) < 1e-13);
}

TEST_CASE("divergence: zero field maps to zero") {
    const FiberGrid grid = FiberGrid::line(32, 2.0);
    VectorField X(grid);
    const ScalarField div = divergence(X, flat_metric(grid));
    CHECK(div.max_abs() == 0.0);
}

TEST_CASE("laplace_beltrami: flat sine eigenfunction within O(h^2)") {
    const double L = 1.0;
    const double k = kTwoPi / L;
    double prev_err = 0.0;
    for (int n : {64, 128}) {
        const FiberGrid grid = FiberGrid::line(n, L);
        ScalarField f(grid);
        for (int i = 0; i < n; ++i) f[i] = std::sin(k * i * grid.spacing(0));
        const ScalarField lap = laplace_beltrami(f, flat_metric(grid));
        double err = 0.0;
        for (int i = 0; i < n; ++i)
            err = std::max(err, std::abs(lap[i] + k * k * f[i]));
        CHECK(err < 0.3);
        if (prev_err > 0.0) CHECK(std::log2(prev_err / err) >= 1.9);
        prev_err = err;
    }
}

TEST_CASE("laplace_beltrami: constants map to zero exactly") {
    const FiberGrid grid = FiberGrid::torus(16, 16, 1.0, 1.0);
    ScalarField f(grid, -7.5);
    const ScalarField lap = laplace_beltrami(f, wavy_metric(grid));
    CHECK(lap.max_abs() == 0.0);
}

TEST_CASE("laplace_beltrami: divergence theorem on random field, curved metric") {
    const FiberGrid grid = FiberGrid::torus(16, 24, 2.0, 1.0);
    const SymTensorField g = wavy_metric(grid);
    const ScalarField f = band_limited_noise(grid, 7, 3);
    const ScalarField lap = laplace_beltrami(f, g);
    CHECK(std::abs(integrate(lap, g)) < 1e-13);
}

TEST_CASE("laplace_beltrami: self-adjoint and negative semidefinite") {
    const FiberGrid grid = FiberGrid::torus(16, 16, 1.0, 1.3);
    const SymTensorField g = wavy_metric(grid);
    const ScalarField f = band_limited_noise(grid, 11, 3);
    const ScalarField h = band_limited_noise(grid, 12, 3);
    const ScalarField lf = laplace_beltrami(f, g);
    const ScalarField lh = laplace_beltrami(h, g);
    const double a = inner_product(lf, h, g);
    const double b = inner_product(f, lh, g);
    CHECK(std::abs(a - b) < 1e-10 * (1.0 + std::abs(a) + std::abs(b)));
    CHECK(inner_product(lf, f, g) <= 1e-12);
}

TEST_CASE("integrate: exact for constants and symmetric integrands") {
    SUBCASE("unit field on a flat 2-torus gives the area") {
        const FiberGrid grid = FiberGrid::torus(32, 16, 2.5, 1.25);
        ScalarField one(grid, 1.0);
        CHECK(integrate(one, flat_metric(grid)) == doctest::Approx(2.5 * 1.25).epsilon(1e-14));
    }
    SUBCASE("full-period sine integrates to zero") {
        const FiberGrid grid = FiberGrid::line(64, 1.0);
        const ScalarField f = sample_1d(grid, [](double x) { return std::sin(kTwoPi * x); });
        CHECK(std::abs(integrate(f, flat_metric(grid))) < 1e-14);
    }
    SUBCASE("1-D metric c^2 * flat integrates constants to c L") {
        const double c = 1.7;
        const FiberGrid grid = FiberGrid::line(32, 2.0);
        ScalarField one(grid, 1.0);
        CHECK(integrate(one, flat_metric(grid, c * c)) ==
              doctest::Approx(c * 2.0).epsilon(1e-14));
    }
}

TEST_CASE("grid: invariants are enforced") {
    CHECK_THROWS(FiberGrid::line(4, 1.0));
    CHECK_THROWS(FiberGrid::line(8, -1.0));
    CHECK_THROWS(FiberGrid(3, {8, 8}, {1.0, 1.0}));
    const FiberGrid grid = FiberGrid::line(8, 1.0);
    CHECK(grid.neighbor(0, 0, -1) == 7);
    CHECK(grid.neighbor(7, 0, 2) == 1);
}
