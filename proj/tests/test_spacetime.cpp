#include <doctest.h>

#include <cmath>

#include "maxslice/spacetime.hpp"

using namespace maxslice;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

SpacetimeModel::MetricFn flat_base(int dim) {
    return [dim](const double*) { return SymMat::identity(dim); };
}

SpacetimeModel gaussian_multiwarp_2d() {
    // f_i^2 = a_i^2 exp(-b_i^2 t^2), a = (1, 1.3), b = (1, 0.7)
    return SpacetimeModel::multiply_warped(
        {Expr::parse("exp(-0.5*t^2)"), Expr::parse("1.3*exp(-0.245*t^2)")}, flat_base(2),
        2);
}

FiberGrid small_line() { return FiberGrid::line(16, kTwoPi); }
FiberGrid small_torus() { return FiberGrid::torus(8, 8, kTwoPi, kTwoPi); }

}  // namespace

TEST_CASE("eval: GRW cosh has vanishing metric derivative at t = 0") {
    const SpacetimeModel m = SpacetimeModel::grw(Expr::parse("cosh(t)"), flat_base(1), 1);
    const ModelEval ev = m.eval(0.0, small_line());
    CHECK(ev.dmetric.at(3).a[0] == 0.0);
    CHECK(ev.dbeta.max_abs() == 0.0);
    CHECK(ev.beta[0] == 1.0);
    // and d(f^2)/dt = sinh(2t) away from zero
    const ModelEval ev2 = m.eval(0.5, small_line());
    CHECK(ev2.dmetric.at(0).a[0] == doctest::Approx(1.1752011936438014).epsilon(1e-12));
}

TEST_CASE("eval: Lorentzian product is time independent") {
    const SpacetimeModel m = SpacetimeModel::lorentzian_product(flat_base(2), 2);
    const ModelEval ev = m.eval(1.7, small_torus());
    CHECK(ev.dbeta.max_abs() == 0.0);
    for (int node = 0; node < ev.dmetric.grid().node_count(); ++node)
        CHECK(ev.dmetric.at(node).norm() == 0.0);
}

TEST_CASE("eval: multiply warped Gaussian matches the symbolic derivative") {
    // frozen from d/dt[a^2 exp(-b^2 t^2)] = -2 b^2 t a^2 exp(-b^2 t^2) at t = 0.7
    const SpacetimeModel m = gaussian_multiwarp_2d();
    const ModelEval ev = m.eval(0.7, small_torus());
    const SymMat dg = ev.dmetric.at(5);
    CHECK(dg.a[0] == doctest::Approx(-0.85767695185818249).epsilon(1e-14));
    CHECK(dg.a[2] == doctest::Approx(-0.91187795209414679).epsilon(1e-14));
    CHECK(dg.a[1] == 0.0);
}

TEST_CASE("eval: out-of-interval time throws") {
    const SpacetimeModel m = SpacetimeModel::grw(Expr::parse("2+t^3"), flat_base(1), 1,
                                                 Interval{-1.0, 5.0});
    CHECK_THROWS_AS(m.eval(-2.0, small_line()), OutOfInterval);
    CHECK_THROWS_AS(m.eval(5.0, small_line()), OutOfInterval);
}

TEST_CASE("eval: finite-difference time derivatives track analytic ones") {
    // custom model without supplied derivatives
    auto beta = [](double t, const double*) { return 1.0 + 0.5 * std::sin(t); };
    auto metric = [](double t, const double*) {
        SymMat m = SymMat::identity(1);
        m.a[0] = 2.0 + std::cos(t);
        return m;
    };
    const SpacetimeModel m = SpacetimeModel::custom(beta, metric, nullptr, nullptr, 1,
                                                    Interval::all(), "fd-test");
    CHECK(!m.has_analytic_dt());
    double x[1] = {0.0};
    CHECK(m.dbeta_dt(0.8, x) == doctest::Approx(0.5 * std::cos(0.8)).epsilon(1e-9));
    CHECK(m.dmetric_dt(0.8, x).a[0] == doctest::Approx(-std::sin(0.8)).epsilon(1e-9));
}

TEST_CASE("classify: product and static models are static") {
    CHECK(classify_monotonicity(SpacetimeModel::lorentzian_product(flat_base(1), 1),
                                Interval{-2.0, 2.0}, small_line())
              .kind == MonotonicityKind::Static);
    const SpacetimeModel st = SpacetimeModel::standard_static(
        Expr::parse("1.5+0.2*sin(x)"), flat_base(1), 1);
    CHECK(classify_monotonicity(st, Interval{-2.0, 2.0}, small_line()).kind ==
          MonotonicityKind::Static);
}

TEST_CASE("classify: Gaussian multiply warped model has a transition at t = 0") {
    const MonotonicityVerdict v = classify_monotonicity(
        gaussian_multiwarp_2d(), Interval{-2.0, 2.0}, small_torus());
    CHECK(v.kind == MonotonicityKind::Transition);
    CHECK(std::abs(v.t0()) < 1e-9);
    // verdict is stable under refining the t lattice
    ClassifyOptions fine;
    fine.t_samples = 129;
    const MonotonicityVerdict v2 = classify_monotonicity(
        gaussian_multiwarp_2d(), Interval{-2.0, 2.0}, small_torus(), fine);
    CHECK(v2.kind == MonotonicityKind::Transition);
    CHECK(std::abs(v2.t0()) < 1e-9);
}

TEST_CASE("classify: twisted with nonnegative time derivative is non-contracting") {
    const SpacetimeModel m = SpacetimeModel::twisted(
        Expr::parse("2 + tanh(t^3)*(1.5+sin(x))"), flat_base(1), 1, Interval{-1.0, 1e300});
    CHECK(classify_monotonicity(m, Interval{-0.9, 3.0}, small_line()).kind ==
          MonotonicityKind::NonContracting);
}

TEST_CASE("classify: GRW with strictly increasing warp is non-contracting") {
    const SpacetimeModel m = SpacetimeModel::grw(Expr::parse("exp(t)"), flat_base(1), 1);
    CHECK(classify_monotonicity(m, Interval{-2.0, 2.0}, small_line()).kind ==
          MonotonicityKind::NonContracting);
}

TEST_CASE("classify: de Sitter (reversed transition) is indefinite") {
    const SpacetimeModel m = SpacetimeModel::grw(Expr::parse("cosh(t)"), flat_base(1), 1);
    CHECK(classify_monotonicity(m, Interval{-2.0, 2.0}, small_line()).kind ==
          MonotonicityKind::Indefinite);
}

TEST_CASE("classify: non-level sign change is indefinite") {
    // -dt^2 + (-t^2 + 2 t sin x + 3) dx^2: the sign of d_t g flips along t = sin x,
    // which is not a level hypersurface.
    const SpacetimeModel m = [] {
        std::vector<std::string> dummy;
        auto beta = [](double, const double*) { return 1.0; };
        const Expr lam = Expr::parse("-t^2 + 2*t*sin(x) + 3");
        const Expr dlam = lam.derivative_t();
        auto metric = [lam](double t, const double* x) {
            SymMat m = SymMat::identity(1);
            m.a[0] = lam.eval(t, x[0]);
            return m;
        };
        auto dmetric = [dlam](double t, const double* x) {
            SymMat m = SymMat::identity(1);
            m.a[0] = dlam.eval(t, x[0]);
            return m;
        };
        auto dbeta = [](double, const double*) { return 0.0; };
        return SpacetimeModel::custom(beta, metric, dbeta, dmetric, 1,
                                      Interval{-1.0, 1.0}, "tilted transition");
    }();
    CHECK(classify_monotonicity(m, Interval{-0.9, 0.9}, small_line()).kind ==
          MonotonicityKind::Indefinite);
}

TEST_CASE("time_vector_divergence: spatially constant beta, static metric") {
    // beta = e^{2t}, g constant: div(d_t) = (1/2) d_t beta / beta = 1
    auto beta = [](double t, const double*) { return std::exp(2.0 * t); };
    auto dbeta = [](double t, const double*) { return 2.0 * std::exp(2.0 * t); };
    auto metric = [](double, const double*) { return SymMat::identity(1); };
    auto dmetric = [](double, const double*) {
        SymMat z = SymMat::identity(1);
        z.a[0] = 0.0;
        return z;
    };
    const SpacetimeModel m = SpacetimeModel::custom(beta, metric, dbeta, dmetric, 1,
                                                    Interval::all(), "beta-only");
    const ScalarField div = time_vector_divergence(m, 0.4, small_line());
    for (int node = 0; node < div.grid().node_count(); ++node)
        CHECK(div[node] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("time_vector_divergence: GRW gives n f'/f") {
    SUBCASE("1-D fiber") {
        const SpacetimeModel m =
            SpacetimeModel::grw(Expr::parse("cosh(t)"), flat_base(1), 1);
        const ScalarField div = time_vector_divergence(m, 0.5, small_line());
        CHECK(div[3] == doctest::Approx(0.46211715726000974).epsilon(1e-13));
    }
    SUBCASE("2-D fiber doubles the trace") {
        const SpacetimeModel m =
            SpacetimeModel::grw(Expr::parse("cosh(t)"), flat_base(2), 2);
        const ScalarField div = time_vector_divergence(m, 0.5, small_torus());
        CHECK(div[9] == doctest::Approx(0.92423431452001947).epsilon(1e-13));
    }
    SUBCASE("Lorentzian product vanishes") {
        const SpacetimeModel m = SpacetimeModel::lorentzian_product(flat_base(1), 1);
        CHECK(time_vector_divergence(m, 0.3, small_line()).max_abs() == 0.0);
    }
}

TEST_CASE("slice_mean_curvature: examples") {
    SUBCASE("de Sitter slice at t = 0 is maximal") {
        const SpacetimeModel m =
            SpacetimeModel::grw(Expr::parse("cosh(t)"), flat_base(1), 1);
        CHECK(slice_mean_curvature(m, 0.0, small_line()).max_abs() == 0.0);
    }
    SUBCASE("standard static slices are totally geodesic") {
        const SpacetimeModel m = SpacetimeModel::standard_static(
            Expr::parse("1+0.5*cos(x)"), flat_base(1), 1);
        CHECK(slice_mean_curvature(m, 0.8, small_line()).max_abs() == 0.0);
    }
    SUBCASE("GRW e^t slices have |H| = 1") {
        const SpacetimeModel m =
            SpacetimeModel::grw(Expr::parse("exp(t)"), flat_base(1), 1);
        const ScalarField h = slice_mean_curvature(m, -0.3, small_line());
        for (int node = 0; node < h.grid().node_count(); ++node)
            CHECK(std::abs(h[node]) == doctest::Approx(1.0).epsilon(1e-13));
    }
    SUBCASE("Gaussian multiwarp slice curvature, frozen value") {
        const ScalarField h =
            slice_mean_curvature(gaussian_multiwarp_2d(), 0.3, small_torus());
        CHECK(h[0] == doctest::Approx(-0.22349999999999998).epsilon(1e-13));
    }
}

TEST_CASE("transition slice is maximal and satisfies the necessary conditions") {
    const SpacetimeModel m = gaussian_multiwarp_2d();
    const FiberGrid grid = small_torus();
    const MonotonicityVerdict v =
        classify_monotonicity(m, Interval{-2.0, 2.0}, grid);
    REQUIRE(v.kind == MonotonicityKind::Transition);
    const double t0 = v.t0();
    CHECK(slice_mean_curvature(m, t0, grid).max_abs() < 1e-9);
    // necessary slice conditions: d_t beta and d_t log vol both vanish at t0
    double x[2] = {0.0, 0.0};
    grid.coords(5, x);
    CHECK(std::abs(m.dbeta_dt(t0, x)) < 1e-10);
    const ScalarField div = time_vector_divergence(m, t0, grid);
    CHECK(div.max_abs() < 1e-9);
}
