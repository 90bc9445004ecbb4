#include <doctest.h>

#include <cmath>

#include "maxslice/expression.hpp"

using namespace maxslice;

TEST_CASE("expression: literals, precedence, associativity") {
    CHECK(Expr::parse("2+3*4^2").eval(0) == doctest::Approx(50.0));
    CHECK(Expr::parse("2^3^2").eval(0) == doctest::Approx(512.0));  // right assoc
    CHECK(Expr::parse("-2^2").eval(0) == doctest::Approx(-4.0));
    CHECK(Expr::parse("(2+3)*4").eval(0) == doctest::Approx(20.0));
    CHECK(Expr::parse("7/2/2").eval(0) == doctest::Approx(1.75));
    CHECK(Expr::parse("1e-3 + 2.5E2").eval(0) == doctest::Approx(250.001));
    CHECK(Expr::parse("pi").eval(0) == doctest::Approx(3.14159265358979));
}

TEST_CASE("expression: variables and functions") {
    const Expr e = Expr::parse("exp(-0.5*t^2) * (1.5 + sin(x)) + cosh(y)");
    const double t = 0.7, x = 1.1, y = -0.4;
    CHECK(e.eval(t, x, y) ==
          doctest::Approx(std::exp(-0.5 * t * t) * (1.5 + std::sin(x)) + std::cosh(y)));
    CHECK(Expr::parse("tanh(t)").eval(0.3) == doctest::Approx(std::tanh(0.3)));
    CHECK(Expr::parse("sinh(t)-cos(t)").eval(0.2) ==
          doctest::Approx(std::sinh(0.2) - std::cos(0.2)));
}

TEST_CASE("expression: parse errors carry line and column") {
    try {
        Expr::parse("2 + unknown(t)");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
        CHECK(e.column() >= 5);
    }
    CHECK_THROWS_AS(Expr::parse("2 +"), ParseError);
    CHECK_THROWS_AS(Expr::parse("sin t"), ParseError);
    CHECK_THROWS_AS(Expr::parse("(1+2"), ParseError);
    CHECK_THROWS_AS(Expr::parse("1 2"), ParseError);
}

TEST_CASE("expression: symbolic time derivative matches hand derivatives") {
    // d/dt [a^2 exp(-b^2 t^2)] = -2 b^2 t a^2 exp(-b^2 t^2)
    const double a = 1.3, b = 0.7;
    const Expr f2 = Expr::parse("1.69*exp(-0.49*t^2)");
    const Expr df2 = f2.derivative_t();
    for (double t : {-1.1, 0.0, 0.7, 2.3}) {
        const double want = -2.0 * b * b * t * a * a * std::exp(-b * b * t * t);
        CHECK(df2.eval(t) == doctest::Approx(want).epsilon(1e-12));
    }

    const Expr g = Expr::parse("2 + tanh(t^3)*(1.5+sin(x))");
    const Expr dg = g.derivative_t();
    for (double t : {-0.8, 0.0, 0.5}) {
        const double x = 0.9;
        const double sech2 = 1.0 - std::tanh(t * t * t) * std::tanh(t * t * t);
        const double want = 3.0 * t * t * sech2 * (1.5 + std::sin(x));
        CHECK(dg.eval(t, x) == doctest::Approx(want).epsilon(1e-12));
    }

    // power rule with constant exponent, including at the base's zero
    const Expr p = Expr::parse("(2+t^3)^2");
    const Expr dp = p.derivative_t();
    for (double t : {-0.5, 0.0, 1.2}) {
        const double want = 2.0 * (2.0 + t * t * t) * 3.0 * t * t;
        CHECK(dp.eval(t) == doctest::Approx(want).epsilon(1e-12));
    }

    CHECK(Expr::parse("cos(x)*cosh(y)").time_independent());
    CHECK(!Expr::parse("x*t").time_independent());
    CHECK(Expr::parse("cos(x)").derivative_t().eval(0.3, 0.7) == 0.0);
}
