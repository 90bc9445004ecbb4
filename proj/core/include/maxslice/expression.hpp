/// @file expression.hpp
/// @brief Tiny arithmetic expression grammar used by scenario files.
///
/// Supported: numeric literals, + - * / ^, unary minus, the functions
/// exp, sin, cos, cosh, sinh, tanh, and the variables t, x, y. Expressions
/// are parsed once into an immutable AST; evaluation is allocation-free.
/// d/dt is available symbolically so expression-driven spacetime models
/// always carry analytic time derivatives.

#pragma once

#include <memory>
#include <string>

#include "maxslice/errors.hpp"

namespace maxslice {

class Expr {
public:
    Expr() = default;

    /// Parse `text`; throws ParseError with 1-based line/column on failure.
    static Expr parse(const std::string& text);

    /// Constant expression.
    static Expr constant(double value);

    bool valid() const { return node_ != nullptr; }

    double eval(double t, double x = 0.0, double y = 0.0) const;

    /// Symbolic derivative with respect to t.
    Expr derivative_t() const;

    /// True when the expression does not reference `t` (so d/dt == 0).
    bool time_independent() const;

    std::string text() const { return text_; }

    struct Node;

private:
    explicit Expr(std::shared_ptr<const Node> node, std::string text)
        : node_(std::move(node)), text_(std::move(text)) {}

    std::shared_ptr<const Node> node_;
    std::string text_;
};

}  // namespace maxslice
