#include "maxslice/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace maxslice {

namespace {

enum class Op {
    Const,
    Var,   // which: 0=t, 1=x, 2=y
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Exp,
    Sin,
    Cos,
    Cosh,
    Sinh,
    Tanh,
};

}  // namespace

struct Expr::Node {
    Op op = Op::Const;
    double value = 0.0;
    int var = 0;
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

NodePtr make_var(int which) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Var;
    n->var = which;
    return n;
}

NodePtr make_unary(Op op, NodePtr arg) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->lhs = std::move(arg);
    return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

bool is_const(const NodePtr& n, double v) {
    return n->op == Op::Const && n->value == v;
}

// Light simplifications keep symbolic derivatives compact.
NodePtr add(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value + b->value);
    return make_binary(Op::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const(b, 0.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value - b->value);
    if (is_const(a, 0.0)) return make_unary(Op::Neg, std::move(b));
    return make_binary(Op::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value * b->value);
    return make_binary(Op::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return make_const(0.0);
    if (is_const(b, 1.0)) return a;
    return make_binary(Op::Div, std::move(a), std::move(b));
}

NodePtr pow_node(NodePtr a, NodePtr b) {
    if (is_const(b, 1.0)) return a;
    if (is_const(b, 0.0)) return make_const(1.0);
    return make_binary(Op::Pow, std::move(a), std::move(b));
}

double eval_node(const Expr::Node* n, double t, double x, double y) {
    switch (n->op) {
        case Op::Const: return n->value;
        case Op::Var: return n->var == 0 ? t : (n->var == 1 ? x : y);
        case Op::Add: return eval_node(n->lhs.get(), t, x, y) + eval_node(n->rhs.get(), t, x, y);
        case Op::Sub: return eval_node(n->lhs.get(), t, x, y) - eval_node(n->rhs.get(), t, x, y);
        case Op::Mul: return eval_node(n->lhs.get(), t, x, y) * eval_node(n->rhs.get(), t, x, y);
        case Op::Div: return eval_node(n->lhs.get(), t, x, y) / eval_node(n->rhs.get(), t, x, y);
        case Op::Pow: return std::pow(eval_node(n->lhs.get(), t, x, y), eval_node(n->rhs.get(), t, x, y));
        case Op::Neg: return -eval_node(n->lhs.get(), t, x, y);
        case Op::Exp: return std::exp(eval_node(n->lhs.get(), t, x, y));
        case Op::Sin: return std::sin(eval_node(n->lhs.get(), t, x, y));
        case Op::Cos: return std::cos(eval_node(n->lhs.get(), t, x, y));
        case Op::Cosh: return std::cosh(eval_node(n->lhs.get(), t, x, y));
        case Op::Sinh: return std::sinh(eval_node(n->lhs.get(), t, x, y));
        case Op::Tanh: return std::tanh(eval_node(n->lhs.get(), t, x, y));
    }
    return 0.0;
}

bool depends_on_t(const Expr::Node* n) {
    if (n->op == Op::Const) return false;
    if (n->op == Op::Var) return n->var == 0;
    if (n->lhs && depends_on_t(n->lhs.get())) return true;
    if (n->rhs && depends_on_t(n->rhs.get())) return true;
    return false;
}

NodePtr diff_t(const NodePtr& n) {
    switch (n->op) {
        case Op::Const: return make_const(0.0);
        case Op::Var: return make_const(n->var == 0 ? 1.0 : 0.0);
        case Op::Add: return add(diff_t(n->lhs), diff_t(n->rhs));
        case Op::Sub: return sub(diff_t(n->lhs), diff_t(n->rhs));
        case Op::Mul:
            return add(mul(diff_t(n->lhs), n->rhs), mul(n->lhs, diff_t(n->rhs)));
        case Op::Div:
            return div(sub(mul(diff_t(n->lhs), n->rhs), mul(n->lhs, diff_t(n->rhs))),
                       mul(n->rhs, n->rhs));
        case Op::Pow: {
            if (!depends_on_t(n->rhs.get())) {
                // d/dt f^c = c f^(c-1) f'
                NodePtr cm1 = sub(n->rhs, make_const(1.0));
                return mul(mul(n->rhs, pow_node(n->lhs, cm1)), diff_t(n->lhs));
            }
            // f^g = exp(g log f): f^g (g' log f + g f'/f); log via exp inverse
            // is outside the grammar, so fall back to the product form only
            // when the base is t-independent.
            if (!depends_on_t(n->lhs.get())) {
                // d/dt c^g = c^g * log(c) * g'  -- log(c) folded numerically
                if (n->lhs->op == Op::Const) {
                    return mul(mul(make_const(std::log(n->lhs->value)),
                                   make_binary(Op::Pow, n->lhs, n->rhs)),
                               diff_t(n->rhs));
                }
            }
            throw Error("expression: d/dt of f(t)^g(t) with both sides "
                        "t-dependent is not supported");
        }
        case Op::Neg: return make_unary(Op::Neg, diff_t(n->lhs));
        case Op::Exp: return mul(make_unary(Op::Exp, n->lhs), diff_t(n->lhs));
        case Op::Sin: return mul(make_unary(Op::Cos, n->lhs), diff_t(n->lhs));
        case Op::Cos: return mul(make_unary(Op::Neg, make_unary(Op::Sin, n->lhs)), diff_t(n->lhs));
        case Op::Cosh: return mul(make_unary(Op::Sinh, n->lhs), diff_t(n->lhs));
        case Op::Sinh: return mul(make_unary(Op::Cosh, n->lhs), diff_t(n->lhs));
        case Op::Tanh: {
            // 1 - tanh^2
            NodePtr th = make_unary(Op::Tanh, n->lhs);
            return mul(sub(make_const(1.0), mul(th, th)), diff_t(n->lhs));
        }
    }
    return make_const(0.0);
}

/// Recursive-descent parser with 1-based line/column error reporting.
class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    NodePtr parse() {
        skip_ws();
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) {
        int line = 1, col = 1;
        for (size_t i = 0; i < pos_ && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("expression: " + msg + " at line " + std::to_string(line) +
                             ", column " + std::to_string(col),
                         line, col);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    NodePtr parse_sum() {
        NodePtr e = parse_term();
        for (;;) {
            if (consume('+')) {
                e = make_binary(Op::Add, e, parse_term());
            } else if (consume('-')) {
                e = make_binary(Op::Sub, e, parse_term());
            } else {
                return e;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr e = parse_unary();
        for (;;) {
            if (consume('*')) {
                e = make_binary(Op::Mul, e, parse_unary());
            } else if (consume('/')) {
                e = make_binary(Op::Div, e, parse_unary());
            } else {
                return e;
            }
        }
    }

    NodePtr parse_unary() {
        if (consume('-')) return make_unary(Op::Neg, parse_unary());
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (consume('^')) {
            // right-associative; exponent may itself be signed
            return make_binary(Op::Pow, base, parse_unary());
        }
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_sum();
            if (!consume(')')) fail("expected ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<size_t>(end - begin);
        return make_const(v);
    }

    NodePtr parse_ident() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name = text_.substr(start, pos_ - start);
        if (name == "t") return make_var(0);
        if (name == "x") return make_var(1);
        if (name == "y") return make_var(2);
        if (name == "pi") return make_const(3.14159265358979323846);

        Op op;
        if (name == "exp") op = Op::Exp;
        else if (name == "sin") op = Op::Sin;
        else if (name == "cos") op = Op::Cos;
        else if (name == "cosh") op = Op::Cosh;
        else if (name == "sinh") op = Op::Sinh;
        else if (name == "tanh") op = Op::Tanh;
        else {
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        if (!consume('(')) fail("expected '(' after function name");
        NodePtr arg = parse_sum();
        if (!consume(')')) fail("expected ')'");
        return make_unary(op, arg);
    }

    const std::string& text_;
    size_t pos_ = 0;
};

}  // namespace

Expr Expr::parse(const std::string& text) {
    Parser p(text);
    return Expr(p.parse(), text);
}

Expr Expr::constant(double value) {
    return Expr(make_const(value), std::to_string(value));
}

double Expr::eval(double t, double x, double y) const {
    return eval_node(node_.get(), t, x, y);
}

Expr Expr::derivative_t() const {
    return Expr(diff_t(node_), "d/dt(" + text_ + ")");
}

bool Expr::time_independent() const { return !depends_on_t(node_.get()); }

}  // namespace maxslice
