#include "maxslice/fiber_calculus.hpp"

namespace maxslice {

namespace {

void check_same_grid(const FiberGrid& a, const FiberGrid& b, const char* who) {
    if (!(a == b)) throw Error(std::string(who) + ": fields on different grids");
}

}  // namespace

ScalarField partial(const ScalarField& f, int axis) {
    const FiberGrid& grid = f.grid();
    ScalarField out(grid);
    const double inv2h = 1.0 / (2.0 * grid.spacing(axis));
    for (int node = 0; node < grid.node_count(); ++node) {
        const int plus = grid.neighbor(node, axis, +1);
        const int minus = grid.neighbor(node, axis, -1);
        out[node] = (f[plus] - f[minus]) * inv2h;
    }
    return out;
}

VectorField gradient(const ScalarField& f, const SymTensorField& g) {
    check_same_grid(f.grid(), g.grid(), "gradient");
    g.require_metric("gradient");
    const FiberGrid& grid = f.grid();
    VectorField out(grid);
    std::array<ScalarField, 2> df{ScalarField(grid), ScalarField(grid)};
    for (int a = 0; a < grid.dim(); ++a) df[a] = partial(f, a);
    for (int node = 0; node < grid.node_count(); ++node) {
        const SymMat ginv = g.at(node).inverse();
        if (grid.dim() == 1) {
            out.at(0, node) = ginv.a[0] * df[0][node];
        } else {
            out.at(0, node) = ginv.a[0] * df[0][node] + ginv.a[1] * df[1][node];
            out.at(1, node) = ginv.a[1] * df[0][node] + ginv.a[2] * df[1][node];
        }
    }
    return out;
}

ScalarField divergence(const VectorField& X, const SymTensorField& g) {
    check_same_grid(X.grid(), g.grid(), "divergence");
    g.require_metric("divergence");
    const FiberGrid& grid = X.grid();

    // Flux densities sqrt(det g) X^a at nodes; central differencing the
    // product is the half-node averaged flux form.
    ScalarField sqrtg(grid);
    for (int node = 0; node < grid.node_count(); ++node)
        sqrtg[node] = std::sqrt(g.at(node).det());

    ScalarField out(grid);
    for (int a = 0; a < grid.dim(); ++a) {
        ScalarField flux(grid);
        for (int node = 0; node < grid.node_count(); ++node)
            flux[node] = sqrtg[node] * X.at(a, node);
        const ScalarField dflux = partial(flux, a);
        for (int node = 0; node < grid.node_count(); ++node)
            out[node] += dflux[node];
    }
    for (int node = 0; node < grid.node_count(); ++node) out[node] /= sqrtg[node];
    return out;
}

ScalarField laplace_beltrami(const ScalarField& f, const SymTensorField& g) {
    return divergence(gradient(f, g), g);
}

double integrate(const ScalarField& f, const SymTensorField& g) {
    check_same_grid(f.grid(), g.grid(), "integrate");
    g.require_metric("integrate");
    const FiberGrid& grid = f.grid();
    const double cell = grid.cell_volume();
    double sum = 0.0;
    for (int node = 0; node < grid.node_count(); ++node)
        sum += f[node] * std::sqrt(g.at(node).det());
    return sum * cell;
}

double inner_product(const ScalarField& f, const ScalarField& h,
                     const SymTensorField& g) {
    check_same_grid(f.grid(), h.grid(), "inner_product");
    ScalarField prod(f.grid());
    for (int node = 0; node < f.grid().node_count(); ++node)
        prod[node] = f[node] * h[node];
    return integrate(prod, g);
}

}  // namespace maxslice
