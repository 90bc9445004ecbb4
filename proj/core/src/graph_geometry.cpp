#include "maxslice/graph_geometry.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace maxslice {

SpacelikeGraph::SpacelikeGraph(SpacetimeModel model, ScalarField u)
    : model_(std::move(model)),
      u_(std::move(u)),
      du_(u_.grid()),
      beta_(u_.grid()),
      dbeta_(u_.grid()),
      g_(u_.grid()),
      dg_(u_.grid()),
      g_u_(u_.grid()),
      margin_(u_.grid()),
      normal_t_(u_.grid()),
      normal_f_(u_.grid()),
      cosh_theta_(u_.grid()) {
    const FiberGrid& grid = u_.grid();
    if (grid.dim() != model_.fiber_dim())
        throw Error("SpacelikeGraph: grid dim != model fiber dim");
    for (int node = 0; node < grid.node_count(); ++node) {
        if (!model_.interval().contains(u_[node]))
            throw OutOfInterval("SpacelikeGraph: u leaves the model interval at node " +
                                std::to_string(node));
    }

    const int d = grid.dim();
    for (int a = 0; a < d; ++a) {
        const ScalarField da = partial(u_, a);
        for (int node = 0; node < grid.node_count(); ++node)
            du_.at(a, node) = da[node];
    }

    double x[2] = {0.0, 0.0};
    min_margin_ = 1e300;
    for (int node = 0; node < grid.node_count(); ++node) {
        grid.coords(node, x);
        const double t = u_[node];
        const double b = model_.beta(t, x);
        const SymMat g = model_.metric(t, x);
        if (!(b > 0.0)) throw Error("SpacelikeGraph: beta <= 0 along graph");
        if (!g.positive_definite())
            throw DegenerateMetric("SpacelikeGraph: g_t degenerate along graph");
        beta_[node] = b;
        dbeta_[node] = model_.dbeta_dt(t, x);
        g_.set(node, g);
        dg_.set(node, model_.dmetric_dt(t, x));

        double dua[2] = {du_.at(0, node), d == 2 ? du_.at(1, node) : 0.0};
        SymMat gu = g;
        gu.a[0] -= b * dua[0] * dua[0];
        if (d == 2) {
            gu.a[1] -= b * dua[0] * dua[1];
            gu.a[2] -= b * dua[1] * dua[1];
        }
        g_u_.set(node, gu);
        const double margin = gu.eig_min();
        margin_[node] = margin;
        min_margin_ = std::min(min_margin_, margin);

        // |Du|^2 in g_t and the unit normal; meaningful only where spacelike.
        const SymMat ginv = g.inverse();
        double gradu[2] = {0.0, 0.0};
        gradu[0] = ginv.a[0] * dua[0] + (d == 2 ? ginv.a[1] * dua[1] : 0.0);
        if (d == 2) gradu[1] = ginv.a[1] * dua[0] + ginv.a[2] * dua[1];
        const double du2 = dua[0] * gradu[0] + (d == 2 ? dua[1] * gradu[1] : 0.0);
        const double spacelike_q = 1.0 - b * du2;
        if (spacelike_q > 0.0) {
            const double n0 = 1.0 / std::sqrt(b * spacelike_q);
            normal_t_[node] = n0;
            for (int a = 0; a < d; ++a) normal_f_.at(a, node) = b * n0 * gradu[a];
            cosh_theta_[node] = std::sqrt(b) * n0;
        } else {
            normal_t_[node] = std::numeric_limits<double>::quiet_NaN();
            for (int a = 0; a < d; ++a)
                normal_f_.at(a, node) = std::numeric_limits<double>::quiet_NaN();
            cosh_theta_[node] = std::numeric_limits<double>::quiet_NaN();
        }
    }
}

void SpacelikeGraph::require_spacelike(const char* who) const {
    if (!spacelike())
        throw NotSpacelike(std::string(who) + ": graph not spacelike (min margin " +
                           std::to_string(min_margin_) + ")");
}

std::pair<ScalarField, VectorField> SpacelikeGraph::normal_field() const {
    require_spacelike("normal_field");
    return {normal_t_, normal_f_};
}

const ScalarField& SpacelikeGraph::cosh_theta() const {
    require_spacelike("cosh_theta");
    return cosh_theta_;
}

VariationField SpacelikeGraph::tangent_projection_dt() const {
    require_spacelike("tangent_projection_dt");
    const FiberGrid& grid = u_.grid();
    VariationField out{ScalarField(grid), VectorField(grid)};
    for (int node = 0; node < grid.node_count(); ++node) {
        const double ct = cosh_theta_[node];
        out.time[node] = 1.0 - ct * ct;  // -sinh^2 theta
        const double s = -std::sqrt(beta_[node]) * ct;
        for (int a = 0; a < grid.dim(); ++a)
            out.fiber.at(a, node) = s * normal_f_.at(a, node);
    }
    return out;
}

namespace {

/// Spatial partials of beta and g_t at fixed time t = u(p), by central
/// differences over grid neighbors.
struct SpatialDerivs {
    double dbeta[2] = {0.0, 0.0};
    SymMat dg[2];
};

SpatialDerivs spatial_derivs(const SpacetimeModel& model, const FiberGrid& grid,
                             int node, double t) {
    SpatialDerivs out;
    double xp[2], xm[2];
    for (int c = 0; c < grid.dim(); ++c) {
        const int plus = grid.neighbor(node, c, +1);
        const int minus = grid.neighbor(node, c, -1);
        grid.coords(plus, xp);
        grid.coords(minus, xm);
        const double inv2h = 1.0 / (2.0 * grid.spacing(c));
        out.dbeta[c] = (model.beta(t, xp) - model.beta(t, xm)) * inv2h;
        const SymMat gp = model.metric(t, xp);
        const SymMat gm = model.metric(t, xm);
        SymMat dg = gp;
        for (int k = 0; k < 3; ++k) dg.a[k] = (gp.a[k] - gm.a[k]) * inv2h;
        out.dg[c] = dg;
    }
    return out;
}

}  // namespace

ScalarField mean_curvature(const SpacelikeGraph& graph, double margin_floor) {
    graph.require_spacelike("mean_curvature");
    if (margin_floor > 0.0 && graph.min_margin() < margin_floor)
        throw IllConditioned("mean_curvature: spacelike margin " +
                             std::to_string(graph.min_margin()) + " below floor " +
                             std::to_string(margin_floor));

    const FiberGrid& grid = graph.grid();
    const int d = grid.dim();
    const double n = d;
    ScalarField H(grid);

    // Central differences of the normal components along the graph.
    ScalarField dN0[2] = {ScalarField(grid), ScalarField(grid)};
    ScalarField dNf[2][2] = {{ScalarField(grid), ScalarField(grid)},
                             {ScalarField(grid), ScalarField(grid)}};
    const auto [n_time, n_fiber] = graph.normal_field();
    for (int a = 0; a < d; ++a) {
        dN0[a] = partial(n_time, a);
        for (int e = 0; e < d; ++e) {
            ScalarField comp(grid);
            for (int node = 0; node < grid.node_count(); ++node)
                comp[node] = n_fiber.at(e, node);
            dNf[a][e] = partial(comp, a);
        }
    }

    double x[2] = {0.0, 0.0};
    for (int node = 0; node < grid.node_count(); ++node) {
        grid.coords(node, x);
        const double t = graph.u()[node];
        const double b = graph.beta_on_graph()[node];
        const double db = graph.dbeta_on_graph()[node];
        const SymMat g = graph.metric_on_graph().at(node);
        const SymMat dg = graph.dmetric_on_graph().at(node);
        const SymMat ginv = g.inverse();
        const SymMat gu_inv = graph.induced_metric().at(node).inverse();
        const SpatialDerivs sd = spatial_derivs(graph.model(), grid, node, t);

        const double N0 = n_time[node];
        double Nf[2] = {n_fiber.at(0, node), d == 2 ? n_fiber.at(1, node) : 0.0};
        double ua[2] = {graph.du_covariant().at(0, node),
                        d == 2 ? graph.du_covariant().at(1, node) : 0.0};

        // Fiber Christoffel symbols of g_t at fixed t (first kind, then raised).
        // Gamma^e_{ad} = (1/2) g^{ec} (d_a g_{cd} + d_d g_{ca} - d_c g_{ad})
        double Gamma_f[2][2][2] = {};  // [e][a][dd]
        for (int e = 0; e < d; ++e)
            for (int aa = 0; aa < d; ++aa)
                for (int dd = 0; dd < d; ++dd) {
                    double sum = 0.0;
                    for (int c = 0; c < d; ++c) {
                        const double first = sd.dg[aa](c, dd) + sd.dg[dd](c, aa) -
                                             sd.dg[c](aa, dd);
                        sum += ginv(e, c) * first;
                    }
                    Gamma_f[e][aa][dd] = 0.5 * sum;
                }

        double ip[2][2] = {};  // ip[a][b] = g( nabla_{E_a} N, E_b )
        for (int a = 0; a < d; ++a) {
            // time component of nabla_{E_a} N
            double cov0 = dN0[a][node];
            cov0 += (db / (2.0 * b)) * ua[a] * N0;
            for (int c = 0; c < d; ++c)
                cov0 += (sd.dbeta[c] / (2.0 * b)) * (ua[a] * Nf[c] + (a == c ? N0 : 0.0));
            for (int dd = 0; dd < d; ++dd) cov0 += (dg(a, dd) / (2.0 * b)) * Nf[dd];

            // fiber components of nabla_{E_a} N
            double covf[2] = {0.0, 0.0};
            for (int e = 0; e < d; ++e) {
                double v = dNf[a][e][node];
                // Gamma^e_00 u_a N^0
                double gup_dbeta = 0.0;
                for (int c = 0; c < d; ++c) gup_dbeta += ginv(e, c) * sd.dbeta[c];
                v += 0.5 * gup_dbeta * ua[a] * N0;
                // Gamma^e_{0c} (u_a N^c + delta_{ac} N^0)
                for (int c = 0; c < d; ++c) {
                    double gee = 0.0;
                    for (int dd = 0; dd < d; ++dd) gee += ginv(e, dd) * dg(dd, c);
                    v += 0.5 * gee * (ua[a] * Nf[c] + (a == c ? N0 : 0.0));
                }
                // fiber Christoffels
                for (int dd = 0; dd < d; ++dd) v += Gamma_f[e][a][dd] * Nf[dd];
                covf[e] = v;
            }

            for (int bb = 0; bb < d; ++bb) {
                double val = -b * cov0 * ua[bb];
                for (int e = 0; e < d; ++e) val += g(bb, e) * covf[e];
                ip[a][bb] = val;
            }
        }

        double trace = 0.0;
        for (int a = 0; a < d; ++a)
            for (int bb = 0; bb < d; ++bb) trace += gu_inv(a, bb) * ip[a][bb];
        H[node] = trace / n;
    }
    return H;
}

ScalarField time_laplacian_direct(const SpacelikeGraph& graph) {
    graph.require_spacelike("time_laplacian_direct");
    return laplace_beltrami(graph.u(), graph.induced_metric());
}

namespace {

/// Shared bracket of the split Laplacian:
/// d_t log vol - (1/2)(sinh^2/beta) d_t beta + (1/2)(d_t g)(v, v).
ScalarField split_bracket(const SpacelikeGraph& graph, double perp_tol) {
    const FiberGrid& grid = graph.grid();
    const int d = grid.dim();
    const auto [n_time, n_fiber] = graph.normal_field();
    ScalarField out(grid);
    for (int node = 0; node < grid.node_count(); ++node) {
        const double b = graph.beta_on_graph()[node];
        const double db = graph.dbeta_on_graph()[node];
        const SymMat g = graph.metric_on_graph().at(node);
        const SymMat dg = graph.dmetric_on_graph().at(node);
        const SymMat ginv = g.inverse();
        const double ct = graph.cosh_theta()[node];
        const double sinh2 = ct * ct - 1.0;

        double tr = ginv.a[0] * dg.a[0];
        if (d == 2) tr += 2.0 * ginv.a[1] * dg.a[1] + ginv.a[2] * dg.a[2];
        const double dlogvol = 0.5 * tr;

        double v[2] = {n_fiber.at(0, node), d == 2 ? n_fiber.at(1, node) : 0.0};
        const double v2 = g.quad(v);
        const double perp_term = (v2 < perp_tol * b) ? 0.0 : 0.5 * dg.quad(v);

        out[node] = dlogvol - 0.5 * (sinh2 / b) * db + perp_term;
    }
    return out;
}

}  // namespace

SplitLaplacian time_laplacian_split(const SpacelikeGraph& graph, double maximality_tol,
                                    double perp_tol) {
    graph.require_spacelike("time_laplacian_split");
    const FiberGrid& grid = graph.grid();
    const int d = grid.dim();

    SplitLaplacian result{ScalarField(grid), 0.0, true};
    result.max_abs_h = mean_curvature(graph).max_abs();
    result.maximal = result.max_abs_h <= maximality_tol;

    const ScalarField bracket = split_bracket(graph, perp_tol);
    const auto [n_time, n_fiber] = graph.normal_field();

    for (int node = 0; node < grid.node_count(); ++node) {
        const double b = graph.beta_on_graph()[node];
        const double db = graph.dbeta_on_graph()[node];
        const double ct = graph.cosh_theta()[node];
        const double sinh2 = ct * ct - 1.0;
        const SpatialDerivs sd =
            spatial_derivs(graph.model(), grid, node, graph.u()[node]);

        // dt_tan(beta) = -sinh^2 d_t beta - sqrt(beta) cosh theta N^a d_a beta
        double dt_tan_beta = -sinh2 * db;
        for (int a = 0; a < d; ++a)
            dt_tan_beta -= std::sqrt(b) * ct * n_fiber.at(a, node) * sd.dbeta[a];

        result.value[node] = dt_tan_beta / (b * b) - bracket[node] / b;
    }
    return result;
}

std::optional<ScalarField> time_laplacian_split_conformal(const SpacelikeGraph& graph,
                                                          double perp_tol) {
    graph.require_spacelike("time_laplacian_split_conformal");
    const int n_spacetime = graph.fiber_dim() + 1;
    if (n_spacetime <= 2) return std::nullopt;

    const double expo = static_cast<double>(n_spacetime) / (n_spacetime - 2);
    const ScalarField bracket = split_bracket(graph, perp_tol);
    ScalarField out(graph.grid());
    for (int node = 0; node < graph.grid().node_count(); ++node) {
        const double b = graph.beta_on_graph()[node];
        out[node] = -std::pow(b, -expo) * bracket[node];
    }
    return out;
}

ScalarField conformal_mean_curvature(const SpacelikeGraph& graph,
                                     const ScalarField& alpha) {
    graph.require_spacelike("conformal_mean_curvature");
    if (!(alpha.grid() == graph.grid()))
        throw Error("conformal_mean_curvature: alpha on a different grid");
    const FiberGrid& grid = graph.grid();
    const int d = grid.dim();
    const ScalarField H = mean_curvature(graph);
    const auto [n_time, n_fiber] = graph.normal_field();

    std::array<ScalarField, 2> dalpha{ScalarField(grid), ScalarField(grid)};
    for (int a = 0; a < d; ++a) dalpha[a] = partial(alpha, a);

    ScalarField out(grid);
    for (int node = 0; node < grid.node_count(); ++node) {
        double grad_dot_n = 0.0;
        for (int a = 0; a < d; ++a) grad_dot_n += dalpha[a][node] * n_fiber.at(a, node);
        out[node] = std::exp(-alpha[node]) * (H[node] + grad_dot_n);
    }
    return out;
}

ScalarField conformal_mean_curvature_direct(const SpacelikeGraph& graph,
                                            const ScalarField& alpha) {
    graph.require_spacelike("conformal_mean_curvature_direct");
    if (!(alpha.grid() == graph.grid()))
        throw Error("conformal_mean_curvature_direct: alpha on a different grid");
    const FiberGrid grid = graph.grid();
    // Lift the sampled fiber function to a coordinate callable by snapping
    // evaluation points back to nodes (all queries happen at node coords).
    auto values = std::make_shared<std::vector<double>>(alpha.values());
    auto lookup = [grid, values](const double* x) {
        int idx[2] = {0, 0};
        for (int a = 0; a < grid.dim(); ++a) {
            const double q = x[a] / grid.spacing(a);
            int i = static_cast<int>(std::llround(q));
            if (std::abs(q - i) > 1e-6)
                throw Error("conformal rescale: off-node evaluation point");
            i %= grid.size(a);
            if (i < 0) i += grid.size(a);
            idx[a] = i;
        }
        return (*values)[static_cast<size_t>(grid.index(idx[0], idx[1]))];
    };
    const SpacetimeModel rescaled =
        SpacetimeModel::conformal_fiber_rescale(graph.model(), lookup);
    SpacelikeGraph tilde(rescaled, graph.u());
    return mean_curvature(tilde);
}

double volume(const SpacelikeGraph& graph) {
    graph.require_spacelike("volume");
    ScalarField one(graph.grid(), 1.0);
    return integrate(one, graph.induced_metric());
}

double first_variation(const SpacelikeGraph& graph, const VariationField& xi) {
    graph.require_spacelike("first_variation");
    if (!(xi.time.grid() == graph.grid()))
        throw Error("first_variation: variation field on a different grid");
    const FiberGrid& grid = graph.grid();
    const int d = grid.dim();
    const double n = d;
    const auto [n_time, n_fiber] = graph.normal_field();
    const ScalarField H = mean_curvature(graph);

    // xi_tan = xi + g(xi, N) N; its fiber components span the graph frame.
    VectorField zeta(grid);
    ScalarField xi_dot_n(grid);
    for (int node = 0; node < grid.node_count(); ++node) {
        const double b = graph.beta_on_graph()[node];
        const SymMat g = graph.metric_on_graph().at(node);
        double dot = -b * xi.time[node] * n_time[node];
        for (int a = 0; a < d; ++a)
            for (int bb = 0; bb < d; ++bb)
                dot += g(a, bb) * xi.fiber.at(a, node) * n_fiber.at(bb, node);
        xi_dot_n[node] = dot;
        for (int a = 0; a < d; ++a)
            zeta.at(a, node) = xi.fiber.at(a, node) + dot * n_fiber.at(a, node);
    }

    const ScalarField div_tan = divergence(zeta, graph.induced_metric());
    ScalarField integrand(grid);
    for (int node = 0; node < grid.node_count(); ++node)
        integrand[node] = div_tan[node] - n * H[node] * xi_dot_n[node];
    return integrate(integrand, graph.induced_metric());
}

}  // namespace maxslice
