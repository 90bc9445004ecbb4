/// @file graph_geometry.hpp
/// @brief Spacelike graph hypersurfaces over the fiber: induced metric,
///        unit normal, hyperbolic angle, mean curvature, Laplacian
///        identities for the time function, conformal curvature relation,
///        volume and first variation.
///
/// Orientation convention (fixed once for the whole library): the unit
/// normal N has positive time component, so g(N, d_t) = -sqrt(beta) cosh
/// theta < 0. With the shape operator A X = -D_X N and H = -(1/n) tr A,
/// the mean curvature of a level hypersurface equals the slice formula in
/// spacetime.hpp with global sign sigma = +1; for a small graph u over a
/// Lorentzian product, H ~ +(1/n) Lap u.

#pragma once

#include <optional>
#include <utility>

#include "maxslice/fiber_calculus.hpp"
#include "maxslice/spacetime.hpp"

namespace maxslice {

/// A spacetime vector field along a graph: time component plus fiber part.
struct VariationField {
    ScalarField time;
    VectorField fiber;
};

/// Immutable spacelike-graph value object; geometric caches are computed
/// once at construction.
class SpacelikeGraph {
public:
    /// Builds the graph {(u(p), p)}. Throws OutOfInterval when any value of
    /// u leaves the model interval. A non-spacelike graph is representable
    /// (the margin field reports where positivity fails); operations that
    /// need a spacelike graph throw NotSpacelike.
    SpacelikeGraph(SpacetimeModel model, ScalarField u);

    const SpacetimeModel& model() const { return model_; }
    const FiberGrid& grid() const { return u_.grid(); }
    const ScalarField& u() const { return u_; }
    int fiber_dim() const { return u_.grid().dim(); }

    /// Induced metric g_u = -beta du (x) du + g_{u(p)}.
    const SymTensorField& induced_metric() const { return g_u_; }

    /// Pointwise minimum eigenvalue of the induced metric.
    const ScalarField& spacelike_margin() const { return margin_; }
    double min_margin() const { return min_margin_; }
    bool spacelike() const { return min_margin_ > 0.0; }

    /// Unit timelike normal with g(N, d_t) < 0; throws NotSpacelike.
    std::pair<ScalarField, VectorField> normal_field() const;

    /// cosh of the hyperbolic angle, -g(N, d_t)/sqrt(beta).
    const ScalarField& cosh_theta() const;

    /// Tangential part of d_t along the graph (ambient components).
    VariationField tangent_projection_dt() const;

    // Cached model data along the graph, exposed for identity checks.
    const ScalarField& beta_on_graph() const { return beta_; }
    const ScalarField& dbeta_on_graph() const { return dbeta_; }
    const SymTensorField& metric_on_graph() const { return g_; }
    const SymTensorField& dmetric_on_graph() const { return dg_; }
    const VectorField& du_covariant() const { return du_; }

    void require_spacelike(const char* who) const;

private:
    SpacetimeModel model_;
    ScalarField u_;
    VectorField du_;          // covariant partials d_a u
    ScalarField beta_, dbeta_;
    SymTensorField g_, dg_;   // g_t and d_t g_t at (u(p), p)
    SymTensorField g_u_;
    ScalarField margin_;
    ScalarField normal_t_;
    VectorField normal_f_;
    ScalarField cosh_theta_;
    double min_margin_ = 0.0;
};

/// Weingarten-trace mean curvature H = -(1/n) tr A per node. Throws
/// NotSpacelike; throws IllConditioned when the margin drops below
/// `margin_floor` (> 0) anywhere.
ScalarField mean_curvature(const SpacelikeGraph& graph, double margin_floor = 0.0);

/// Laplace-Beltrami of the time function u in the induced metric.
ScalarField time_laplacian_direct(const SpacelikeGraph& graph);

/// The split form of the time-function Laplacian, valid on maximal graphs:
///   (1/beta^2) dt_tan(beta)
///   - (1/beta) [ d_t log vol - (1/2)(sinh^2 theta / beta) d_t beta
///                + (1/2) (d_t g)(v, v) ],
/// with v the fiber part of the normal (dropped where |v|_g^2 < tol beta).
struct SplitLaplacian {
    ScalarField value;
    double max_abs_h = 0.0;  // measured |H|_inf used for the maximality flag
    bool maximal = true;     // false when |H|_inf exceeded the tolerance
};
SplitLaplacian time_laplacian_split(const SpacelikeGraph& graph,
                                    double maximality_tol = 1e-6,
                                    double perp_tol = 1e-12);

/// Conformally weighted variant of the split form, defined for spacetime
/// dimension >= 3 (fiber dim >= 2): -beta^{-n/(n-2)} [bracket] with
/// n = fiber dim + 1. Returns nullopt in fiber dimension 1 where the
/// conformal rescaling degenerates.
std::optional<ScalarField> time_laplacian_split_conformal(const SpacelikeGraph& graph,
                                                          double perp_tol = 1e-12);

/// Conformal mean curvature relation: e^alpha H~ = H + g(grad alpha, N)
/// for a fiber function alpha lifted to spacetime.
ScalarField conformal_mean_curvature(const SpacelikeGraph& graph,
                                     const ScalarField& alpha);

/// Direct route: mean curvature of the same graph in the conformally
/// rescaled spacetime e^{2 alpha} g. Cross-validates the relation above.
ScalarField conformal_mean_curvature_direct(const SpacelikeGraph& graph,
                                            const ScalarField& alpha);

/// Riemannian volume of the graph.
double volume(const SpacelikeGraph& graph);

/// First variation of volume along xi:
///   dV/ds(0) = integral( div_S(xi_tan) - n H g(xi, N) ).
double first_variation(const SpacelikeGraph& graph, const VariationField& xi);

}  // namespace maxslice
