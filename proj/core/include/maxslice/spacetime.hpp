/// @file spacetime.hpp
/// @brief Orthogonal-splitted spacetime models g = -beta dt^2 + g_t,
///        their time derivatives, monotonicity classification, and
///        level-hypersurface quantities.
///
/// A model is a pair of smooth callables beta(t, x) > 0 and g_t(t, x)
/// (positive definite on the fiber), defined for t in an open interval.
/// Analytic time derivatives are used when supplied (expression-built
/// models always carry them via symbolic differentiation); otherwise
/// central differences in t with step cbrt(eps) * max(1, |t|) are used.

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "maxslice/expression.hpp"
#include "maxslice/grid.hpp"

namespace maxslice {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double t) const { return t > lo && t < hi; }
    static Interval all() { return {}; }
};

enum class ModelFamily {
    GRW,
    MultiplyWarped,
    Twisted,
    StandardStatic,
    LorentzianProduct,
    Custom,
};

const char* family_name(ModelFamily f);

/// Field-level snapshot of a model at fixed coordinate time.
struct ModelEval {
    ScalarField beta;
    SymTensorField metric;
    ScalarField dbeta;
    SymTensorField dmetric;
};

class SpacetimeModel {
public:
    using BetaFn = std::function<double(double t, const double* x)>;
    using MetricFn = std::function<SymMat(double t, const double* x)>;

    SpacetimeModel() = default;

    // ---- family factories -------------------------------------------------

    /// -dt^2 + f(t)^2 g_F. `warp` must be positive on `interval`.
    static SpacetimeModel grw(const Expr& warp, MetricFn base_metric, int fiber_dim,
                              Interval interval = Interval::all());
    static SpacetimeModel grw(std::function<double(double)> warp,
                              std::function<double(double)> dwarp, MetricFn base_metric,
                              int fiber_dim, Interval interval = Interval::all());

    /// -dt^2 + sum_i f_i(t)^2 g_i over orthogonal 1-D blocks (one per axis).
    static SpacetimeModel multiply_warped(const std::vector<Expr>& warps,
                                          MetricFn base_metric, int fiber_dim,
                                          Interval interval = Interval::all());

    /// -dt^2 + lambda(t, x) g_F with lambda > 0.
    static SpacetimeModel twisted(const Expr& lambda, MetricFn base_metric,
                                  int fiber_dim, Interval interval = Interval::all());

    /// -h(x)^2 dt^2 + g_F; time independent by construction.
    static SpacetimeModel standard_static(const Expr& h, MetricFn base_metric,
                                          int fiber_dim,
                                          Interval interval = Interval::all());

    /// -dt^2 + g_F.
    static SpacetimeModel lorentzian_product(MetricFn base_metric, int fiber_dim,
                                             Interval interval = Interval::all());

    /// Arbitrary beta/metric callables; pass null derivatives for FD in t.
    static SpacetimeModel custom(BetaFn beta, MetricFn metric, BetaFn dbeta,
                                 MetricFn dmetric, int fiber_dim, Interval interval,
                                 std::string description = "custom");

    /// Fiber-lifted conformal rescale: beta -> e^{2a} beta, g_t -> e^{2a} g_t,
    /// with a = a(x) only. Used to cross-validate the conformal curvature
    /// relation against a direct computation in the rescaled spacetime.
    static SpacetimeModel conformal_fiber_rescale(const SpacetimeModel& base,
                                                  std::function<double(const double*)> alpha);

    // ---- pointwise evaluation ---------------------------------------------

    double beta(double t, const double* x) const;
    SymMat metric(double t, const double* x) const;
    double dbeta_dt(double t, const double* x) const;
    SymMat dmetric_dt(double t, const double* x) const;
    bool has_analytic_dt() const { return dbeta_ != nullptr && dmetric_ != nullptr; }

    int fiber_dim() const { return fiber_dim_; }
    const Interval& interval() const { return interval_; }
    ModelFamily family() const { return family_; }
    const std::string& description() const { return description_; }

    /// GRW warp value f(t) when the family is GRW (used by the prescribed
    /// curvature equation); throws otherwise.
    double grw_warp(double t) const;
    double grw_dwarp(double t) const;

    // ---- field-level operations -------------------------------------------

    /// Samples beta, g_t and their time derivatives on a grid.
    /// Throws OutOfInterval when t is outside the model interval and
    /// DegenerateMetric / Error when positivity fails at a node.
    ModelEval eval(double t, const FiberGrid& grid) const;

    void require_in_interval(double t, const char* who) const;

private:
    int fiber_dim_ = 1;
    Interval interval_;
    ModelFamily family_ = ModelFamily::Custom;
    std::string description_;
    BetaFn beta_, dbeta_;
    MetricFn metric_, dmetric_;
    std::function<double(double)> warp_, dwarp_;  // GRW only
};

// ---- monotonicity classification -------------------------------------------

enum class MonotonicityKind {
    NonContracting,
    NonExpanding,
    Static,
    Transition,
    Indefinite,
};

const char* kind_name(MonotonicityKind k);

struct MonotonicityVerdict {
    MonotonicityKind kind = MonotonicityKind::Indefinite;
    /// Transition location; a proper interval [t0_lo, t0_hi] when the
    /// spacetime is static between two transition levels.
    double t0_lo = 0.0;
    double t0_hi = 0.0;
    /// Sampled extremal values backing the verdict.
    double max_dbeta = 0.0;
    double min_dbeta = 0.0;
    double max_dmetric_eig = 0.0;
    double min_dmetric_eig = 0.0;

    double t0() const { return 0.5 * (t0_lo + t0_hi); }
};

struct ClassifyOptions {
    int t_samples = 65;
    double tol_rel = 1e-10;       // eigenvalue sign tolerance, scaled by tensor norm
    double bisect_tol = 1e-10;    // transition location accuracy
};

/// Scans sign patterns of d_t beta and eigenvalues of d_t g_t over a
/// (t, node) sample lattice.
MonotonicityVerdict classify_monotonicity(const SpacetimeModel& model, Interval t_range,
                                          const FiberGrid& grid,
                                          ClassifyOptions opts = {});

// ---- level-hypersurface quantities ------------------------------------------

/// Ambient divergence of d_t per node:
/// d_t log(vol density of g_t) + (1/2) d_t beta / beta.
ScalarField time_vector_divergence(const SpacetimeModel& model, double t,
                                   const FiberGrid& grid);

/// Mean curvature of the level hypersurface {t = t0} per node:
/// H = (1/n) [ beta^{-1/2} div(d_t) - (1/2) beta^{-3/2} d_t beta ].
ScalarField slice_mean_curvature(const SpacetimeModel& model, double t0,
                                 const FiberGrid& grid);

}  // namespace maxslice
