#include "maxslice/spacetime.hpp"

#include <algorithm>
#include <cmath>

namespace maxslice {

namespace {

constexpr double kCbrtEps = 6.055454452393343e-06;  // cbrt(2^-52)

double fd_step(double t) { return kCbrtEps * std::max(1.0, std::abs(t)); }

}  // namespace

const char* family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::GRW: return "grw";
        case ModelFamily::MultiplyWarped: return "multiply_warped";
        case ModelFamily::Twisted: return "twisted";
        case ModelFamily::StandardStatic: return "standard_static";
        case ModelFamily::LorentzianProduct: return "lorentzian_product";
        case ModelFamily::Custom: return "custom";
    }
    return "?";
}

const char* kind_name(MonotonicityKind k) {
    switch (k) {
        case MonotonicityKind::NonContracting: return "non_contracting";
        case MonotonicityKind::NonExpanding: return "non_expanding";
        case MonotonicityKind::Static: return "static";
        case MonotonicityKind::Transition: return "transition";
        case MonotonicityKind::Indefinite: return "indefinite";
    }
    return "?";
}

// ---- factories ---------------------------------------------------------------

SpacetimeModel SpacetimeModel::grw(const Expr& warp, MetricFn base_metric,
                                   int fiber_dim, Interval interval) {
    const Expr dwarp = warp.derivative_t();
    auto m = grw([warp](double t) { return warp.eval(t); },
                 [dwarp](double t) { return dwarp.eval(t); }, std::move(base_metric),
                 fiber_dim, interval);
    m.description_ = "grw f=" + warp.text();
    return m;
}

SpacetimeModel SpacetimeModel::grw(std::function<double(double)> warp,
                                   std::function<double(double)> dwarp,
                                   MetricFn base_metric, int fiber_dim,
                                   Interval interval) {
    SpacetimeModel m;
    m.fiber_dim_ = fiber_dim;
    m.interval_ = interval;
    m.family_ = ModelFamily::GRW;
    m.description_ = "grw";
    m.warp_ = warp;
    m.dwarp_ = dwarp;
    m.beta_ = [](double, const double*) { return 1.0; };
    m.dbeta_ = [](double, const double*) { return 0.0; };
    m.metric_ = [warp, base_metric](double t, const double* x) {
        const double f = warp(t);
        return base_metric(x).scaled(f * f);
    };
    if (dwarp) {
        m.dmetric_ = [warp, dwarp, base_metric](double t, const double* x) {
            return base_metric(x).scaled(2.0 * warp(t) * dwarp(t));
        };
    }
    return m;
}

SpacetimeModel SpacetimeModel::multiply_warped(const std::vector<Expr>& warps,
                                               MetricFn base_metric, int fiber_dim,
                                               Interval interval) {
    if (static_cast<int>(warps.size()) != fiber_dim)
        throw Error("multiply_warped: one warp expression per fiber axis expected");
    SpacetimeModel m;
    m.fiber_dim_ = fiber_dim;
    m.interval_ = interval;
    m.family_ = ModelFamily::MultiplyWarped;
    m.description_ = "multiply_warped";
    std::vector<Expr> dwarps;
    for (const Expr& w : warps) {
        m.description_ += " f=" + w.text();
        dwarps.push_back(w.derivative_t());
    }
    m.beta_ = [](double, const double*) { return 1.0; };
    m.dbeta_ = [](double, const double*) { return 0.0; };
    m.metric_ = [warps, base_metric](double t, const double* x) {
        SymMat g = base_metric(x);
        SymMat out = g;
        const double f0 = warps[0].eval(t);
        out.a[0] = f0 * f0 * g.a[0];
        if (g.dim == 2) {
            const double f1 = warps[1].eval(t);
            out.a[2] = f1 * f1 * g.a[2];
            out.a[1] = 0.0;  // orthogonal blocks
        }
        return out;
    };
    m.dmetric_ = [warps, dwarps, base_metric](double t, const double* x) {
        SymMat g = base_metric(x);
        SymMat out = g;
        out.a[0] = 2.0 * warps[0].eval(t) * dwarps[0].eval(t) * g.a[0];
        if (g.dim == 2) {
            out.a[2] = 2.0 * warps[1].eval(t) * dwarps[1].eval(t) * g.a[2];
            out.a[1] = 0.0;
        }
        return out;
    };
    return m;
}

SpacetimeModel SpacetimeModel::twisted(const Expr& lambda, MetricFn base_metric,
                                       int fiber_dim, Interval interval) {
    const Expr dlambda = lambda.derivative_t();
    SpacetimeModel m;
    m.fiber_dim_ = fiber_dim;
    m.interval_ = interval;
    m.family_ = ModelFamily::Twisted;
    m.description_ = "twisted lambda=" + lambda.text();
    m.beta_ = [](double, const double*) { return 1.0; };
    m.dbeta_ = [](double, const double*) { return 0.0; };
    m.metric_ = [lambda, base_metric, fiber_dim](double t, const double* x) {
        const double y = fiber_dim == 2 ? x[1] : 0.0;
        return base_metric(x).scaled(lambda.eval(t, x[0], y));
    };
    m.dmetric_ = [dlambda, base_metric, fiber_dim](double t, const double* x) {
        const double y = fiber_dim == 2 ? x[1] : 0.0;
        return base_metric(x).scaled(dlambda.eval(t, x[0], y));
    };
    return m;
}

SpacetimeModel SpacetimeModel::standard_static(const Expr& h, MetricFn base_metric,
                                               int fiber_dim, Interval interval) {
    SpacetimeModel m;
    m.fiber_dim_ = fiber_dim;
    m.interval_ = interval;
    m.family_ = ModelFamily::StandardStatic;
    m.description_ = "standard_static h=" + h.text();
    m.beta_ = [h, fiber_dim](double, const double* x) {
        const double y = fiber_dim == 2 ? x[1] : 0.0;
        const double v = h.eval(0.0, x[0], y);
        return v * v;
    };
    m.dbeta_ = [](double, const double*) { return 0.0; };
    m.metric_ = [base_metric](double, const double* x) { return base_metric(x); };
    m.dmetric_ = [fiber_dim](double, const double*) {
        SymMat z;
        z.dim = fiber_dim;
        z.a = {0.0, 0.0, 0.0};
        return z;
    };
    return m;
}

SpacetimeModel SpacetimeModel::lorentzian_product(MetricFn base_metric, int fiber_dim,
                                                  Interval interval) {
    SpacetimeModel m;
    m.fiber_dim_ = fiber_dim;
    m.interval_ = interval;
    m.family_ = ModelFamily::LorentzianProduct;
    m.description_ = "lorentzian_product";
    m.beta_ = [](double, const double*) { return 1.0; };
    m.dbeta_ = [](double, const double*) { return 0.0; };
    m.metric_ = [base_metric](double, const double* x) { return base_metric(x); };
    m.dmetric_ = [fiber_dim](double, const double*) {
        SymMat z;
        z.dim = fiber_dim;
        z.a = {0.0, 0.0, 0.0};
        return z;
    };
    return m;
}

SpacetimeModel SpacetimeModel::custom(BetaFn beta, MetricFn metric, BetaFn dbeta,
                                      MetricFn dmetric, int fiber_dim,
                                      Interval interval, std::string description) {
    SpacetimeModel m;
    m.fiber_dim_ = fiber_dim;
    m.interval_ = interval;
    m.family_ = ModelFamily::Custom;
    m.description_ = std::move(description);
    m.beta_ = std::move(beta);
    m.dbeta_ = std::move(dbeta);
    m.metric_ = std::move(metric);
    m.dmetric_ = std::move(dmetric);
    return m;
}

SpacetimeModel SpacetimeModel::conformal_fiber_rescale(
    const SpacetimeModel& base, std::function<double(const double*)> alpha) {
    SpacetimeModel m = base;
    m.family_ = ModelFamily::Custom;
    m.description_ = base.description_ + " * conformal";
    m.warp_ = nullptr;
    m.dwarp_ = nullptr;
    const BetaFn b = base.beta_;
    const MetricFn g = base.metric_;
    m.beta_ = [b, alpha](double t, const double* x) {
        return std::exp(2.0 * alpha(x)) * b(t, x);
    };
    m.metric_ = [g, alpha](double t, const double* x) {
        return g(t, x).scaled(std::exp(2.0 * alpha(x)));
    };
    if (base.dbeta_ && base.dmetric_) {
        const BetaFn db = base.dbeta_;
        const MetricFn dg = base.dmetric_;
        m.dbeta_ = [db, alpha](double t, const double* x) {
            return std::exp(2.0 * alpha(x)) * db(t, x);
        };
        m.dmetric_ = [dg, alpha](double t, const double* x) {
            return dg(t, x).scaled(std::exp(2.0 * alpha(x)));
        };
    } else {
        m.dbeta_ = nullptr;
        m.dmetric_ = nullptr;
    }
    return m;
}

// ---- pointwise evaluation ------------------------------------------------------

void SpacetimeModel::require_in_interval(double t, const char* who) const {
    if (!interval_.contains(t))
        throw OutOfInterval(std::string(who) + ": t = " + std::to_string(t) +
                            " outside model interval");
}

double SpacetimeModel::beta(double t, const double* x) const { return beta_(t, x); }

SymMat SpacetimeModel::metric(double t, const double* x) const { return metric_(t, x); }

double SpacetimeModel::dbeta_dt(double t, const double* x) const {
    if (dbeta_) return dbeta_(t, x);
    double h = fd_step(t);
    if (std::isfinite(interval_.lo)) h = std::min(h, 0.5 * (t - interval_.lo));
    if (std::isfinite(interval_.hi)) h = std::min(h, 0.5 * (interval_.hi - t));
    return (beta_(t + h, x) - beta_(t - h, x)) / (2.0 * h);
}

SymMat SpacetimeModel::dmetric_dt(double t, const double* x) const {
    if (dmetric_) return dmetric_(t, x);
    double h = fd_step(t);
    if (std::isfinite(interval_.lo)) h = std::min(h, 0.5 * (t - interval_.lo));
    if (std::isfinite(interval_.hi)) h = std::min(h, 0.5 * (interval_.hi - t));
    const SymMat p = metric_(t + h, x);
    const SymMat q = metric_(t - h, x);
    SymMat out = p;
    for (int c = 0; c < 3; ++c) out.a[c] = (p.a[c] - q.a[c]) / (2.0 * h);
    return out;
}

double SpacetimeModel::grw_warp(double t) const {
    if (!warp_) throw Error("grw_warp: model is not a GRW family");
    return warp_(t);
}

double SpacetimeModel::grw_dwarp(double t) const {
    if (!dwarp_) throw Error("grw_dwarp: model is not a GRW family");
    return dwarp_(t);
}

ModelEval SpacetimeModel::eval(double t, const FiberGrid& grid) const {
    require_in_interval(t, "eval");
    if (grid.dim() != fiber_dim_) throw Error("eval: grid dim != model fiber dim");
    ModelEval out{ScalarField(grid), SymTensorField(grid), ScalarField(grid),
                  SymTensorField(grid)};
    double x[2] = {0.0, 0.0};
    for (int node = 0; node < grid.node_count(); ++node) {
        grid.coords(node, x);
        const double b = beta_(t, x);
        const SymMat g = metric_(t, x);
        if (!(b > 0.0))
            throw Error("eval: beta must be positive (node " + std::to_string(node) + ")");
        if (!g.positive_definite())
            throw DegenerateMetric("eval: g_t not positive definite (node " +
                                   std::to_string(node) + ")");
        out.beta[node] = b;
        out.metric.set(node, g);
        out.dbeta[node] = dbeta_dt(t, x);
        out.dmetric.set(node, dmetric_dt(t, x));
    }
    return out;
}

// ---- classification -------------------------------------------------------------

namespace {

struct SliceSigns {
    bool contract_ok;  // d_t beta <= tol and d_t g >= -tol (non-contracting)
    bool expand_ok;    // reversed signs
    double max_dbeta, min_dbeta, max_eig, min_eig;
};

SliceSigns slice_signs(const SpacetimeModel& model, double t, const FiberGrid& grid,
                       double tol_rel) {
    SliceSigns s{true, true, -1e300, 1e300, -1e300, 1e300};
    double x[2] = {0.0, 0.0};
    for (int node = 0; node < grid.node_count(); ++node) {
        grid.coords(node, x);
        const double b = model.beta(t, x);
        const double db = model.dbeta_dt(t, x);
        const SymMat g = model.metric(t, x);
        const SymMat dg = model.dmetric_dt(t, x);
        const double tol_b = tol_rel * std::max(1.0, std::abs(b));
        const double tol_g = tol_rel * std::max(1.0, g.norm());
        const double lo = dg.eig_min();
        const double hi = dg.eig_max();
        s.max_dbeta = std::max(s.max_dbeta, db);
        s.min_dbeta = std::min(s.min_dbeta, db);
        s.max_eig = std::max(s.max_eig, hi);
        s.min_eig = std::min(s.min_eig, lo);
        if (db > tol_b || lo < -tol_g) s.contract_ok = false;
        if (db < -tol_b || hi > tol_g) s.expand_ok = false;
    }
    return s;
}

}  // namespace

MonotonicityVerdict classify_monotonicity(const SpacetimeModel& model, Interval t_range,
                                          const FiberGrid& grid, ClassifyOptions opts) {
    if (!std::isfinite(t_range.lo) || !std::isfinite(t_range.hi) ||
        !(t_range.hi > t_range.lo))
        throw Error("classify_monotonicity: finite nonempty t_range required");
    if (!(t_range.lo > model.interval().lo && t_range.hi < model.interval().hi)) {
        // allow touching an infinite model interval
        if (!(model.interval().contains(t_range.lo) && model.interval().contains(t_range.hi)))
            throw OutOfInterval("classify_monotonicity: t_range outside model interval");
    }

    const int m = std::max(3, opts.t_samples);
    std::vector<double> ts(m);
    std::vector<SliceSigns> signs(m);
    MonotonicityVerdict v;
    v.max_dbeta = -1e300;
    v.min_dbeta = 1e300;
    v.max_dmetric_eig = -1e300;
    v.min_dmetric_eig = 1e300;
    for (int k = 0; k < m; ++k) {
        ts[k] = t_range.lo + (t_range.hi - t_range.lo) * k / (m - 1);
        signs[k] = slice_signs(model, ts[k], grid, opts.tol_rel);
        v.max_dbeta = std::max(v.max_dbeta, signs[k].max_dbeta);
        v.min_dbeta = std::min(v.min_dbeta, signs[k].min_dbeta);
        v.max_dmetric_eig = std::max(v.max_dmetric_eig, signs[k].max_eig);
        v.min_dmetric_eig = std::min(v.min_dmetric_eig, signs[k].min_eig);
    }

    const bool all_c = std::all_of(signs.begin(), signs.end(),
                                   [](const SliceSigns& s) { return s.contract_ok; });
    const bool all_e = std::all_of(signs.begin(), signs.end(),
                                   [](const SliceSigns& s) { return s.expand_ok; });
    if (all_c && all_e) {
        v.kind = MonotonicityKind::Static;
        return v;
    }
    if (all_c) {
        v.kind = MonotonicityKind::NonContracting;
        return v;
    }
    if (all_e) {
        v.kind = MonotonicityKind::NonExpanding;
        return v;
    }

    // Transition pattern: a non-contracting prefix followed by a
    // non-expanding suffix, possibly overlapping in a static band.
    int last_c = -1;  // largest k with contract_ok on every sample up to k
    while (last_c + 1 < m && signs[last_c + 1].contract_ok) ++last_c;
    int first_e = m;  // smallest k with expand_ok on every sample from k on
    while (first_e - 1 >= 0 && signs[first_e - 1].expand_ok) --first_e;

    if (last_c < 0 || first_e >= m || first_e > last_c + 1) {
        v.kind = MonotonicityKind::Indefinite;
        return v;
    }

    v.kind = MonotonicityKind::Transition;
    auto contract_at = [&](double t) {
        return slice_signs(model, t, grid, opts.tol_rel).contract_ok;
    };
    auto expand_at = [&](double t) {
        return slice_signs(model, t, grid, opts.tol_rel).expand_ok;
    };
    // Orientation-agnostic bisection: pred(f) false, pred(tr) true.
    auto bisect = [&](double f, double tr, auto&& pred) {
        while (std::abs(tr - f) > opts.bisect_tol) {
            const double mid = 0.5 * (f + tr);
            if (pred(mid)) tr = mid;
            else f = mid;
        }
        return 0.5 * (f + tr);
    };

    if (first_e <= last_c) {
        // Overlapping static band between the first all-expand sample and the
        // last all-contract sample; report the interval.
        double lo = ts[first_e];
        double hi = ts[last_c];
        if (first_e > 0 && !signs[first_e - 1].expand_ok)
            lo = bisect(ts[first_e - 1], ts[first_e], expand_at);
        if (last_c + 1 < m && !signs[last_c + 1].contract_ok)
            hi = bisect(ts[last_c + 1], ts[last_c],
                        contract_at);  // reversed: pred true towards ts[last_c]
        if (lo > hi) std::swap(lo, hi);
        v.t0_lo = lo;
        v.t0_hi = hi;
        if (v.t0_hi - v.t0_lo <= 4.0 * opts.bisect_tol) {
            v.t0_lo = v.t0_hi = 0.5 * (v.t0_lo + v.t0_hi);
        }
        return v;
    }

    // Sharp switch between consecutive samples: locate via bisection on the
    // non-contracting indicator.
    const double t0 = bisect(ts[first_e], ts[last_c], contract_at);
    v.t0_lo = v.t0_hi = t0;
    return v;
}

// ---- level-hypersurface quantities -----------------------------------------------

ScalarField time_vector_divergence(const SpacetimeModel& model, double t,
                                   const FiberGrid& grid) {
    model.require_in_interval(t, "time_vector_divergence");
    ScalarField out(grid);
    double x[2] = {0.0, 0.0};
    for (int node = 0; node < grid.node_count(); ++node) {
        grid.coords(node, x);
        const double b = model.beta(t, x);
        const double db = model.dbeta_dt(t, x);
        const SymMat g = model.metric(t, x);
        const SymMat dg = model.dmetric_dt(t, x);
        const SymMat ginv = g.inverse();
        // d_t log sqrt(det g_t) = (1/2) tr(g^{-1} d_t g)
        double tr;
        if (g.dim == 1) {
            tr = ginv.a[0] * dg.a[0];
        } else {
            tr = ginv.a[0] * dg.a[0] + 2.0 * ginv.a[1] * dg.a[1] + ginv.a[2] * dg.a[2];
        }
        out[node] = 0.5 * tr + 0.5 * db / b;
    }
    return out;
}

ScalarField slice_mean_curvature(const SpacetimeModel& model, double t0,
                                 const FiberGrid& grid) {
    model.require_in_interval(t0, "slice_mean_curvature");
    const ScalarField divt = time_vector_divergence(model, t0, grid);
    ScalarField out(grid);
    const double n = grid.dim();
    double x[2] = {0.0, 0.0};
    for (int node = 0; node < grid.node_count(); ++node) {
        grid.coords(node, x);
        const double b = model.beta(t0, x);
        const double db = model.dbeta_dt(t0, x);
        out[node] = (divt[node] / std::sqrt(b) - 0.5 * db / std::pow(b, 1.5)) / n;
    }
    return out;
}

}  // namespace maxslice
