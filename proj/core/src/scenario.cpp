#include "maxslice/scenario.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace maxslice {

namespace {

using json = nlohmann::ordered_json;

std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& msg) {
    throw ParseError("scenario: " + msg, 0, 0);
}

json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // translate byte offset to line/column
        int line = 1, col = 1;
        for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(origin + ": " + e.what() + " (line " + std::to_string(line) +
                             ", column " + std::to_string(col) + ")",
                         line, col);
    }
}

double interval_bound(const json& j, double fallback) {
    if (j.is_null()) return fallback;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        parse_fail("interval bound must be a number, 'inf' or '-inf'");
    }
    return j.get<double>();
}

struct FiberSpec {
    int dim = 1;
    std::array<int, 2> sizes{64, 64};
    std::array<double, 2> lengths{6.283185307179586476925286766559,
                                  6.283185307179586476925286766559};
    std::vector<Expr> metric;

    FiberGrid grid(const std::optional<std::array<int, 2>>& override_sizes) const {
        std::array<int, 2> s = sizes;
        if (override_sizes) {
            s[0] = (*override_sizes)[0];
            if (dim == 2) s[1] = (*override_sizes)[1];
        }
        if (dim == 1) return FiberGrid::line(s[0], lengths[0]);
        return FiberGrid::torus(s[0], s[1], lengths[0], lengths[1]);
    }

    FiberGrid grid_sized(const std::array<int, 2>& s) const {
        if (dim == 1) return FiberGrid::line(s[0], lengths[0]);
        return FiberGrid::torus(s[0], s[1], lengths[0], lengths[1]);
    }

    SpacetimeModel::MetricFn metric_fn() const {
        const int d = dim;
        const std::vector<Expr> comps = metric;
        return [comps, d](const double* x) {
            SymMat m;
            m.dim = d;
            const double xx = x[0];
            const double yy = d == 2 ? x[1] : 0.0;
            m.a[0] = comps[0].eval(0.0, xx, yy);
            if (d == 2) {
                m.a[1] = comps[1].eval(0.0, xx, yy);
                m.a[2] = comps[2].eval(0.0, xx, yy);
            }
            return m;
        };
    }
};

FiberSpec parse_fiber(const json& j) {
    FiberSpec f;
    if (!j.contains("dim")) parse_fail("fiber.dim missing");
    f.dim = j.at("dim").get<int>();
    if (f.dim != 1 && f.dim != 2) parse_fail("fiber.dim must be 1 or 2");
    const auto& sizes = j.at("sizes");
    if (static_cast<int>(sizes.size()) != f.dim) parse_fail("fiber.sizes length != dim");
    for (int a = 0; a < f.dim; ++a) f.sizes[a] = sizes[a].get<int>();
    const auto& lengths = j.at("lengths");
    if (static_cast<int>(lengths.size()) != f.dim)
        parse_fail("fiber.lengths length != dim");
    for (int a = 0; a < f.dim; ++a) f.lengths[a] = lengths[a].get<double>();

    std::vector<std::string> metric_exprs;
    if (j.contains("metric")) {
        for (const auto& e : j.at("metric")) metric_exprs.push_back(e.get<std::string>());
    } else {
        metric_exprs = f.dim == 1 ? std::vector<std::string>{"1"}
                                  : std::vector<std::string>{"1", "0", "1"};
    }
    const size_t need = f.dim == 1 ? 1 : 3;
    if (metric_exprs.size() != need) parse_fail("fiber.metric needs 1 (1-D) or 3 (2-D) entries");
    for (const auto& s : metric_exprs) f.metric.push_back(Expr::parse(s));
    return f;
}

SpacetimeModel build_model(const json& jmodel, const FiberSpec& fiber) {
    Interval iv;
    if (jmodel.contains("interval")) {
        const auto& jiv = jmodel.at("interval");
        iv.lo = interval_bound(jiv.at(0), -std::numeric_limits<double>::infinity());
        iv.hi = interval_bound(jiv.at(1), std::numeric_limits<double>::infinity());
    }
    const std::string family = jmodel.at("family").get<std::string>();
    auto base = fiber.metric_fn();

    if (family == "grw")
        return SpacetimeModel::grw(Expr::parse(jmodel.at("warp").get<std::string>()), base,
                                   fiber.dim, iv);
    if (family == "multiply_warped") {
        std::vector<Expr> warps;
        for (const auto& w : jmodel.at("warps")) warps.push_back(Expr::parse(w.get<std::string>()));
        return SpacetimeModel::multiply_warped(warps, base, fiber.dim, iv);
    }
    if (family == "twisted")
        return SpacetimeModel::twisted(Expr::parse(jmodel.at("lambda").get<std::string>()),
                                       base, fiber.dim, iv);
    if (family == "standard_static")
        return SpacetimeModel::standard_static(Expr::parse(jmodel.at("h").get<std::string>()),
                                               base, fiber.dim, iv);
    if (family == "lorentzian_product")
        return SpacetimeModel::lorentzian_product(base, fiber.dim, iv);
    if (family == "custom") {
        const Expr beta = Expr::parse(jmodel.at("beta").get<std::string>());
        const Expr dbeta = beta.derivative_t();
        std::vector<Expr> comps, dcomps;
        for (const auto& e : jmodel.at("metric")) {
            comps.push_back(Expr::parse(e.get<std::string>()));
            dcomps.push_back(comps.back().derivative_t());
        }
        const size_t need = fiber.dim == 1 ? 1 : 3;
        if (comps.size() != need) parse_fail("custom model metric needs 1 or 3 entries");
        const int d = fiber.dim;
        auto metric_at = [comps, d](double t, const double* x) {
            SymMat m;
            m.dim = d;
            const double yy = d == 2 ? x[1] : 0.0;
            m.a[0] = comps[0].eval(t, x[0], yy);
            if (d == 2) {
                m.a[1] = comps[1].eval(t, x[0], yy);
                m.a[2] = comps[2].eval(t, x[0], yy);
            }
            return m;
        };
        auto dmetric_at = [dcomps, d](double t, const double* x) {
            SymMat m;
            m.dim = d;
            const double yy = d == 2 ? x[1] : 0.0;
            m.a[0] = dcomps[0].eval(t, x[0], yy);
            if (d == 2) {
                m.a[1] = dcomps[1].eval(t, x[0], yy);
                m.a[2] = dcomps[2].eval(t, x[0], yy);
            }
            return m;
        };
        auto beta_at = [beta, d](double t, const double* x) {
            return beta.eval(t, x[0], d == 2 ? x[1] : 0.0);
        };
        auto dbeta_at = [dbeta, d](double t, const double* x) {
            return dbeta.eval(t, x[0], d == 2 ? x[1] : 0.0);
        };
        return SpacetimeModel::custom(beta_at, metric_at, dbeta_at, dmetric_at, fiber.dim,
                                      iv, "custom beta=" + beta.text());
    }
    parse_fail("unknown model family '" + family + "'");
}

// ---- initial graphs --------------------------------------------------------------

ScalarField build_init(const json& jinit, const SpacetimeModel& model,
                       const FiberGrid& grid, std::uint64_t seed, int which) {
    const std::string kind = jinit.value("kind", "expression");
    if (kind == "expression") {
        return sample_fiber_expression(Expr::parse(jinit.at("expr").get<std::string>()),
                                       grid);
    }
    if (kind == "random") {
        const double center = jinit.value("center", 0.0);
        const int modes = jinit.value("modes", 3);
        const double frac = jinit.value("amplitude_frac", 0.25);
        return random_spacelike_init(model, grid, center, seed + 1000003ull * which,
                                     modes, frac);
    }
    if (kind == "boosted_slice") {
        return boosted_slice_init(grid, jinit.value("tilt", 0.4));
    }
    parse_fail("unknown init kind '" + kind + "'");
}

// ---- assertion helpers -----------------------------------------------------------

struct Asserter {
    std::vector<Assertion>* out;

    void check(const std::string& name, bool ok, const std::string& expected,
               const std::string& actual) {
        out->push_back({name, ok, expected, actual});
    }
    void le(const std::string& name, double value, double bound) {
        check(name, value <= bound, "<= " + fmt17(bound), fmt17(value));
    }
    void ge(const std::string& name, double value, double bound) {
        check(name, value >= bound, ">= " + fmt17(bound), fmt17(value));
    }
    void eq(const std::string& name, const std::string& value, const std::string& want) {
        check(name, value == want, want, value);
    }
};

bool monotone_tail(const std::vector<double>& xs, int window) {
    if (static_cast<int>(xs.size()) < window + 1) return false;
    const size_t last = xs.size() - 1;
    const size_t first = last - window;
    const double dir = xs[last] > xs[first] ? 1.0 : -1.0;
    for (size_t k = first; k < last; ++k)
        if (dir * (xs[k + 1] - xs[k]) <= 0.0) return false;
    return true;
}

// ---- task runners -----------------------------------------------------------------

struct TaskContext {
    const FiberSpec* fiber;
    const SpacetimeModel* model;
    FiberGrid grid;
    SolverParams params;
    std::uint64_t seed;
    std::string scenario_name;
    std::vector<std::string>* csv_rows;
    bool quiet;
};

void append_csv_row(TaskContext& ctx, std::uint64_t seed, const SolverReport& rep) {
    std::ostringstream row;
    row << ctx.scenario_name << ',' << seed << ',' << status_name(rep.status) << ','
        << fmt17(rep.final_residual) << ',' << fmt17(rep.slice_deviation) << ','
        << fmt17(rep.t0) << ',' << rep.iterations;
    ctx.csv_rows->push_back(row.str());
}

json solver_report_json(const SolverReport& rep) {
    json j;
    j["status"] = status_name(rep.status);
    j["iterations"] = rep.iterations;
    j["classification"] = class_name(rep.classification);
    j["t0"] = rep.t0;
    j["slice_deviation"] = rep.slice_deviation;
    j["final_residual"] = rep.final_residual;
    return j;
}

json run_classify_task(TaskContext& ctx, const json& jtask, Asserter& as) {
    ClassifyOptions opts;
    opts.t_samples = jtask.value("samples", 65);
    Interval range;
    range.lo = jtask.at("t_range").at(0).get<double>();
    range.hi = jtask.at("t_range").at(1).get<double>();
    const MonotonicityVerdict v = classify_monotonicity(*ctx.model, range, ctx.grid, opts);

    json out;
    out["kind"] = kind_name(v.kind);
    out["t0_lo"] = v.t0_lo;
    out["t0_hi"] = v.t0_hi;
    out["max_dbeta"] = v.max_dbeta;
    out["min_dbeta"] = v.min_dbeta;
    out["max_dmetric_eig"] = v.max_dmetric_eig;
    out["min_dmetric_eig"] = v.min_dmetric_eig;

    if (jtask.contains("expect")) {
        const auto& e = jtask.at("expect");
        if (e.contains("kind")) as.eq("classify.kind", kind_name(v.kind), e.at("kind"));
        if (e.contains("t0")) {
            const double tol = e.value("t0_tol", 1e-9);
            as.le("classify.t0", std::abs(v.t0() - e.at("t0").get<double>()), tol);
        }
    }
    return out;
}

json run_solve_task(TaskContext& ctx, const json& jtask, Asserter& as, bool prescribed) {
    SolverParams params = ctx.params;
    const std::string solver = jtask.value("solver", "newton");

    std::optional<ScalarField> alpha;
    if (prescribed)
        alpha = sample_fiber_expression(Expr::parse(jtask.at("alpha").get<std::string>()),
                                        ctx.grid);

    const json& jinit = jtask.at("init");
    const int count = jinit.value("kind", "expression") == std::string("random")
                          ? jinit.value("count", 1)
                          : 1;

    struct RunRow {
        std::uint64_t seed;
        std::string solver;
        SolverReport report;
    };
    std::vector<RunRow> rows;

    for (int k = 0; k < count; ++k) {
        const std::uint64_t init_seed = ctx.seed + 1000003ull * k;
        const ScalarField u0 = build_init(jinit, *ctx.model, ctx.grid, ctx.seed, k);
        std::vector<std::string> solvers;
        if (solver == "both") {
            solvers = {"newton", "flow"};
        } else {
            solvers = {solver};
        }
        for (const std::string& s : solvers) {
            SolveResult result = [&] {
                if (s == "flow") return flow_relax(*ctx.model, u0, params);
                if (prescribed) return solve_prescribed(*ctx.model, *alpha, u0, params);
                return solve_maximal(*ctx.model, u0, params);
            }();
            append_csv_row(ctx, init_seed, result.report);
            rows.push_back({init_seed, s, std::move(result.report)});
        }
    }

    json out;
    out["runs"] = json::array();
    for (const auto& row : rows) {
        json j = solver_report_json(row.report);
        j["seed"] = row.seed;
        j["solver"] = row.solver;
        out["runs"].push_back(std::move(j));
    }

    if (jtask.contains("expect")) {
        const auto& e = jtask.at("expect");
        if (e.contains("all_status")) {
            const std::string want = e.at("all_status");
            bool ok = true;
            std::string got;
            for (const auto& row : rows) {
                if (status_name(row.report.status) != want) {
                    ok = false;
                    got = status_name(row.report.status);
                }
            }
            as.check("solve.all_status", ok, want, ok ? want : got);
        }
        if (e.contains("statuses_allowed")) {
            std::vector<std::string> allowed;
            for (const auto& s : e.at("statuses_allowed")) allowed.push_back(s);
            bool ok = true;
            std::string got;
            for (const auto& row : rows) {
                const std::string s = status_name(row.report.status);
                if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
                    ok = false;
                    got = s;
                }
            }
            as.check("solve.statuses_allowed", ok, "subset", ok ? "ok" : got);
        }
        if (e.contains("min_status_count")) {
            for (auto it = e.at("min_status_count").begin();
                 it != e.at("min_status_count").end(); ++it) {
                int n = 0;
                for (const auto& row : rows)
                    if (status_name(row.report.status) == it.key()) ++n;
                as.ge("solve.count." + it.key(), n, it.value().get<int>());
            }
        }
        const auto converged = [&](auto&& fn) {
            for (const auto& row : rows)
                if (row.report.status == SolveStatus::Converged) fn(row);
        };
        if (e.contains("classification")) {
            const std::string want = e.at("classification");
            bool ok = true;
            converged([&](const RunRow& row) {
                if (class_name(row.report.classification) != want) ok = false;
            });
            as.check("solve.classification", ok, want, ok ? want : "mismatch");
        }
        if (e.contains("max_residual")) {
            double worst = 0.0;
            converged([&](const RunRow& row) {
                worst = std::max(worst, row.report.final_residual);
            });
            as.le("solve.max_residual", worst, e.at("max_residual").get<double>());
        }
        if (e.contains("max_slice_deviation")) {
            double worst = 0.0;
            converged([&](const RunRow& row) {
                worst = std::max(worst, row.report.slice_deviation);
            });
            as.le("solve.max_slice_deviation", worst,
                  e.at("max_slice_deviation").get<double>());
        }
        if (e.contains("t0")) {
            const double want = e.at("t0").get<double>();
            const double tol = e.value("t0_tol", 1e-6);
            double worst = 0.0;
            converged([&](const RunRow& row) {
                worst = std::max(worst, std::abs(row.report.t0 - want));
            });
            as.le("solve.t0", worst, tol);
        }
        if (e.contains("min_converged")) {
            int n = 0;
            converged([&](const RunRow&) { ++n; });
            as.ge("solve.min_converged", n, e.at("min_converged").get<int>());
        }
        if (e.contains("min_nonslice_converged")) {
            int n = 0;
            converged([&](const RunRow& row) {
                if (row.report.classification == GraphClass::NonSlice) ++n;
            });
            as.ge("solve.min_nonslice_converged", n,
                  e.at("min_nonslice_converged").get<int>());
        }
        if (e.value("monotone_drift_on_failure", false)) {
            bool ok = true;
            for (const auto& row : rows) {
                if (row.report.status == SolveStatus::Converged) continue;
                if (!monotone_tail(row.report.mean_history,
                                   std::min(params.drift_window,
                                            static_cast<int>(row.report.mean_history.size()) - 1)))
                    ok = false;
            }
            as.check("solve.monotone_drift_on_failure", ok, "monotone", ok ? "monotone" : "not");
        }
        if (prescribed && e.contains("max_abs_warp_derivative_at_t0")) {
            double worst = 0.0;
            converged([&](const RunRow& row) {
                worst = std::max(worst, std::abs(ctx.model->grw_dwarp(row.report.t0)));
            });
            as.le("solve.max_abs_warp_derivative_at_t0", worst,
                  e.at("max_abs_warp_derivative_at_t0").get<double>());
        }
    }
    return out;
}

json run_identity_task(TaskContext& ctx, const json& jtask, Asserter& as) {
    const json& jgraph = jtask.at("graph");
    ScalarField u(ctx.grid);
    if (jgraph.value("kind", "expression") == std::string("solve")) {
        const ScalarField u0 = build_init(jgraph.at("init"), *ctx.model, ctx.grid,
                                          ctx.seed, 0);
        SolveResult r = solve_maximal(*ctx.model, u0, ctx.params);
        u = r.graph.u();
    } else {
        u = build_init(jgraph, *ctx.model, ctx.grid, ctx.seed, 0);
    }
    SpacelikeGraph graph(*ctx.model, u);
    const int alpha_seeds = jtask.value("alpha_seeds", 5);
    const IdentityReport rep = run_identity_checks(graph, alpha_seeds, ctx.seed);

    json out;
    out["time_gradient_max"] = rep.time_gradient_max;
    out["normal_unit_max"] = rep.normal_unit_max;
    out["divergence_theorem_max"] = rep.divergence_theorem_max;
    out["self_adjoint_max"] = rep.self_adjoint_max;
    out["conformal_relation_max"] = rep.conformal_relation_max;
    out["split_laplacian_max"] = rep.split_laplacian_max;

    if (jtask.contains("expect")) {
        const auto& e = jtask.at("expect");
        auto bound = [&](const char* key, double val) {
            if (e.contains(key)) as.le(std::string("identity.") + key, val, e.at(key).get<double>());
        };
        bound("max_time_gradient", rep.time_gradient_max);
        bound("max_normal_unit", rep.normal_unit_max);
        bound("max_divergence_theorem", rep.divergence_theorem_max);
        bound("max_self_adjoint", rep.self_adjoint_max);
        bound("max_conformal_relation", rep.conformal_relation_max);
        bound("max_split_laplacian", rep.split_laplacian_max);
    }
    return out;
}

json run_refinement_task(TaskContext& ctx, const json& jtask, Asserter& as) {
    const std::string quantity = jtask.at("quantity").get<std::string>();
    std::vector<std::array<int, 2>> grids;
    for (const auto& g : jtask.at("grids")) {
        std::array<int, 2> s{0, 0};
        if (static_cast<int>(g.size()) != ctx.fiber->dim)
            parse_fail("refinement grid entry rank != fiber dim");
        for (int a = 0; a < ctx.fiber->dim; ++a) {
            s[a] = g[a].get<int>();
            if ((s[a] & (s[a] - 1)) != 0)
                parse_fail("refinement grid sizes must be powers of two");
        }
        grids.push_back(s);
    }

    std::vector<double> errors;
    for (const auto& s : grids) {
        const FiberGrid grid = ctx.fiber->grid_sized(s);
        double err = 0.0;
        if (quantity == "graph_residual") {
            const ScalarField u = build_init(jtask.at("graph"), *ctx.model, grid,
                                             ctx.seed, 0);
            SpacelikeGraph graph(*ctx.model, u);
            err = mean_curvature(graph).max_abs();
        } else if (quantity == "slice_consistency") {
            const double t0 = jtask.at("t0").get<double>();
            const ScalarField slice_h = slice_mean_curvature(*ctx.model, t0, grid);
            SpacelikeGraph graph(*ctx.model, ScalarField(grid, t0));
            const ScalarField wein_h = mean_curvature(graph);
            for (int node = 0; node < grid.node_count(); ++node)
                err = std::max(err, std::abs(std::abs(slice_h[node]) -
                                             std::abs(wein_h[node])));
        } else if (quantity == "split_laplacian_agreement") {
            ScalarField u = build_init(jtask.at("graph"), *ctx.model, grid, ctx.seed, 0);
            if (jtask.value("solve", false)) {
                SolveResult r = solve_maximal(*ctx.model, u, ctx.params);
                u = r.graph.u();
            }
            SpacelikeGraph graph(*ctx.model, u);
            const ScalarField direct = time_laplacian_direct(graph);
            const SplitLaplacian split = time_laplacian_split(graph, 1e300);
            for (int node = 0; node < grid.node_count(); ++node)
                err = std::max(err, std::abs(direct[node] - split.value[node]));
        } else if (quantity == "conformal_agreement") {
            const ScalarField u = build_init(jtask.at("graph"), *ctx.model, grid,
                                             ctx.seed, 0);
            SpacelikeGraph graph(*ctx.model, u);
            const int seeds = jtask.value("alpha_seeds", 1);
            for (int k = 0; k < seeds; ++k) {
                ScalarField alpha = band_limited_noise(grid, ctx.seed + 77ull * k, 3);
                for (double& v : alpha.values()) v *= 0.25;
                const ScalarField rel = conformal_mean_curvature(graph, alpha);
                const ScalarField direct = conformal_mean_curvature_direct(graph, alpha);
                for (int node = 0; node < grid.node_count(); ++node)
                    err = std::max(err, std::abs(rel[node] - direct[node]));
            }
        } else {
            parse_fail("unknown refinement quantity '" + quantity + "'");
        }
        errors.push_back(err);
    }

    const double floor = jtask.value("floor", 1e-12);
    std::vector<double> orders;
    for (size_t k = 0; k + 1 < errors.size(); ++k)
        orders.push_back(observed_order(errors[k], errors[k + 1], floor));

    json out;
    out["quantity"] = quantity;
    out["errors"] = errors;
    out["orders"] = orders;

    if (jtask.contains("expect")) {
        const auto& e = jtask.at("expect");
        if (e.contains("min_order")) {
            double worst = orders.empty() ? 0.0 : orders[0];
            for (double o : orders) worst = std::min(worst, o);
            as.ge("refinement.min_order", worst, e.at("min_order").get<double>());
        }
        if (e.contains("max_error")) {
            as.le("refinement.final_error", errors.back(), e.at("max_error").get<double>());
        }
    }
    return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& body) {
    std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << body;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

// ---- public helpers ----------------------------------------------------------------

ScalarField sample_fiber_expression(const Expr& e, const FiberGrid& grid) {
    ScalarField f(grid);
    double x[2] = {0.0, 0.0};
    for (int node = 0; node < grid.node_count(); ++node) {
        grid.coords(node, x);
        f[node] = e.eval(0.0, x[0], grid.dim() == 2 ? x[1] : 0.0);
    }
    return f;
}

ScalarField boosted_slice_init(const FiberGrid& grid, double tilt) {
    if (grid.dim() != 1) throw Error("boosted_slice_init: 1-D fiber expected");
    if (!(std::abs(tilt) < 1.0)) throw Error("boosted_slice_init: |tilt| < 1 required");
    ScalarField u(grid);
    const double two_pi = 6.283185307179586476925286766559;
    for (int node = 0; node < grid.node_count(); ++node) {
        const double x = node * grid.spacing(0);
        u[node] = std::atanh(tilt * std::cos(two_pi * x / grid.length(0)));
    }
    return u;
}

double observed_order(double err_coarse, double err_fine, double floor) {
    if (err_fine <= floor) return 99.0;
    return std::log2(err_coarse / err_fine);
}

SpacetimeModel model_from_json(const std::string& json_text) {
    const json j = parse_json_text(json_text, "model_from_json");
    const FiberSpec fiber = parse_fiber(j.at("fiber"));
    return build_model(j.at("model"), fiber);
}

IdentityReport run_identity_checks(const SpacelikeGraph& graph, int alpha_seeds,
                                   std::uint64_t seed) {
    IdentityReport rep;
    const FiberGrid& grid = graph.grid();
    const int d = grid.dim();

    // gradient relation for the time function
    {
        const VectorField lhs = gradient(graph.u(), graph.induced_metric());
        const VariationField dt_tan = graph.tangent_projection_dt();
        for (int node = 0; node < grid.node_count(); ++node) {
            const double b = graph.beta_on_graph()[node];
            for (int a = 0; a < d; ++a) {
                const double rhs = -dt_tan.fiber.at(a, node) / b;
                rep.time_gradient_max = std::max(rep.time_gradient_max,
                                                 std::abs(lhs.at(a, node) - rhs));
            }
        }
    }

    // unit normal and orthogonality to the graph tangents
    {
        const auto [n_time, n_fiber] = graph.normal_field();
        for (int node = 0; node < grid.node_count(); ++node) {
            const double b = graph.beta_on_graph()[node];
            const SymMat g = graph.metric_on_graph().at(node);
            double nn = -b * n_time[node] * n_time[node];
            double nf[2] = {n_fiber.at(0, node), d == 2 ? n_fiber.at(1, node) : 0.0};
            nn += g.quad(nf);
            rep.normal_unit_max = std::max(rep.normal_unit_max, std::abs(nn + 1.0));
            for (int a = 0; a < d; ++a) {
                double dot = -b * n_time[node] * graph.du_covariant().at(a, node);
                for (int c = 0; c < d; ++c) dot += g(a, c) * nf[c];
                rep.normal_unit_max = std::max(rep.normal_unit_max, std::abs(dot));
            }
        }
    }

    // discrete divergence theorem and self-adjointness on the induced metric
    {
        VectorField X(grid);
        for (int a = 0; a < d; ++a) {
            const ScalarField noise = band_limited_noise(grid, seed + 31ull * a, 3);
            for (int node = 0; node < grid.node_count(); ++node)
                X.at(a, node) = noise[node];
        }
        const ScalarField divX = divergence(X, graph.induced_metric());
        ScalarField one(grid, 1.0);
        const double total = integrate(divX, graph.induced_metric());
        rep.divergence_theorem_max = std::abs(total) / volume(graph);

        const ScalarField f = band_limited_noise(grid, seed + 101, 3);
        const ScalarField h = band_limited_noise(grid, seed + 102, 3);
        const ScalarField lf = laplace_beltrami(f, graph.induced_metric());
        const ScalarField lh = laplace_beltrami(h, graph.induced_metric());
        const double a1 = inner_product(lf, h, graph.induced_metric());
        const double a2 = inner_product(f, lh, graph.induced_metric());
        const double scale = 1.0 + std::abs(a1) + std::abs(a2);
        rep.self_adjoint_max = std::abs(a1 - a2) / scale;
    }

    // conformal curvature relation vs direct rescaled computation
    for (int k = 0; k < alpha_seeds; ++k) {
        ScalarField alpha = band_limited_noise(grid, seed + 7919ull * (k + 1), 3);
        for (double& v : alpha.values()) v *= 0.25;
        const ScalarField rel = conformal_mean_curvature(graph, alpha);
        const ScalarField direct = conformal_mean_curvature_direct(graph, alpha);
        for (int node = 0; node < grid.node_count(); ++node)
            rep.conformal_relation_max = std::max(
                rep.conformal_relation_max, std::abs(rel[node] - direct[node]));
    }

    // split vs direct time Laplacian (meaningful on near-maximal graphs)
    {
        const ScalarField direct = time_laplacian_direct(graph);
        const SplitLaplacian split = time_laplacian_split(graph, 1e300);
        for (int node = 0; node < grid.node_count(); ++node)
            rep.split_laplacian_max = std::max(
                rep.split_laplacian_max, std::abs(direct[node] - split.value[node]));
    }
    return rep;
}

// ---- scenario execution --------------------------------------------------------------

RunReport run_scenario(const std::filesystem::path& scenario_file,
                       const RunOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();

    std::ifstream in(scenario_file);
    if (!in) throw Error("cannot open scenario file " + scenario_file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const json j = parse_json_text(buffer.str(), scenario_file.string());

    RunReport report;
    report.scenario = j.value("name", scenario_file.stem().string());

    const FiberSpec fiber = parse_fiber(j.at("fiber"));
    const SpacetimeModel model = build_model(j.at("model"), fiber);
    const FiberGrid grid = fiber.grid(options.grid_override);

    SolverParams params;
    if (j.contains("solver_params")) {
        const auto& p = j.at("solver_params");
        params.tol_residual = p.value("tol_residual", params.tol_residual);
        params.tol_step = p.value("tol_step", params.tol_step);
        params.max_newton = p.value("max_newton", params.max_newton);
        params.max_flow = p.value("max_flow", params.max_flow);
        params.margin_floor_frac = p.value("margin_floor_frac", params.margin_floor_frac);
        params.drift_window = p.value("drift_window", params.drift_window);
        params.drift_min = p.value("drift_min", params.drift_min);
        params.slice_tol = p.value("slice_tol", params.slice_tol);
        params.flow_cfl = p.value("flow_cfl", params.flow_cfl);
    }
    const std::uint64_t seed =
        options.seed_override ? *options.seed_override : j.value("seed", 20240101ull);

    std::vector<std::string> csv_rows;
    TaskContext ctx{&fiber, &model, grid, params, seed, report.scenario, &csv_rows,
                    options.quiet};

    json jreport;
    jreport["schema_version"] = 1;
    jreport["scenario"] = report.scenario;
    jreport["tags"] = j.value("tags", json::array());
    {
        json prov;
        prov["family"] = family_name(model.family());
        prov["model"] = model.description();
        json gsz = json::array();
        for (int a = 0; a < grid.dim(); ++a) gsz.push_back(grid.size(a));
        prov["grid_sizes"] = gsz;
        json glen = json::array();
        for (int a = 0; a < grid.dim(); ++a) glen.push_back(grid.length(a));
        prov["grid_lengths"] = glen;
        prov["seed"] = seed;
        prov["sign_convention_sigma"] = 1;
        json tol;
        tol["tol_residual"] = params.tol_residual;
        tol["tol_step"] = params.tol_step;
        tol["slice_tol"] = params.slice_tol;
        prov["tolerances"] = std::move(tol);
        jreport["provenance"] = std::move(prov);
    }

    jreport["tasks"] = json::array();
    for (const auto& jtask : j.value("tasks", json::array())) {
        const std::string type = jtask.at("type").get<std::string>();
        json jtres;
        jtres["type"] = type;
        std::vector<Assertion> task_asserts;
        Asserter as{&task_asserts};
        if (type == "classify") {
            jtres["results"] = run_classify_task(ctx, jtask, as);
        } else if (type == "solve_maximal") {
            jtres["results"] = run_solve_task(ctx, jtask, as, false);
        } else if (type == "solve_prescribed") {
            jtres["results"] = run_solve_task(ctx, jtask, as, true);
        } else if (type == "identity_checks") {
            jtres["results"] = run_identity_task(ctx, jtask, as);
        } else if (type == "refinement_study") {
            jtres["results"] = run_refinement_task(ctx, jtask, as);
        } else {
            parse_fail("unknown task type '" + type + "'");
        }
        json jasserts = json::array();
        for (const auto& a : task_asserts) {
            json ja;
            ja["name"] = a.name;
            ja["passed"] = a.passed;
            ja["expected"] = a.expected;
            ja["actual"] = a.actual;
            jasserts.push_back(std::move(ja));
            report.assertions.push_back(a);
        }
        jtres["assertions"] = std::move(jasserts);
        jreport["tasks"].push_back(std::move(jtres));
    }

    report.passed = std::all_of(report.assertions.begin(), report.assertions.end(),
                                [](const Assertion& a) { return a.passed; });
    jreport["passed"] = report.passed;

    const auto t_end = std::chrono::steady_clock::now();
    report.wall_time_seconds =
        std::chrono::duration<double>(t_end - t_start).count();
    jreport["wall_time_seconds"] = report.wall_time_seconds;

    std::ostringstream csv;
    csv << "scenario,seed,status,final_residual,slice_deviation,t0,iterations\n";
    for (const auto& row : csv_rows) csv << row << '\n';
    report.table_csv = csv.str();
    report.report_json = jreport.dump(2) + "\n";

    if (options.write_files) {
        const std::filesystem::path dir = options.out_dir / report.scenario;
        std::filesystem::create_directories(dir);
        atomic_write(dir / "report.json", report.report_json);
        atomic_write(dir / "table.csv", report.table_csv);
    }
    if (!options.quiet) {
        std::cout << "[" << (report.passed ? "PASS" : "FAIL") << "] " << report.scenario
                  << " (" << report.assertions.size() << " assertions)\n";
        for (const auto& a : report.assertions) {
            if (!a.passed)
                std::cout << "    failed: " << a.name << " expected " << a.expected
                          << " got " << a.actual << "\n";
        }
    }
    return report;
}

SuiteReport run_suite(const std::filesystem::path& dir, const RunOptions& options) {
    SuiteReport suite;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    int max_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (max_threads < 1) max_threads = 1;
    if (const char* env = std::getenv("MAXSLICE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) max_threads = cap;
    }
    max_threads = std::min<int>(max_threads, static_cast<int>(files.size()));
    max_threads = std::max(1, max_threads);

    std::vector<std::optional<RunReport>> results(files.size());
    std::vector<std::string> errors(files.size());
    std::atomic<size_t> next{0};
    std::mutex io_mutex;

    auto worker = [&] {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= files.size()) return;
            try {
                RunOptions per = options;
                per.quiet = true;
                RunReport r = run_scenario(files[k], per);
                {
                    std::lock_guard<std::mutex> lock(io_mutex);
                    if (!options.quiet)
                        std::cout << "[" << (r.passed ? "PASS" : "FAIL") << "] "
                                  << r.scenario << "\n";
                }
                results[k] = std::move(r);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(io_mutex);
                errors[k] = files[k].string() + ": " + e.what();
                if (!options.quiet)
                    std::cout << "[ERROR] " << files[k].filename().string() << ": "
                              << e.what() << "\n";
            }
        }
    };

    std::vector<std::thread> pool;
    for (int k = 0; k < max_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::ostringstream summary;
    summary << "scenario                         result  assertions\n";
    bool all_ok = true;
    for (size_t k = 0; k < files.size(); ++k) {
        if (!errors[k].empty()) {
            suite.hard_errors.push_back(errors[k]);
            all_ok = false;
            summary << files[k].stem().string() << "  ERROR\n";
            continue;
        }
        const RunReport& r = *results[k];
        all_ok = all_ok && r.passed;
        summary << r.scenario;
        for (size_t pad = r.scenario.size(); pad < 33; ++pad) summary << ' ';
        summary << (r.passed ? "pass" : "FAIL") << "    " << r.assertions.size() << "\n";
        suite.scenarios.push_back(r);
    }
    suite.passed = all_ok;
    suite.summary = summary.str();
    return suite;
}

}  // namespace maxslice
