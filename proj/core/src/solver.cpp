#include "maxslice/solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>

namespace maxslice {

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::NoSolutionDetected: return "no_solution_detected";
        case SolveStatus::MaxIters: return "max_iters";
        case SolveStatus::LostSpacelike: return "lost_spacelike";
        case SolveStatus::Stalled: return "stalled";
    }
    return "?";
}

const char* class_name(GraphClass c) {
    return c == GraphClass::Slice ? "slice" : "non_slice";
}

namespace {

struct Evaluation {
    SpacelikeGraph graph;
    ScalarField residual;
};

/// Residual abstraction shared by Newton and flow; returns nullopt when the
/// trial u is infeasible (outside the interval or margin below the floor).
class Objective {
public:
    Objective(const SpacetimeModel& model, const ScalarField* alpha)
        : model_(model), alpha_(alpha) {}

    std::optional<Evaluation> try_eval(const ScalarField& u, double margin_floor) const {
        try {
            SpacelikeGraph graph(model_, u);
            if (!(graph.min_margin() > 0.0) || graph.min_margin() < margin_floor)
                return std::nullopt;
            ScalarField r = residual_from(graph);
            return Evaluation{std::move(graph), std::move(r)};
        } catch (const OutOfInterval&) {
            return std::nullopt;
        }
    }

    Evaluation eval_or_throw(const ScalarField& u) const {
        SpacelikeGraph graph(model_, u);
        graph.require_spacelike("solver");
        ScalarField r = residual_from(graph);
        return Evaluation{std::move(graph), std::move(r)};
    }

    ScalarField residual_from(const SpacelikeGraph& graph) const {
        if (!alpha_) return mean_curvature(graph);
        // Prescribed equation over the GRW base.
        const FiberGrid& grid = graph.grid();
        const int d = grid.dim();
        ScalarField htilde = conformal_mean_curvature(graph, *alpha_);
        std::array<ScalarField, 2> dalpha{ScalarField(grid), ScalarField(grid)};
        for (int a = 0; a < d; ++a) dalpha[a] = partial(*alpha_, a);
        ScalarField out(grid);
        for (int node = 0; node < grid.node_count(); ++node) {
            const double f = graph.model().grw_warp(graph.u()[node]);
            // Base fiber metric g_F = g_t / f^2 and its inverse.
            const SymMat gF = graph.metric_on_graph().at(node).scaled(1.0 / (f * f));
            const SymMat gFinv = gF.inverse();
            double ua[2] = {graph.du_covariant().at(0, node),
                            d == 2 ? graph.du_covariant().at(1, node) : 0.0};
            double da[2] = {dalpha[0][node], d == 2 ? dalpha[1][node] : 0.0};
            double dot = 0.0, du2 = 0.0;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    dot += gFinv(a, b) * da[a] * ua[b];
                    du2 += gFinv(a, b) * ua[a] * ua[b];
                }
            const double rhs = std::exp(-(*alpha_)[node]) * dot /
                               (f * std::sqrt(std::max(f * f - du2, 1e-300)));
            out[node] = htilde[node] - rhs;
        }
        return out;
    }

private:
    const SpacetimeModel& model_;
    const ScalarField* alpha_;
};

double sup_norm(const ScalarField& f) { return f.max_abs(); }

double half_sq(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v * v;
    return 0.5 * s;
}

// ---- stencil-limited coloring ---------------------------------------------------

/// Per-axis coloring with in-color separation >= 8 even across the periodic
/// wrap: stride-8 classes on the leading 8*floor(n/8) indices plus one
/// singleton color per remaining index.
std::vector<int> axis_colors(int n, int& count) {
    const int body = 8 * (n / 8);
    const int tail = n - body;
    count = 8 + tail;
    std::vector<int> color(n);
    for (int i = 0; i < n; ++i) color[i] = i < body ? i % 8 : 8 + (i - body);
    return color;
}

struct Coloring {
    int count = 0;
    std::vector<int> of_node;
};

Coloring make_coloring(const FiberGrid& grid) {
    Coloring c;
    int cx = 0, cy = 0;
    const std::vector<int> colx = axis_colors(grid.size(0), cx);
    std::vector<int> coly;
    if (grid.dim() == 2)
        coly = axis_colors(grid.size(1), cy);
    else
        cy = 1;
    c.count = cx * cy;
    c.of_node.resize(grid.node_count());
    for (int node = 0; node < grid.node_count(); ++node) {
        int i, j;
        grid.decompose(node, i, j);
        c.of_node[node] = colx[i] * cy + (grid.dim() == 2 ? coly[j] : 0);
    }
    return c;
}

/// Residual stencil: offsets of u-nodes a residual node depends on.
std::vector<std::array<int, 2>> stencil_offsets(int dim) {
    std::vector<std::array<int, 2>> s;
    if (dim == 1) {
        for (int o = -2; o <= 2; ++o) s.push_back({o, 0});
    } else {
        s.push_back({0, 0});
        for (int o : {-2, -1, 1, 2}) {
            s.push_back({o, 0});
            s.push_back({0, o});
        }
        for (int ox : {-1, 1})
            for (int oy : {-1, 1}) s.push_back({ox, oy});
    }
    return s;
}

int shifted(const FiberGrid& grid, int node, const std::array<int, 2>& off) {
    int p = grid.neighbor(node, 0, off[0]);
    if (grid.dim() == 2) p = grid.neighbor(p, 1, off[1]);
    return p;
}

Eigen::SparseMatrix<double> fd_jacobian(const Objective& obj, const ScalarField& u,
                                        const ScalarField& r0,
                                        const SolverParams& params,
                                        const SpacetimeModel& model) {
    const FiberGrid& grid = u.grid();
    const int n = grid.node_count();
    const Coloring coloring = make_coloring(grid);
    const auto offsets = stencil_offsets(grid.dim());

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<size_t>(n) * offsets.size());

    for (int c = 0; c < coloring.count; ++c) {
        ScalarField up = u;
        std::vector<int> members;
        std::vector<double> deltas;
        for (int node = 0; node < n; ++node) {
            if (coloring.of_node[node] != c) continue;
            double delta = params.jacobian_perturb * (1.0 + std::abs(u[node]));
            if (!model.interval().contains(u[node] + delta)) delta = -delta;
            up[node] += delta;
            members.push_back(node);
            deltas.push_back(delta);
        }
        if (members.empty()) continue;
        auto pert = obj.try_eval(up, 0.0);
        if (!pert) {
            // Perturbed state crossed the light cone; retry with shrunk steps.
            up = u;
            for (size_t k = 0; k < members.size(); ++k) {
                deltas[k] *= 1e-3;
                up[members[k]] += deltas[k];
            }
            pert = obj.try_eval(up, 0.0);
            if (!pert)
                throw SingularSystem("fd_jacobian: cannot perturb without losing "
                                     "spacelikeness");
        }
        for (size_t k = 0; k < members.size(); ++k) {
            const int q = members[k];
            for (const auto& off : offsets) {
                const int p = shifted(grid, q, off);
                const double dval = (pert->residual[p] - r0[p]) / deltas[k];
                if (dval != 0.0) triplets.emplace_back(p, q, dval);
            }
        }
    }

    Eigen::SparseMatrix<double> jac(n, n);
    jac.setFromTriplets(triplets.begin(), triplets.end());
    return jac;
}

/// Newton direction with escalating Tikhonov shift when the factorization
/// fails or produces an unusable step.
Eigen::VectorXd newton_direction(const Eigen::SparseMatrix<double>& jac,
                                 const Eigen::VectorXd& rhs, double cap) {
    using Solver = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
    const int n = static_cast<int>(jac.rows());
    double mu = 0.0;
    for (int attempt = 0; attempt < 7; ++attempt) {
        Eigen::SparseMatrix<double> m = jac;
        if (mu > 0.0) {
            Eigen::SparseMatrix<double> eye(n, n);
            eye.setIdentity();
            m = jac - mu * eye;
        }
        Solver lu;
        lu.analyzePattern(m);
        lu.factorize(m);
        if (lu.info() == Eigen::Success) {
            Eigen::VectorXd delta = lu.solve(rhs);
            const double dmax = delta.cwiseAbs().maxCoeff();
            if (std::isfinite(dmax) && dmax <= cap * 10.0) return delta;
            if (std::isfinite(dmax) && attempt == 6) {
                // keep the direction, scaled down to the cap
                return delta * (cap / dmax);
            }
        }
        mu = (mu == 0.0) ? 1e-8 : mu * 100.0;
    }
    throw SingularSystem("newton_direction: Jacobian singular beyond damping rescue");
}

// ---- shared report plumbing -------------------------------------------------------

void classify(SolverReport& rep, const ScalarField& u, double slice_tol) {
    const double mean = u.mean();
    double dev = 0.0;
    for (double v : u.values()) dev = std::max(dev, std::abs(v - mean));
    rep.t0 = mean;
    rep.slice_deviation = dev;
    rep.classification = dev < slice_tol ? GraphClass::Slice : GraphClass::NonSlice;
}

bool drift_detected(const SolverReport& rep, const SolverParams& params) {
    const int w = params.drift_window;
    const auto& means = rep.mean_history;
    const auto& res = rep.residual_history;
    if (static_cast<int>(means.size()) < w + 1) return false;
    const size_t last = means.size() - 1;
    const size_t first = last - w;
    const double total = means[last] - means[first];
    if (std::abs(total) < params.drift_min) return false;
    const double dir = total > 0 ? 1.0 : -1.0;
    for (size_t k = first; k < last; ++k) {
        if (dir * (means[k + 1] - means[k]) <= 0.0) return false;
    }
    const double r0 = res[first];
    const double r1 = res[last];
    if (!(r0 > 0.0)) return false;
    return (r0 - r1) / r0 < params.drift_residual_drop;
}

SolveResult finish(const Objective& obj, const ScalarField& u, SolverReport rep,
                   const SolverParams& params) {
    // Post-hoc verification: rebuild the graph and residual from scratch;
    // the iteration's own numbers are not trusted.
    Evaluation ev = obj.eval_or_throw(u);
    rep.final_residual = sup_norm(ev.residual);
    if (rep.status == SolveStatus::Converged &&
        !(rep.final_residual < params.tol_residual && ev.graph.min_margin() > 0.0)) {
        rep.status = SolveStatus::MaxIters;
    }
    classify(rep, u, params.slice_tol);
    return SolveResult{std::move(ev.graph), std::move(rep)};
}

SolveResult newton_solve(const SpacetimeModel& model, const Objective& obj,
                         const ScalarField& u0, const SolverParams& params) {
    SolverReport rep;
    ScalarField u = u0;

    auto base = obj.try_eval(u, 0.0);
    if (!base) throw NotSpacelike("solve: initial graph not spacelike");
    const double margin_floor = params.margin_floor_frac * base->graph.min_margin();

    ScalarField r = base->residual;
    rep.residual_history.push_back(sup_norm(r));
    rep.margin_history.push_back(base->graph.min_margin());
    rep.mean_history.push_back(u.mean());

    if (sup_norm(r) < params.tol_residual) {
        rep.status = SolveStatus::Converged;
        rep.iterations = 0;
        return finish(obj, u, std::move(rep), params);
    }

    const int n = u.grid().node_count();
    int no_move = 0;
    for (int iter = 1; iter <= params.max_newton; ++iter) {
        const Eigen::SparseMatrix<double> jac = fd_jacobian(obj, u, r, params, model);
        Eigen::VectorXd rhs(n);
        for (int k = 0; k < n; ++k) rhs[k] = -r[k];
        const double cap = params.step_cap * std::max(1.0, u.max_abs());
        Eigen::VectorXd delta = newton_direction(jac, rhs, cap);
        double dmax = delta.cwiseAbs().maxCoeff();
        if (dmax > cap) {
            delta *= cap / dmax;
            dmax = cap;
        }

        const double phi = half_sq(r);
        double lambda = params.damping_init;
        bool accepted = false;
        double best_phi = std::numeric_limits<double>::infinity();
        ScalarField best_u = u;
        std::optional<Evaluation> best_eval;
        double best_step = 0.0;

        for (int bt = 0; bt < params.max_backtracks; ++bt) {
            ScalarField trial = u;
            for (int k = 0; k < n; ++k) trial[k] += lambda * delta[k];
            auto ev = obj.try_eval(trial, margin_floor);
            if (ev) {
                const double phi_t = half_sq(ev->residual);
                if (phi_t < best_phi) {
                    best_phi = phi_t;
                    best_u = trial;
                    best_eval = std::move(ev);
                    best_step = lambda * dmax;
                }
                if (phi_t <= (1.0 - params.armijo * lambda) * phi) {
                    accepted = true;
                    break;
                }
            }
            lambda *= params.backtrack;
        }

        if (!best_eval) {
            rep.status = SolveStatus::LostSpacelike;
            rep.iterations = iter - 1;
            return finish(obj, u, std::move(rep), params);
        }

        if (!accepted) {
            // Stagnation step: move to the best feasible trial when it does
            // not make things worse; genuine non-existence shows up as a
            // monotone drift at flat residual.
            if (best_phi <= phi * (1.0 + 1e-9)) {
                accepted = true;
                ++no_move;
            } else {
                ++no_move;
                if (no_move >= 3) {
                    rep.status = SolveStatus::Stalled;
                    rep.iterations = iter - 1;
                    return finish(obj, u, std::move(rep), params);
                }
                continue;
            }
        } else {
            no_move = 0;
        }

        u = best_u;
        r = best_eval->residual;
        rep.iterations = iter;
        rep.residual_history.push_back(sup_norm(r));
        rep.margin_history.push_back(best_eval->graph.min_margin());
        rep.mean_history.push_back(u.mean());

        if (sup_norm(r) < params.tol_residual) {
            rep.status = SolveStatus::Converged;
            return finish(obj, u, std::move(rep), params);
        }
        if (drift_detected(rep, params)) {
            rep.status = SolveStatus::NoSolutionDetected;
            return finish(obj, u, std::move(rep), params);
        }
        if (best_step < params.tol_step) {
            rep.status = SolveStatus::Stalled;
            return finish(obj, u, std::move(rep), params);
        }
    }

    rep.status = SolveStatus::MaxIters;
    rep.iterations = params.max_newton;
    return finish(obj, u, std::move(rep), params);
}

}  // namespace

SolveResult solve_maximal(const SpacetimeModel& model, const ScalarField& u0,
                          const SolverParams& params) {
    Objective obj(model, nullptr);
    return newton_solve(model, obj, u0, params);
}

SolveResult solve_prescribed(const SpacetimeModel& grw_model, const ScalarField& alpha,
                             const ScalarField& u0, const SolverParams& params) {
    if (grw_model.family() != ModelFamily::GRW)
        throw Error("solve_prescribed: model must be a GRW family");
    Objective obj(grw_model, &alpha);
    return newton_solve(grw_model, obj, u0, params);
}

SolveResult flow_relax(const SpacetimeModel& model, const ScalarField& u0,
                       const SolverParams& params) {
    Objective obj(model, nullptr);
    SolverReport rep;
    ScalarField u = u0;

    auto base = obj.try_eval(u, 0.0);
    if (!base) throw NotSpacelike("flow_relax: initial graph not spacelike");
    const double margin_floor = params.margin_floor_frac * base->graph.min_margin();

    Evaluation ev = std::move(*base);
    rep.residual_history.push_back(sup_norm(ev.residual));
    rep.margin_history.push_back(ev.graph.min_margin());
    rep.mean_history.push_back(u.mean());

    const FiberGrid& grid = u.grid();
    const int d = grid.dim();
    const double n = d;

    for (int iter = 1; iter <= params.max_flow; ++iter) {
        if (sup_norm(ev.residual) < params.tol_residual) {
            rep.status = SolveStatus::Converged;
            rep.iterations = iter - 1;
            return finish(obj, u, std::move(rep), params);
        }

        // Node weight and CFL-limited step from the current geometry.
        ScalarField w(grid, 1.0);
        double max_coef = 0.0;
        for (int node = 0; node < grid.node_count(); ++node) {
            const double m_gu = ev.graph.induced_metric().at(node).eig_min();
            const double m_g = ev.graph.metric_on_graph().at(node).eig_min();
            double ratio = m_gu / m_g;
            ratio = std::clamp(ratio, 0.0, 1.0);
            double wt = std::pow(ratio, 1.5);
            wt = std::max(wt, params.flow_weight_floor);
            w[node] = wt;
            const SymMat gu_inv = ev.graph.induced_metric().at(node).inverse();
            double coef = gu_inv.a[0] / (grid.spacing(0) * grid.spacing(0));
            if (d == 2) coef += gu_inv.a[2] / (grid.spacing(1) * grid.spacing(1));
            max_coef = std::max(max_coef, wt * coef / n);
        }
        double dt = params.flow_cfl * 2.0 / max_coef;

        bool stepped = false;
        bool margin_blocked = false;
        while (dt * sup_norm(ev.residual) > params.step_floor) {
            ScalarField trial = u;
            for (int node = 0; node < grid.node_count(); ++node)
                trial[node] += dt * w[node] * ev.residual[node];
            auto trial_ev = obj.try_eval(trial, margin_floor);
            if (trial_ev) {
                u = trial;
                ev = std::move(*trial_ev);
                stepped = true;
                break;
            }
            margin_blocked = true;
            dt *= 0.5;
        }
        if (!stepped) {
            rep.status = margin_blocked ? SolveStatus::LostSpacelike : SolveStatus::Stalled;
            rep.iterations = iter - 1;
            return finish(obj, u, std::move(rep), params);
        }

        rep.iterations = iter;
        rep.residual_history.push_back(sup_norm(ev.residual));
        rep.margin_history.push_back(ev.graph.min_margin());
        rep.mean_history.push_back(u.mean());

        if (drift_detected(rep, params)) {
            rep.status = SolveStatus::NoSolutionDetected;
            return finish(obj, u, std::move(rep), params);
        }
    }

    rep.status = SolveStatus::MaxIters;
    rep.iterations = params.max_flow;
    return finish(obj, u, std::move(rep), params);
}

// ---- deterministic initializations -------------------------------------------------

namespace {

double unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

double symmetric_double(std::mt19937_64& rng) { return 2.0 * unit_double(rng) - 1.0; }

}  // namespace

ScalarField band_limited_noise(const FiberGrid& grid, std::uint64_t seed, int max_mode) {
    std::mt19937_64 rng(seed);
    ScalarField v(grid);
    const double two_pi = 6.283185307179586476925286766559;
    if (grid.dim() == 1) {
        for (int m = 1; m <= max_mode; ++m) {
            const double a = symmetric_double(rng);
            const double b = symmetric_double(rng);
            for (int node = 0; node < grid.node_count(); ++node) {
                const double x = node * grid.spacing(0);
                const double phase = two_pi * m * x / grid.length(0);
                v[node] += a * std::cos(phase) + b * std::sin(phase);
            }
        }
    } else {
        for (int mx = 0; mx <= max_mode; ++mx) {
            for (int my = 0; my <= max_mode; ++my) {
                if (mx == 0 && my == 0) continue;
                const double a = symmetric_double(rng);
                const double b = symmetric_double(rng);
                double x[2];
                for (int node = 0; node < grid.node_count(); ++node) {
                    grid.coords(node, x);
                    const double phase = two_pi * (mx * x[0] / grid.length(0) +
                                                   my * x[1] / grid.length(1));
                    v[node] += a * std::cos(phase) + b * std::sin(phase);
                }
            }
        }
    }
    const double norm = v.max_abs();
    if (norm > 0.0)
        for (double& val : v.values()) val /= norm;
    return v;
}

ScalarField random_spacelike_init(const SpacetimeModel& model, const FiberGrid& grid,
                                  double center, std::uint64_t seed, int max_mode,
                                  double amplitude_frac) {
    if (!model.interval().contains(center))
        throw OutOfInterval("random_spacelike_init: center outside model interval");
    const ScalarField noise = band_limited_noise(grid, seed, max_mode);

    auto feasible = [&](double s) {
        ScalarField u(grid);
        for (int node = 0; node < grid.node_count(); ++node)
            u[node] = center + s * noise[node];
        try {
            SpacelikeGraph g(model, u);
            return g.min_margin() > 0.0;
        } catch (const OutOfInterval&) {
            return false;
        }
    };

    double lo = 0.0, hi = 1e-3;
    while (hi < 1e6 && feasible(hi)) {
        lo = hi;
        hi *= 2.0;
    }
    if (lo == 0.0) throw NotSpacelike("random_spacelike_init: no feasible amplitude");
    for (int k = 0; k < 40; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            lo = mid;
        else
            hi = mid;
    }

    const double s = amplitude_frac * lo;
    ScalarField u(grid);
    for (int node = 0; node < grid.node_count(); ++node)
        u[node] = center + s * noise[node];
    return u;
}

}  // namespace maxslice
